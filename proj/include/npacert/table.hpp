#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>

#include "npacert/algebra.hpp"

namespace npacert {

struct MomentValue {
  double value = 0.0;
  std::optional<double> sigma;
};

/// Measured or simulated correlators keyed by observable moment.
class CorrelatorTable {
 public:
  static constexpr double kRangeSlack = 1e-9;

  explicit CorrelatorTable(const Scenario& scenario) : scenario_(scenario) {}

  const Scenario& scenario() const noexcept { return scenario_; }

  void insert(const MomentKey& key, double value, std::optional<double> sigma = std::nullopt) {
    key.check_within(scenario_);
    if (!std::isfinite(value) || std::abs(value) > 1.0 + kRangeSlack)
      throw Error(ErrorKind::RangeError,
                  "moment " + key.label() + " value " + std::to_string(value) +
                      " outside [-1, 1]");
    if (sigma && (!std::isfinite(*sigma) || *sigma < 0.0))
      throw Error(ErrorKind::RangeError, "moment " + key.label() + " has negative sigma");
    auto [it, inserted] = entries_.emplace(key, MomentValue{value, sigma});
    if (!inserted)
      throw Error(ErrorKind::DuplicateMoment, "duplicate moment " + key.label());
  }

  bool contains(const MomentKey& key) const { return entries_.count(key) != 0; }

  const MomentValue& at(const MomentKey& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end())
      throw Error(ErrorKind::MissingMoment, "missing moment " + key.label());
    return it->second;
  }

  std::size_t size() const noexcept { return entries_.size(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  Scenario scenario_;
  std::map<MomentKey, MomentValue> entries_;
};

}  // namespace npacert
