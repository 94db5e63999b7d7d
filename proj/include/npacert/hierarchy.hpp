#pragma once

// Symbolic moment matrix for the commuting hierarchy and its numeric affine
// family Gamma(v) = gamma0 + sum_k v_k G_k.

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "npacert/algebra.hpp"
#include "npacert/table.hpp"

namespace npacert {

using Position = std::pair<int, int>;  // (row, col), row < col

class MomentMatrixStructure {
 public:
  enum class SlotKind { Unit, Observable, FreeVar };
  struct Slot {
    SlotKind kind = SlotKind::Unit;
    int index = -1;  // into observables() or freevars()
  };

  const Scenario& scenario() const noexcept { return scenario_; }
  int level() const noexcept { return level_; }
  int dim() const noexcept { return static_cast<int>(basis_.size()); }
  const std::vector<OperatorWord>& basis() const noexcept { return basis_; }
  const std::vector<MomentKey>& observables() const noexcept { return observables_; }
  const std::vector<OperatorWord>& freevars() const noexcept { return freevars_; }

  /// Symmetric access; only the upper triangle is stored.
  const Slot& slot(int i, int j) const {
    if (i > j) std::swap(i, j);
    return slots_.at(upper_index(i, j));
  }

  MomentRef ref(int i, int j) const {
    const Slot& s = slot(i, j);
    switch (s.kind) {
      case SlotKind::Unit: return UnitRef{};
      case SlotKind::Observable: return ObservableRef{observables_[static_cast<std::size_t>(s.index)]};
      case SlotKind::FreeVar: return FreeVarRef{freevars_[static_cast<std::size_t>(s.index)]};
    }
    return UnitRef{};
  }

  /// Off-diagonal upper-triangle positions carrying each observable / free variable.
  const std::vector<std::vector<Position>>& observable_positions() const noexcept {
    return observable_positions_;
  }
  const std::vector<std::vector<Position>>& freevar_positions() const noexcept {
    return freevar_positions_;
  }

  int find_observable(const MomentKey& key) const {
    auto it = std::find(observables_.begin(), observables_.end(), key);
    return it == observables_.end() ? -1 : static_cast<int>(it - observables_.begin());
  }

  friend MomentMatrixStructure build_structure(const Scenario& scenario, int level);

 private:
  MomentMatrixStructure(const Scenario& scenario, int level) : scenario_(scenario), level_(level) {}

  std::size_t upper_index(int i, int j) const {
    const auto n = static_cast<std::size_t>(dim());
    const auto r = static_cast<std::size_t>(i);
    return r * n - r * (r - 1) / 2 + static_cast<std::size_t>(j - i);
  }

  Scenario scenario_;
  int level_;
  std::vector<OperatorWord> basis_;
  std::vector<Slot> slots_;
  std::vector<MomentKey> observables_;
  std::vector<OperatorWord> freevars_;
  std::vector<std::vector<Position>> observable_positions_;
  std::vector<std::vector<Position>> freevar_positions_;
};

/// entries(i, j) = classify(O[i] * O[j]). Observables and free variables are
/// numbered by first appearance in a row-major scan of the upper triangle.
inline MomentMatrixStructure build_structure(const Scenario& scenario, int level) {
  MomentMatrixStructure s(scenario, level);
  s.basis_ = generate_basis(scenario, level);
  const int n = s.dim();
  s.slots_.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(n + 1) / 2);

  std::map<MomentKey, int> obs_index;
  std::map<std::vector<std::uint32_t>, int> var_index;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const OperatorWord w = word_product(s.basis_[static_cast<std::size_t>(i)],
                                          s.basis_[static_cast<std::size_t>(j)]);
      MomentMatrixStructure::Slot slot;
      const MomentRef ref = classify(w);
      if (const auto* obs = std::get_if<ObservableRef>(&ref)) {
        auto [it, fresh] = obs_index.emplace(obs->key, static_cast<int>(s.observables_.size()));
        if (fresh) {
          s.observables_.push_back(obs->key);
          s.observable_positions_.emplace_back();
        }
        slot = {MomentMatrixStructure::SlotKind::Observable, it->second};
        s.observable_positions_[static_cast<std::size_t>(it->second)].emplace_back(i, j);
      } else if (std::holds_alternative<FreeVarRef>(ref)) {
        std::vector<std::uint32_t> id(w.masks().begin(), w.masks().end());
        auto [it, fresh] = var_index.emplace(std::move(id), static_cast<int>(s.freevars_.size()));
        if (fresh) {
          s.freevars_.push_back(w);
          s.freevar_positions_.emplace_back();
        }
        slot = {MomentMatrixStructure::SlotKind::FreeVar, it->second};
        s.freevar_positions_[static_cast<std::size_t>(it->second)].emplace_back(i, j);
      }
      s.slots_[s.upper_index(i, j)] = slot;
    }
  }
  return s;
}

struct PinAll {};
struct PinMaxBodies {
  int max_bodies = 0;
};
struct PinExplicit {
  std::vector<MomentKey> keys;
};

/// Which observable moments are fixed to data.
using PinPolicy = std::variant<PinAll, PinMaxBodies, PinExplicit>;

inline bool pins(const PinPolicy& policy, const MomentKey& key) {
  if (std::holds_alternative<PinAll>(policy)) return true;
  if (const auto* mb = std::get_if<PinMaxBodies>(&policy)) return key.body_count() <= mb->max_bodies;
  const auto& keys = std::get<PinExplicit>(policy).keys;
  return std::find(keys.begin(), keys.end(), key) != keys.end();
}

inline std::string describe(const PinPolicy& policy) {
  if (std::holds_alternative<PinAll>(policy)) return "all";
  if (const auto* mb = std::get_if<PinMaxBodies>(&policy))
    return "max-bodies:" + std::to_string(mb->max_bodies);
  return "explicit:" + std::to_string(std::get<PinExplicit>(policy).keys.size());
}

struct Bounds {
  double lo = -1.0;
  double hi = 1.0;
};

struct PinnedMoment {
  MomentKey key;
  double value = 0.0;
  std::optional<double> sigma;
  bool interval = false;  // pinned as a bounded variable rather than a point
};

/// Numeric Gamma(v) = gamma0 + sum_k v_k G_k. Each G_k is a symmetric 0/1
/// pattern given by its upper-triangle support; supports are disjoint.
class AffineMatrixFamily {
 public:
  AffineMatrixFamily(Eigen::MatrixXd gamma0, std::vector<std::vector<Position>> supports,
                     std::vector<Bounds> bounds)
      : gamma0_(std::move(gamma0)), supports_(std::move(supports)), bounds_(std::move(bounds)) {
    const int n = dim();
    if (gamma0_.rows() != gamma0_.cols())
      throw Error(ErrorKind::InvalidArgument, "gamma0 must be square");
    if (n > 0 && (gamma0_ - gamma0_.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw Error(ErrorKind::InvalidArgument, "gamma0 must be symmetric");
    if (bounds_.size() != supports_.size())
      throw Error(ErrorKind::InvalidArgument, "one bound interval per basis matrix required");
    Eigen::MatrixXi seen = Eigen::MatrixXi::Zero(n, n);
    for (const auto& support : supports_) {
      if (support.empty())
        throw Error(ErrorKind::InvalidArgument, "basis matrix with empty support");
      for (auto [i, j] : support) {
        if (i < 0 || j >= n || i >= j)
          throw Error(ErrorKind::InvalidArgument, "support positions must be strictly upper");
        if (seen(i, j)++)
          throw Error(ErrorKind::InvalidArgument, "basis supports must be disjoint");
      }
    }
    for (const Bounds& b : bounds_)
      if (!(b.lo <= b.hi))
        throw Error(ErrorKind::InvalidArgument, "empty variable bound interval");
  }

  int dim() const noexcept { return static_cast<int>(gamma0_.rows()); }
  int variable_count() const noexcept { return static_cast<int>(supports_.size()); }
  const Eigen::MatrixXd& gamma0() const noexcept { return gamma0_; }
  const std::vector<std::vector<Position>>& supports() const noexcept { return supports_; }
  const std::vector<Bounds>& bounds() const noexcept { return bounds_; }

  Eigen::MatrixXd basis_matrix(int k) const {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(dim(), dim());
    for (auto [i, j] : supports_[static_cast<std::size_t>(k)]) g(i, j) = g(j, i) = 1.0;
    return g;
  }

  Eigen::MatrixXd evaluate(const Eigen::VectorXd& v) const {
    Eigen::MatrixXd m = gamma0_;
    for (int k = 0; k < variable_count(); ++k)
      for (auto [i, j] : supports_[static_cast<std::size_t>(k)]) {
        m(i, j) += v(k);
        m(j, i) += v(k);
      }
    return m;
  }

  /// Frobenius inner product <G_k, Z> for a symmetric Z.
  double basis_inner(int k, const Eigen::MatrixXd& z) const {
    double s = 0.0;
    for (auto [i, j] : supports_[static_cast<std::size_t>(k)]) s += z(i, j) + z(j, i);
    return s;
  }

  // Provenance for variables and pins; empty for hand-built families.
  std::vector<MomentRef> variable_refs;
  std::vector<PinnedMoment> pinned;

 private:
  Eigen::MatrixXd gamma0_;
  std::vector<std::vector<Position>> supports_;
  std::vector<Bounds> bounds_;
};

struct AssembleOptions {
  /// When set, a pinned moment with sigma becomes a variable bounded by
  /// value +- interval_k * sigma (intersected with [-1, 1]).
  std::optional<double> interval_k;
};

inline AffineMatrixFamily assemble(const MomentMatrixStructure& structure,
                                   const CorrelatorTable& table, const PinPolicy& policy,
                                   const AssembleOptions& options = {}) {
  if (!(table.scenario() == structure.scenario()))
    throw Error(ErrorKind::ScenarioMismatch, "correlator table scenario differs from structure");
  if (const auto* ex = std::get_if<PinExplicit>(&policy))
    for (const MomentKey& key : ex->keys)
      if (structure.find_observable(key) < 0)
        throw Error(ErrorKind::InvalidArgument,
                    "explicit pin " + key.label() + " is not an observable of this structure");
  if (options.interval_k && !(*options.interval_k >= 0.0))
    throw Error(ErrorKind::InvalidArgument, "interval multiplier must be nonnegative");

  const int n = structure.dim();
  Eigen::MatrixXd gamma0 = Eigen::MatrixXd::Identity(n, n);
  std::vector<std::vector<Position>> supports;
  std::vector<Bounds> bounds;
  std::vector<MomentRef> refs;
  std::vector<PinnedMoment> pinned;

  for (std::size_t f = 0; f < structure.freevars().size(); ++f) {
    supports.push_back(structure.freevar_positions()[f]);
    bounds.push_back({-1.0, 1.0});
    refs.push_back(FreeVarRef{structure.freevars()[f]});
  }
  for (std::size_t o = 0; o < structure.observables().size(); ++o) {
    const MomentKey& key = structure.observables()[o];
    const auto& positions = structure.observable_positions()[o];
    if (!pins(policy, key)) {
      supports.push_back(positions);
      bounds.push_back({-1.0, 1.0});
      refs.push_back(ObservableRef{key});
      continue;
    }
    const MomentValue& mv = table.at(key);
    if (std::abs(mv.value) > 1.0 + CorrelatorTable::kRangeSlack)
      throw Error(ErrorKind::RangeError, "moment " + key.label() + " outside [-1, 1]");
    const double value = std::clamp(mv.value, -1.0, 1.0);
    if (options.interval_k && mv.sigma && *mv.sigma > 0.0) {
      const double half = *options.interval_k * *mv.sigma;
      supports.push_back(positions);
      bounds.push_back({std::max(-1.0, value - half), std::min(1.0, value + half)});
      refs.push_back(ObservableRef{key});
      pinned.push_back({key, value, mv.sigma, true});
      continue;
    }
    for (auto [i, j] : positions) gamma0(i, j) = gamma0(j, i) = value;
    pinned.push_back({key, value, mv.sigma, false});
  }

  AffineMatrixFamily family(std::move(gamma0), std::move(supports), std::move(bounds));
  family.variable_refs = std::move(refs);
  family.pinned = std::move(pinned);
  return family;
}

inline nlohmann::json scenario_json(const Scenario& s) {
  return {{"parties", s.parties()}, {"settings", s.settings()}, {"outcomes", 2}};
}

/// Moment key as {"parties": [1-based], "settings": [0-based]}.
inline nlohmann::json key_json(const MomentKey& key) {
  nlohmann::json parties = nlohmann::json::array(), settings = nlohmann::json::array();
  for (const Letter& l : key.letters()) {
    parties.push_back(l.party + 1);
    settings.push_back(l.setting);
  }
  return {{"parties", parties}, {"settings", settings}};
}

/// Golden-file friendly description of a structure. Matrix cells read "1"
/// for the unit, "<A0B1>" for observables and "v<k>" (1-based) for free
/// variables.
inline nlohmann::json structure_report(const MomentMatrixStructure& s) {
  using nlohmann::json;
  json basis = json::array();
  for (const auto& w : s.basis()) basis.push_back(w.label());

  json observables = json::array();
  for (const auto& key : s.observables()) {
    json k = key_json(key);
    k["label"] = key.label();
    observables.push_back(std::move(k));
  }
  json freevars = json::array();
  for (std::size_t f = 0; f < s.freevars().size(); ++f)
    freevars.push_back({{"id", f + 1}, {"word", s.freevars()[f].label()}});

  json matrix = json::array();
  for (int i = 0; i < s.dim(); ++i) {
    json row = json::array();
    for (int j = 0; j < s.dim(); ++j) {
      const auto& slot = s.slot(i, j);
      switch (slot.kind) {
        case MomentMatrixStructure::SlotKind::Unit: row.push_back("1"); break;
        case MomentMatrixStructure::SlotKind::Observable:
          row.push_back("<" + s.observables()[static_cast<std::size_t>(slot.index)].label() + ">");
          break;
        case MomentMatrixStructure::SlotKind::FreeVar:
          row.push_back("v" + std::to_string(slot.index + 1));
          break;
      }
    }
    matrix.push_back(std::move(row));
  }

  return {{"schema_version", 1},
          {"kind", "moment_matrix_structure"},
          {"scenario", scenario_json(s.scenario())},
          {"level", s.level()},
          {"dim", s.dim()},
          {"basis", basis},
          {"observables", observables},
          {"free_variables", freevars},
          {"matrix", matrix}};
}

}  // namespace npacert
