#pragma once

// Measurement scenarios and words of local dichotomic observables under the
// fully commuting relaxation: letters from any two parties commute, letters of
// the same party commute as well, and every letter squares to the identity.
// A canonical word is therefore a set of (party, setting) letters.

#include <algorithm>
#include <bit>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "npacert/error.hpp"

namespace npacert {

/// (N, m, d) with d fixed at 2. Parties are indexed from 0 internally and
/// printed as A, B, C, ...; settings are 0-based throughout.
class Scenario {
 public:
  static constexpr int kMaxParties = 26;
  static constexpr int kMaxSettings = 32;

  Scenario(int parties, int settings, int outcomes = 2)
      : parties_(parties), settings_(settings) {
    if (parties < 1 || parties > kMaxParties)
      throw Error(ErrorKind::InvalidArgument,
                  "parties must be in [1, 26], got " + std::to_string(parties));
    if (settings < 1 || settings > kMaxSettings)
      throw Error(ErrorKind::InvalidArgument,
                  "settings must be in [1, 32], got " + std::to_string(settings));
    if (outcomes != 2)
      throw Error(ErrorKind::InvalidArgument,
                  "only dichotomic measurements (outcomes = 2) are supported, got " +
                      std::to_string(outcomes));
  }

  int parties() const noexcept { return parties_; }
  int settings() const noexcept { return settings_; }
  static constexpr int outcomes() noexcept { return 2; }
  int letter_count() const noexcept { return parties_ * settings_; }

  friend bool operator==(const Scenario&, const Scenario&) = default;

 private:
  int parties_;
  int settings_;
};

struct Letter {
  int party = 0;
  int setting = 0;

  friend auto operator<=>(const Letter&, const Letter&) = default;
};

inline std::string party_name(int party) {
  return std::string(1, static_cast<char>('A' + party));
}

/// Canonical product of letters: one bitmask of settings per party.
class OperatorWord {
 public:
  explicit OperatorWord(const Scenario& scenario)
      : scenario_(scenario), masks_(static_cast<std::size_t>(scenario.parties()), 0u) {}

  /// Folds an arbitrary factor sequence into canonical form.
  static OperatorWord from_factors(const Scenario& scenario,
                                   std::span<const Letter> factors) {
    OperatorWord word(scenario);
    for (const Letter& f : factors) word.multiply_letter(f);
    return word;
  }

  /// Parses labels like "A0B1" or "A0A1C2"; "I" and "" denote the unit.
  static OperatorWord parse(const Scenario& scenario, std::string_view label) {
    OperatorWord word(scenario);
    if (label.empty() || label == "I") return word;
    std::size_t pos = 0;
    while (pos < label.size()) {
      char c = label[pos];
      if (c < 'A' || c > 'Z')
        throw Error(ErrorKind::InvalidArgument,
                    "bad word label '" + std::string(label) + "'");
      ++pos;
      std::size_t start = pos;
      while (pos < label.size() && label[pos] >= '0' && label[pos] <= '9') ++pos;
      if (start == pos)
        throw Error(ErrorKind::InvalidArgument,
                    "missing setting index in '" + std::string(label) + "'");
      int setting = std::stoi(std::string(label.substr(start, pos - start)));
      word.multiply_letter({c - 'A', setting});
    }
    return word;
  }

  const Scenario& scenario() const noexcept { return scenario_; }

  bool is_unit() const noexcept {
    return std::all_of(masks_.begin(), masks_.end(), [](std::uint32_t m) { return m == 0; });
  }

  std::uint32_t settings_of(int party) const { return masks_.at(static_cast<std::size_t>(party)); }

  int length() const noexcept {
    int n = 0;
    for (std::uint32_t m : masks_) n += std::popcount(m);
    return n;
  }

  /// Letters sorted by (party, setting).
  std::vector<Letter> letters() const {
    std::vector<Letter> out;
    for (int p = 0; p < scenario_.parties(); ++p) {
      std::uint32_t m = masks_[static_cast<std::size_t>(p)];
      for (int s = 0; s < scenario_.settings(); ++s)
        if (m & (1u << s)) out.push_back({p, s});
    }
    return out;
  }

  /// Maximum number of letters any single party contributes.
  int max_letters_per_party() const noexcept {
    int best = 0;
    for (std::uint32_t m : masks_) best = std::max(best, std::popcount(m));
    return best;
  }

  std::string label() const {
    if (is_unit()) return "I";
    std::string out;
    for (const Letter& l : letters()) out += party_name(l.party) + std::to_string(l.setting);
    return out;
  }

  void multiply_letter(const Letter& letter) {
    if (letter.party < 0 || letter.party >= scenario_.parties() || letter.setting < 0 ||
        letter.setting >= scenario_.settings())
      throw Error(ErrorKind::InvalidArgument,
                  "letter (" + std::to_string(letter.party) + ", " +
                      std::to_string(letter.setting) + ") outside scenario");
    masks_[static_cast<std::size_t>(letter.party)] ^= (1u << letter.setting);
  }

  friend bool operator==(const OperatorWord& a, const OperatorWord& b) {
    return a.scenario_ == b.scenario_ && a.masks_ == b.masks_;
  }

  /// Basis order: shorter words first, then lexicographic on sorted letters.
  friend bool operator<(const OperatorWord& a, const OperatorWord& b) {
    int la = a.length(), lb = b.length();
    if (la != lb) return la < lb;
    return a.letters() < b.letters();
  }

  std::span<const std::uint32_t> masks() const noexcept { return masks_; }

 private:
  Scenario scenario_;
  std::vector<std::uint32_t> masks_;
};

/// Canonical form of left^dagger * right. Letters are Hermitian and commute,
/// so the adjoint is the identity and the product is a per-party symmetric
/// difference.
inline OperatorWord word_product(const OperatorWord& left, const OperatorWord& right) {
  if (!(left.scenario() == right.scenario()))
    throw Error(ErrorKind::ScenarioMismatch, "word_product: words from different scenarios");
  OperatorWord out(left.scenario());
  for (int p = 0; p < left.scenario().parties(); ++p) {
    std::uint32_t m = left.settings_of(p) ^ right.settings_of(p);
    for (int s = 0; s < left.scenario().settings(); ++s)
      if (m & (1u << s)) out.multiply_letter({p, s});
  }
  return out;
}

/// Observable correlator label: at most one setting per party, non-empty,
/// sorted by party.
class MomentKey {
 public:
  MomentKey() = default;

  explicit MomentKey(std::vector<Letter> letters) : letters_(std::move(letters)) {
    if (letters_.empty())
      throw Error(ErrorKind::InvalidArgument, "moment key must be non-empty");
    std::sort(letters_.begin(), letters_.end());
    for (std::size_t i = 1; i < letters_.size(); ++i)
      if (letters_[i].party == letters_[i - 1].party)
        throw Error(ErrorKind::InvalidArgument,
                    "moment key has two settings for party " + party_name(letters_[i].party));
  }

  const std::vector<Letter>& letters() const noexcept { return letters_; }
  int body_count() const noexcept { return static_cast<int>(letters_.size()); }

  /// Throws unless every letter lies inside the scenario.
  void check_within(const Scenario& scenario) const {
    for (const Letter& l : letters_)
      if (l.party < 0 || l.party >= scenario.parties() || l.setting < 0 ||
          l.setting >= scenario.settings())
        throw Error(ErrorKind::InvalidArgument,
                    "moment key " + label() + " lies outside the scenario");
  }

  std::string label() const {
    std::string out;
    for (const Letter& l : letters_) out += party_name(l.party) + std::to_string(l.setting);
    return out;
  }

  friend auto operator<=>(const MomentKey&, const MomentKey&) = default;
  friend bool operator==(const MomentKey&, const MomentKey&) = default;

 private:
  std::vector<Letter> letters_;
};

struct UnitRef {
  friend bool operator==(const UnitRef&, const UnitRef&) = default;
};
struct ObservableRef {
  MomentKey key;
  friend bool operator==(const ObservableRef&, const ObservableRef&) = default;
};
/// Unobservable moment; the canonical word itself is the variable identity.
struct FreeVarRef {
  OperatorWord word;
  friend bool operator==(const FreeVarRef&, const FreeVarRef&) = default;
};

using MomentRef = std::variant<UnitRef, ObservableRef, FreeVarRef>;

inline MomentRef classify(const OperatorWord& word) {
  if (word.is_unit()) return UnitRef{};
  if (word.max_letters_per_party() <= 1) return ObservableRef{MomentKey(word.letters())};
  return FreeVarRef{word};
}

inline std::string label(const MomentRef& ref) {
  if (std::holds_alternative<UnitRef>(ref)) return "1";
  if (const auto* obs = std::get_if<ObservableRef>(&ref)) return "<" + obs->key.label() + ">";
  return "<" + std::get<FreeVarRef>(ref).word.label() + ">";
}

/// All canonical words of at most `level` letters, in basis order: unit,
/// single letters by (party, setting), then longer words lexicographically.
inline std::vector<OperatorWord> generate_basis(const Scenario& scenario, int level) {
  if (level < 1)
    throw Error(ErrorKind::InvalidArgument,
                "hierarchy level must be >= 1, got " + std::to_string(level));
  std::vector<Letter> alphabet;
  for (int p = 0; p < scenario.parties(); ++p)
    for (int s = 0; s < scenario.settings(); ++s) alphabet.push_back({p, s});

  std::vector<OperatorWord> basis{OperatorWord(scenario)};
  const int n = static_cast<int>(alphabet.size());
  const int max_len = std::min(level, n);
  // Combinations in lexicographic order of index tuples.
  for (int len = 1; len <= max_len; ++len) {
    std::vector<int> idx(static_cast<std::size_t>(len));
    for (int i = 0; i < len; ++i) idx[static_cast<std::size_t>(i)] = i;
    while (true) {
      OperatorWord w(scenario);
      for (int i : idx) w.multiply_letter(alphabet[static_cast<std::size_t>(i)]);
      basis.push_back(std::move(w));
      int i = len - 1;
      while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - len + i) --i;
      if (i < 0) break;
      ++idx[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < len; ++j)
        idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return basis;
}

}  // namespace npacert
