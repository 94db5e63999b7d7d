#pragma once

// Dense few-qubit simulation standing in for the experiment: states,
// measurement suites, correlators, white noise, fidelity.
//
// Party p (0-based) is tensor factor p counted from the left, i.e. bit
// (n - 1 - p) of a computational basis index.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "npacert/hierarchy.hpp"
#include "npacert/table.hpp"

namespace npacert {

using cplx = std::complex<double>;

class QuantumState {
 public:
  static constexpr double kHermitianTol = 1e-12;
  static constexpr double kTraceTol = 1e-12;
  static constexpr double kPsdTol = -1e-10;

  QuantumState(int qubits, Eigen::MatrixXcd rho) : qubits_(qubits), rho_(std::move(rho)) {
    if (qubits < 1 || qubits > 12)
      throw Error(ErrorKind::InvalidArgument, "qubit count must be in [1, 12]");
    const Eigen::Index d = Eigen::Index{1} << qubits;
    if (rho_.rows() != d || rho_.cols() != d)
      throw Error(ErrorKind::InvalidArgument, "density matrix has wrong dimension");
    if ((rho_ - rho_.adjoint()).cwiseAbs().maxCoeff() > kHermitianTol)
      throw Error(ErrorKind::InvalidArgument, "density matrix is not Hermitian");
    if (std::abs(rho_.trace() - cplx(1.0)) > kTraceTol)
      throw Error(ErrorKind::InvalidArgument, "density matrix trace differs from 1");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < kPsdTol)
      throw Error(ErrorKind::InvalidArgument, "density matrix is not positive semidefinite");
  }

  static QuantumState pure(int qubits, const Eigen::VectorXcd& psi) {
    const Eigen::VectorXcd unit = psi / psi.norm();
    Eigen::MatrixXcd rho = unit * unit.adjoint();
    rho = 0.5 * (rho + rho.adjoint()).eval();
    return QuantumState(qubits, rho);
  }

  static QuantumState maximally_mixed(int qubits) {
    const Eigen::Index d = Eigen::Index{1} << qubits;
    return QuantumState(qubits, Eigen::MatrixXcd::Identity(d, d) / static_cast<double>(d));
  }

  int qubits() const noexcept { return qubits_; }
  Eigen::Index dim() const noexcept { return rho_.rows(); }
  const Eigen::MatrixXcd& rho() const noexcept { return rho_; }

 private:
  int qubits_;
  Eigen::MatrixXcd rho_;
};

enum class StateKind { W, GHZ, GraphLinear, GraphLoop, Basis, MaximallyMixed };

struct StateSpec {
  StateKind kind = StateKind::W;
  std::string bits;  // Basis only, party 1 first
};

/// |+>^n followed by CZ on every edge (0-based qubit pairs).
inline QuantumState graph_state(int qubits, const std::vector<std::pair<int, int>>& edges) {
  const Eigen::Index d = Eigen::Index{1} << qubits;
  Eigen::VectorXcd psi = Eigen::VectorXcd::Constant(d, 1.0);
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= qubits || b >= qubits || a == b)
      throw Error(ErrorKind::InvalidArgument, "graph edge outside qubit range");
    const int ba = qubits - 1 - a, bb = qubits - 1 - b;
    for (Eigen::Index i = 0; i < d; ++i)
      if (((i >> ba) & 1) && ((i >> bb) & 1)) psi(i) = -psi(i);
  }
  return QuantumState::pure(qubits, psi);
}

inline QuantumState make_state(const StateSpec& spec, int qubits) {
  const auto dim = [&] { return Eigen::Index{1} << qubits; };
  switch (spec.kind) {
    case StateKind::W: {
      if (qubits < 2) break;
      Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim());
      for (int q = 0; q < qubits; ++q) psi(Eigen::Index{1} << q) = 1.0;
      return QuantumState::pure(qubits, psi);
    }
    case StateKind::GHZ: {
      if (qubits < 2) break;
      Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim());
      psi(0) = psi(dim() - 1) = 1.0;
      return QuantumState::pure(qubits, psi);
    }
    case StateKind::GraphLinear:
      if (qubits != 3) break;
      return graph_state(3, {{0, 1}, {1, 2}});
    case StateKind::GraphLoop:
      if (qubits != 3) break;
      return graph_state(3, {{0, 1}, {1, 2}, {0, 2}});
    case StateKind::Basis: {
      if (qubits < 1 || static_cast<int>(spec.bits.size()) != qubits) break;
      Eigen::Index index = 0;
      for (char c : spec.bits) {
        if (c != '0' && c != '1')
          throw Error(ErrorKind::InvalidArgument, "basis bitstring must contain only 0/1");
        index = (index << 1) | (c == '1');
      }
      Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim());
      psi(index) = 1.0;
      return QuantumState::pure(qubits, psi);
    }
    case StateKind::MaximallyMixed:
      if (qubits < 1) break;
      return QuantumState::maximally_mixed(qubits);
  }
  throw Error(ErrorKind::InvalidArgument,
              "unsupported state / qubit-count combination (n = " + std::to_string(qubits) + ")");
}

namespace pauli {
inline Eigen::Matrix2cd I() { return Eigen::Matrix2cd::Identity(); }
inline Eigen::Matrix2cd X() { return (Eigen::Matrix2cd() << 0, 1, 1, 0).finished(); }
inline Eigen::Matrix2cd Y() {
  return (Eigen::Matrix2cd() << 0, cplx(0, -1), cplx(0, 1), 0).finished();
}
inline Eigen::Matrix2cd Z() { return (Eigen::Matrix2cd() << 1, 0, 0, -1).finished(); }
}  // namespace pauli

enum class SuiteKind { W, GHZ, Graph };

/// Single-qubit +-1 observables per party and setting.
class MeasurementSuite {
 public:
  static constexpr double kInvolutionTol = 1e-12;

  /// Same observables for every party.
  explicit MeasurementSuite(std::vector<Eigen::Matrix2cd> settings)
      : per_party_{std::move(settings)}, uniform_(true) {
    validate();
  }

  explicit MeasurementSuite(std::vector<std::vector<Eigen::Matrix2cd>> per_party)
      : per_party_(std::move(per_party)), uniform_(false) {
    validate();
  }

  int settings() const noexcept { return static_cast<int>(per_party_.front().size()); }
  bool uniform() const noexcept { return uniform_; }
  bool covers(const Scenario& s) const {
    return s.settings() <= settings() &&
           (uniform_ || s.parties() <= static_cast<int>(per_party_.size()));
  }

  const Eigen::Matrix2cd& observable(int party, int setting) const {
    const auto& ops = per_party_.at(uniform_ ? 0 : static_cast<std::size_t>(party));
    return ops.at(static_cast<std::size_t>(setting));
  }

 private:
  void validate() const {
    if (per_party_.empty() || per_party_.front().empty())
      throw Error(ErrorKind::InvalidArgument, "measurement suite is empty");
    for (const auto& ops : per_party_) {
      if (ops.size() != per_party_.front().size())
        throw Error(ErrorKind::InvalidArgument, "parties must share the setting count");
      for (const auto& m : ops) {
        if ((m - m.adjoint()).cwiseAbs().maxCoeff() > kInvolutionTol)
          throw Error(ErrorKind::InvalidArgument, "suite observable is not Hermitian");
        if ((m * m - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff() > kInvolutionTol)
          throw Error(ErrorKind::InvalidArgument, "suite observable does not square to I");
      }
    }
  }

  std::vector<std::vector<Eigen::Matrix2cd>> per_party_;
  bool uniform_;
};

inline MeasurementSuite standard_suite(SuiteKind kind) {
  const Eigen::Matrix2cd diag = (pauli::Z() + pauli::X()) / std::sqrt(2.0);
  switch (kind) {
    case SuiteKind::W: return MeasurementSuite({pauli::X(), pauli::Z()});
    case SuiteKind::GHZ: return MeasurementSuite({pauli::X(), diag});
    case SuiteKind::Graph: return MeasurementSuite({pauli::X(), pauli::Z(), diag});
  }
  throw Error(ErrorKind::InvalidArgument, "unknown suite");
}

/// Local observable assignment: party (0-based) -> 2x2 operator.
using Assignment = std::map<int, Eigen::Matrix2cd>;

namespace detail {
inline Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Eigen::MatrixXcd tensor_extend(int qubits, const Assignment& assignment) {
  Eigen::MatrixXcd op = Eigen::MatrixXcd::Identity(1, 1);
  for (int q = 0; q < qubits; ++q) {
    auto it = assignment.find(q);
    const Eigen::MatrixXcd factor = it == assignment.end() ? Eigen::MatrixXcd(pauli::I()) : Eigen::MatrixXcd(it->second);
    op = kron(op, factor);
  }
  return op;
}

inline void check_assignment(int qubits, const Assignment& assignment) {
  if (assignment.empty())
    throw Error(ErrorKind::InvalidArgument, "observable assignment is empty");
  for (const auto& [party, op] : assignment) {
    if (party < 0 || party >= qubits)
      throw Error(ErrorKind::InvalidArgument, "assignment party outside state");
    if ((op - op.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
      throw Error(ErrorKind::InvalidArgument, "assignment operator is not Hermitian");
  }
}
}  // namespace detail

/// Tr(O rho) for O = tensor product of the assignment with identities elsewhere.
inline double expectation(const QuantumState& state, const Assignment& assignment) {
  detail::check_assignment(state.qubits(), assignment);
  const Eigen::MatrixXcd op = detail::tensor_extend(state.qubits(), assignment);
  const cplx value = (op * state.rho()).trace();
  if (std::abs(value.imag()) > 1e-10)
    throw Error(ErrorKind::Numerical, "expectation has a non-negligible imaginary part");
  return value.real();
}

/// Born-rule outcome distribution for measuring each assigned +-1 observable.
/// Keys list outcomes in ascending party order, '0' for eigenvalue +1 and
/// '1' for eigenvalue -1.
inline std::map<std::string, double> born_distribution(const QuantumState& state,
                                                       const Assignment& assignment) {
  detail::check_assignment(state.qubits(), assignment);
  std::vector<int> parties;
  std::map<int, std::pair<Eigen::Matrix2cd, Eigen::Matrix2cd>> projectors;  // (+1, -1)
  for (const auto& [party, op] : assignment) {
    parties.push_back(party);
    const Eigen::Matrix2cd plus = (pauli::I() + op) / 2.0;
    projectors[party] = {plus, pauli::I() - plus};
  }
  std::map<std::string, double> out;
  const std::size_t k = parties.size();
  for (std::size_t outcome = 0; outcome < (std::size_t{1} << k); ++outcome) {
    Assignment proj;
    std::string bits;
    for (std::size_t i = 0; i < k; ++i) {
      const bool minus = (outcome >> (k - 1 - i)) & 1;
      const auto& pp = projectors[parties[i]];
      proj[parties[i]] = minus ? pp.second : pp.first;
      bits += minus ? '1' : '0';
    }
    const Eigen::MatrixXcd op = detail::tensor_extend(state.qubits(), proj);
    out[bits] = std::max(0.0, (op * state.rho()).trace().real());
  }
  return out;
}

/// Sum over outcomes of (-1)^(number of 1s) * p.
inline double correlator_from_probabilities(const std::map<std::string, double>& probabilities) {
  if (probabilities.empty())
    throw Error(ErrorKind::InvalidArgument, "empty outcome distribution");
  const std::size_t width = probabilities.begin()->first.size();
  double total = 0.0, corr = 0.0;
  for (const auto& [bits, p] : probabilities) {
    if (bits.size() != width || bits.empty())
      throw Error(ErrorKind::InvalidArgument, "outcome strings must share a nonzero length");
    int parity = 0;
    for (char c : bits) {
      if (c != '0' && c != '1')
        throw Error(ErrorKind::InvalidArgument, "outcome strings must contain only 0/1");
      parity ^= (c == '1');
    }
    if (!std::isfinite(p) || p < 0.0)
      throw Error(ErrorKind::InvalidArgument, "negative probability for outcome " + bits);
    total += p;
    corr += parity ? -p : p;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw Error(ErrorKind::InvalidArgument, "probabilities do not sum to 1");
  return corr;
}

inline Assignment assignment_for(const MomentKey& key, const MeasurementSuite& suite) {
  Assignment a;
  for (const Letter& l : key.letters()) a[l.party] = suite.observable(l.party, l.setting);
  return a;
}

inline CorrelatorTable correlator_table(const QuantumState& state, const MeasurementSuite& suite,
                                        const MomentMatrixStructure& structure) {
  const Scenario& scenario = structure.scenario();
  if (!suite.covers(scenario))
    throw Error(ErrorKind::InvalidArgument, "suite does not cover the scenario's settings");
  if (state.qubits() != scenario.parties())
    throw Error(ErrorKind::InvalidArgument, "state qubit count differs from party count");
  CorrelatorTable table(scenario);
  for (const MomentKey& key : structure.observables()) {
    double value = expectation(state, assignment_for(key, suite));
    if (std::abs(value) <= 1.0 + CorrelatorTable::kRangeSlack) value = std::clamp(value, -1.0, 1.0);
    table.insert(key, value);
  }
  return table;
}

/// p * rho + (1 - p) * I / 2^n.
inline QuantumState add_white_noise(const QuantumState& state, double visibility) {
  if (!(visibility >= 0.0 && visibility <= 1.0))
    throw Error(ErrorKind::RangeError, "visibility must be in [0, 1]");
  const Eigen::Index d = state.dim();
  Eigen::MatrixXcd rho = visibility * state.rho() +
                         (1.0 - visibility) / static_cast<double>(d) *
                             Eigen::MatrixXcd::Identity(d, d);
  return QuantumState(state.qubits(), rho);
}

namespace detail {
inline Eigen::MatrixXcd psd_sqrt(const Eigen::MatrixXcd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (a + a.adjoint()));
  Eigen::VectorXd ev = es.eigenvalues();
  if (ev.minCoeff() < -1e-10)
    throw Error(ErrorKind::Numerical, "matrix square root of an indefinite matrix");
  // Round-off eigenvalues of rank-deficient states would otherwise leak
  // ~1e-8 into the root.
  ev = (ev.array() < 1e-14).select(0.0, ev).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}
}  // namespace detail

/// Uhlmann fidelity [Tr sqrt(sqrt(a) b sqrt(a))]^2, evaluated as the squared
/// nuclear norm of sqrt(a) sqrt(b).
inline double fidelity(const QuantumState& a, const QuantumState& b) {
  if (a.dim() != b.dim())
    throw Error(ErrorKind::InvalidArgument, "fidelity: state dimensions differ");
  const Eigen::MatrixXcd product = detail::psd_sqrt(a.rho()) * detail::psd_sqrt(b.rho());
  const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(product);
  const double f = std::pow(svd.singularValues().sum(), 2);
  if (f < -1e-9 || f > 1.0 + 1e-9) throw Error(ErrorKind::Numerical, "fidelity out of range");
  return std::clamp(f, 0.0, 1.0);
}

}  // namespace npacert
