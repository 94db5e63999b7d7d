#pragma once

// End-to-end pipelines: correlators in (simulated or measured), verdict out,
// plus the white-noise robustness bisection.

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "npacert/hierarchy.hpp"
#include "npacert/quantum.hpp"
#include "npacert/sdp.hpp"

namespace npacert {

struct SimulatedSource {
  StateSpec state;
  SuiteKind suite = SuiteKind::W;
  double visibility = 1.0;
};

struct MeasuredSource {
  CorrelatorTable table;
};

using Source = std::variant<SimulatedSource, MeasuredSource>;

struct AnalysisRequest {
  Source source;
  Scenario scenario{3, 2};
  int level = 2;
  PinPolicy policy = PinAll{};
  SolverConfig solver;
  AssembleOptions assembly;
};

enum class Verdict { Nonlocal, Inconclusive };

inline const char* to_string(Verdict v) {
  return v == Verdict::Nonlocal ? "NONLOCAL" : "INCONCLUSIVE";
}

struct VerdictReport {
  Verdict verdict = Verdict::Inconclusive;
  SolveStatus status = SolveStatus::Undecided;
  double lambda_star = 0.0;
  Eigen::VectorXd v_star;
  std::optional<DualCertificate> certificate;
  std::optional<CertificateCheck> certificate_check;
  std::vector<PinnedMoment> pinned;
  std::vector<std::string> variable_labels;
  Scenario scenario{3, 2};
  int level = 2;
  PinPolicy policy = PinAll{};
  SolverConfig config;
  AssembleOptions assembly;
  int iterations = 0;
  double wall_time_s = 0.0;
};

inline const char* state_name(StateKind kind) {
  switch (kind) {
    case StateKind::W: return "w";
    case StateKind::GHZ: return "ghz";
    case StateKind::GraphLinear: return "graph-linear";
    case StateKind::GraphLoop: return "graph-loop";
    case StateKind::Basis: return "basis";
    case StateKind::MaximallyMixed: return "mixed";
  }
  return "unknown";
}

inline const char* suite_name(SuiteKind kind) {
  switch (kind) {
    case SuiteKind::W: return "w";
    case SuiteKind::GHZ: return "ghz";
    case SuiteKind::Graph: return "graph";
  }
  return "unknown";
}

inline CorrelatorTable simulate_table(const SimulatedSource& source,
                                      const MomentMatrixStructure& structure) {
  const QuantumState pure = make_state(source.state, structure.scenario().parties());
  const QuantumState noisy = add_white_noise(pure, source.visibility);
  return correlator_table(noisy, standard_suite(source.suite), structure);
}

inline VerdictReport analyze(const AnalysisRequest& request) {
  const auto start = std::chrono::steady_clock::now();

  std::optional<MomentMatrixStructure> structure;
  try {
    structure.emplace(build_structure(request.scenario, request.level));
  } catch (const Error& e) {
    throw e.with_stage("structure");
  }

  std::optional<CorrelatorTable> table;
  try {
    if (const auto* sim = std::get_if<SimulatedSource>(&request.source)) {
      table.emplace(simulate_table(*sim, *structure));
    } else {
      table.emplace(std::get<MeasuredSource>(request.source).table);
    }
  } catch (const Error& e) {
    throw e.with_stage("correlators");
  }

  std::optional<AffineMatrixFamily> family;
  try {
    family.emplace(assemble(*structure, *table, request.policy, request.assembly));
  } catch (const Error& e) {
    throw e.with_stage("assembly");
  }

  SolveOutcome outcome;
  try {
    outcome = maximize_lambda_min(*family, request.solver);
  } catch (const Error& e) {
    throw e.with_stage("solve");
  }

  VerdictReport report;
  report.status = outcome.status;
  report.lambda_star = outcome.lambda_star;
  report.v_star = outcome.v_star;
  report.certificate = outcome.certificate;
  if (outcome.certificate)
    report.certificate_check =
        check_certificate(*family, *outcome.certificate, request.solver.tol_cert);
  report.verdict = outcome.status == SolveStatus::CertifiedInfeasible ? Verdict::Nonlocal
                                                                      : Verdict::Inconclusive;
  report.pinned = family->pinned;
  for (const MomentRef& ref : family->variable_refs) report.variable_labels.push_back(label(ref));
  report.scenario = request.scenario;
  report.level = request.level;
  report.policy = request.policy;
  report.config = request.solver;
  report.assembly = request.assembly;
  report.iterations = outcome.iterations;
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

struct RobustnessResult {
  double p_star = 0.0;
  double lower = 0.0;  // INCONCLUSIVE endpoint
  double upper = 1.0;  // NONLOCAL endpoint
  std::map<double, Verdict> probes;
};

struct RobustnessRequest {
  StateSpec state;
  SuiteKind suite = SuiteKind::W;
  Scenario scenario{3, 2};
  int level = 2;
  PinPolicy policy = PinAll{};
  double tolerance = 1e-2;
  SolverConfig solver;
};

/// Bisects the visibility p between an INCONCLUSIVE and a NONLOCAL endpoint.
/// The bracket is checked after every step; the final endpoints are re-solved
/// with a different restart seed so an unstable verdict raises NoBracket
/// instead of producing a silent answer.
inline RobustnessResult robustness(const RobustnessRequest& request) {
  if (!(request.tolerance > 0.0 && request.tolerance < 1.0))
    throw Error(ErrorKind::InvalidArgument, "bisection tolerance must be in (0, 1)");

  RobustnessResult result;
  auto verdict_at = [&](double p, std::uint64_t seed) {
    AnalysisRequest r;
    r.source = SimulatedSource{request.state, request.suite, p};
    r.scenario = request.scenario;
    r.level = request.level;
    r.policy = request.policy;
    r.solver = request.solver;
    r.solver.seed = seed;
    return analyze(r).verdict;
  };
  auto probe = [&](double p) {
    auto it = result.probes.find(p);
    if (it != result.probes.end()) return it->second;
    const Verdict v = verdict_at(p, request.solver.seed);
    result.probes.emplace(p, v);
    return v;
  };
  auto check_bracket = [&](double lo, double hi) {
    if (probe(lo) != Verdict::Inconclusive || probe(hi) != Verdict::Nonlocal)
      throw Error(ErrorKind::NoBracket,
                  "no NONLOCAL/INCONCLUSIVE bracket on [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "]");
  };

  double lo = 0.0, hi = 1.0;
  check_bracket(lo, hi);
  while (hi - lo > request.tolerance) {
    const double mid = 0.5 * (lo + hi);
    if (probe(mid) == Verdict::Nonlocal)
      hi = mid;
    else
      lo = mid;
    check_bracket(lo, hi);
  }
  if (verdict_at(lo, request.solver.seed + 1) != Verdict::Inconclusive ||
      verdict_at(hi, request.solver.seed + 1) != Verdict::Nonlocal)
    throw Error(ErrorKind::NoBracket, "bracket endpoints changed verdict on re-solve");

  result.lower = lo;
  result.upper = hi;
  result.p_star = 0.5 * (lo + hi);
  return result;
}

}  // namespace npacert
