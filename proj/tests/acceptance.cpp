// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "npacert/io.hpp"
#include "oracles.hpp"

using namespace npacert;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string cell(const MomentMatrixStructure& s, int i, int j) { return label(s.ref(i - 1, j - 1)); }

bool same_matrix(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  return (a - b).cwiseAbs().maxCoeff() < 1e-12;
}

AnalysisRequest simulated(StateSpec state, SuiteKind suite, Scenario scenario, PinPolicy policy = PinAll{}) {
  AnalysisRequest r;
  r.source = SimulatedSource{std::move(state), suite, 1.0};
  r.scenario = scenario;
  r.policy = std::move(policy);
  return r;
}

/// Independent +-1 hidden variables per (party, setting) with the product
/// state's local means: E[m m^T] has entry prod_{letters of the reduced word} mean.
Eigen::MatrixXd classical_completion(const MomentMatrixStructure& s, const CorrelatorTable& t) {
  Eigen::MatrixXd g(s.dim(), s.dim());
  for (int i = 0; i < s.dim(); ++i)
    for (int j = 0; j < s.dim(); ++j) {
      std::vector<oracle::LetterPair> factors;
      for (const auto* w : {&s.basis()[static_cast<std::size_t>(i)], &s.basis()[static_cast<std::size_t>(j)]})
        for (const Letter& l : w->letters()) factors.emplace_back(l.party, l.setting);
      double value = 1.0;
      for (const auto& [p, st] : oracle::fold(factors)) value *= t.at(MomentKey({{p, st}})).value;
      g(i, j) = value;
    }
  return g;
}

Outcome golden_two_party() {
  Outcome o;
  const auto s = build_structure(Scenario(2, 2), 2);
  o.require(s.dim() == 11, "dim 11");
  o.require(s.observables().size() == 8, "8 observable keys");
  o.require(s.freevars().size() == 7, "7 free variables");
  o.require(cell(s, 3, 6) == "<A0>", "v6 -> <A0>");
  o.require(cell(s, 5, 11) == "<B0>", "v8 -> <B0>");
  o.require(cell(s, 6, 9) == "<A0B0>" && cell(s, 8, 11) == "<A0B0>", "v9 = v14 -> <A0B0>");
  o.require(cell(s, 6, 10) == "<A0B1>", "v10 -> <A0B1>");
  o.require(cell(s, 10, 11) == "<A1B0>", "v15 -> <A1B0>");
  o.require(s.ref(5, 10) == s.ref(6, 9) && s.ref(6, 9) == s.ref(7, 8), "v11 = v12 = v13");
  o.detail << "dim " << s.dim() << ", " << s.observables().size() << " observables, "
           << s.freevars().size() << " free variables";
  return o;
}

Outcome three_party_structure() {
  Outcome o;
  const auto s = build_structure(Scenario(3, 2), 2);
  o.require(s.dim() == 22, "dim 22");
  bool unit_diag = true;
  for (int i = 0; i < s.dim(); ++i) unit_diag &= s.slot(i, i).kind == MomentMatrixStructure::SlotKind::Unit;
  o.require(unit_diag, "unit diagonal");
  o.require(s.observables().size() == 26, "26 observables");
  o.require(cell(s, 4, 12) == "<A0B0C1>", "(4,12) = A0B0C1");
  const Assignment a = assignment_for(MomentKey({{0, 0}, {1, 0}, {2, 1}}), standard_suite(SuiteKind::W));
  o.require(same_matrix(a.at(0), pauli::X()) && same_matrix(a.at(1), pauli::X()) &&
                same_matrix(a.at(2), pauli::Z()),
            "A0B0C1 = X (x) X (x) Z under the W suite");
  o.detail << "dim " << s.dim() << ", " << s.observables().size() << " observables, (4,12) "
           << cell(s, 4, 12);
  return o;
}

Outcome w_detection() {
  Outcome o;
  const VerdictReport r = analyze(simulated({StateKind::W, {}}, SuiteKind::W, Scenario(3, 2)));
  o.require(r.status == SolveStatus::CertifiedInfeasible, "CERTIFIED_INFEASIBLE");
  o.require(r.certificate && r.certificate_check && r.certificate_check->valid, "verified certificate");
  o.require(r.certificate && r.certificate->value < -1e-3, "certificate value < -1e-3");
  o.detail << "lambda* " << r.lambda_star;
  if (r.certificate) o.detail << ", certificate value " << r.certificate->value;
  return o;
}

Outcome ghz_contrast() {
  Outcome o;
  const VerdictReport all = analyze(simulated({StateKind::GHZ, {}}, SuiteKind::GHZ, Scenario(3, 2)));
  const VerdictReport two =
      analyze(simulated({StateKind::GHZ, {}}, SuiteKind::GHZ, Scenario(3, 2), PinMaxBodies{2}));
  o.require(all.verdict == Verdict::Nonlocal, "All -> NONLOCAL");
  o.require(two.verdict == Verdict::Inconclusive, "MaxBodies(2) -> INCONCLUSIVE");
  o.detail << "All: " << to_string(all.verdict) << " (lambda* " << all.lambda_star
           << "), MaxBodies(2): " << to_string(two.verdict) << " (lambda* " << two.lambda_star << ")";
  return o;
}

Outcome graph_states() {
  Outcome o;
  for (auto kind : {StateKind::GraphLinear, StateKind::GraphLoop}) {
    const auto t0 = Clock::now();
    const VerdictReport r = analyze(simulated({kind, {}}, SuiteKind::Graph, Scenario(3, 3)));
    const double dt = seconds_since(t0);
    const std::string name = state_name(kind);
    o.require(r.verdict == Verdict::Nonlocal, name + " NONLOCAL");
    o.require(r.certificate_check && r.certificate_check->valid, name + " certificate verified");
    o.require(dt < 300.0, name + " under 5 min");
    o.detail << name << " lambda* " << r.lambda_star << " (" << dt << " s); ";
  }
  return o;
}

Outcome separable_soundness() {
  Outcome o;
  for (auto suite : {SuiteKind::W, SuiteKind::GHZ, SuiteKind::Graph}) {
    const Scenario scenario(3, standard_suite(suite).settings());
    const auto s = build_structure(scenario, 2);
    for (const StateSpec& state : {StateSpec{StateKind::Basis, "000"}, StateSpec{StateKind::MaximallyMixed, {}}}) {
      const std::string name = std::string(state_name(state.kind)) + "/" + suite_name(suite);
      const AnalysisRequest req = simulated(state, suite, scenario);
      const VerdictReport r = analyze(req);
      const CorrelatorTable table = simulate_table(std::get<SimulatedSource>(req.source), s);
      const AffineMatrixFamily fam = assemble(s, table, PinAll{});
      o.require(r.verdict == Verdict::Inconclusive && r.status == SolveStatus::Feasible,
                name + " INCONCLUSIVE/FEASIBLE");
      o.require(oracle::lambda_min(fam.evaluate(r.v_star)) >= -1e-8, name + " witness PSD");
      o.require(oracle::lambda_min(classical_completion(s, table)) >= -1e-12, name + " classical completion PSD");
    }
  }
  o.detail << "6 solves";
  return o;
}

Outcome correlator_oracles() {
  Outcome o;
  const auto s = build_structure(Scenario(3, 2), 2);
  double worst = 0.0;
  for (auto [kind, suite_kind] : {std::pair{StateKind::W, SuiteKind::W}, {StateKind::GHZ, SuiteKind::GHZ}}) {
    const QuantumState state = make_state({kind, {}}, 3);
    const MeasurementSuite suite = standard_suite(suite_kind);
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(8);
    if (kind == StateKind::W)
      psi(1) = psi(2) = psi(4) = 1.0 / std::sqrt(3.0);
    else
      psi(0) = psi(7) = 1.0 / std::sqrt(2.0);
    for (const MomentKey& key : s.observables()) {
      const Assignment a = assignment_for(key, suite);
      const double e = expectation(state, a);
      worst = std::max(worst, std::abs(e - correlator_from_probabilities(born_distribution(state, a))));
      worst = std::max(worst, std::abs(e - oracle::sandwich(psi, 3, a).real()));
    }
  }
  o.require(worst <= 1e-9, "Born-rule and amplitude oracles within 1e-9");
  const QuantumState w = make_state({StateKind::W, {}}, 3);
  const QuantumState ghz = make_state({StateKind::GHZ, {}}, 3);
  const auto X = pauli::X(), Z = pauli::Z();
  o.require(std::abs(expectation(w, {{0, Z}}) - 1.0 / 3.0) <= 1e-9, "W <Z1> = 1/3");
  o.require(std::abs(expectation(w, {{0, Z}, {1, Z}, {2, Z}}) + 1.0) <= 1e-9, "W <ZZZ> = -1");
  o.require(std::abs(expectation(ghz, {{0, X}, {1, X}, {2, X}}) - 1.0) <= 1e-9, "GHZ <XXX> = 1");
  o.detail << "max deviation " << worst << " over 52 correlators";
  return o;
}

Outcome solver_validation() {
  Outcome o;
  const SolverConfig config;
  double worst_gap = 0.0, worst_grid = 0.0;
  int certificates = 0;
  for (std::uint64_t seed = 1000; seed < 1020; ++seed) {
    const AffineMatrixFamily fam = fixture::random_family(seed);
    const SolveOutcome out = maximize_lambda_min(fam, config);
    const Eigen::VectorXd hi = Eigen::VectorXd::Ones(fam.variable_count());
    const auto [best, at] = oracle::grid_refine_max(
        [&](const Eigen::VectorXd& v) { return oracle::lambda_min(fam.evaluate(v)); }, -hi, hi, 15, 40);
    worst_grid = std::max(worst_grid, std::abs(out.lambda_star - best));
    if (out.certificate) {
      ++certificates;
      const CertificateCheck check = check_certificate(fam, *out.certificate, config.tol_cert);
      o.require(check.valid, "certificate for seed " + std::to_string(seed) + " verifies");
      worst_gap = std::max(worst_gap, out.lambda_star - check.bound);
    }
  }
  o.require(worst_grid <= 1e-3, "grid agreement within 1e-3");
  o.require(worst_gap <= 1e-6, "weak duality within 1e-6");
  o.detail << "max |lambda* - grid| " << worst_grid << ", " << certificates
           << " certificates, max lambda* - bound " << worst_gap;
  return o;
}

Outcome noise_robustness() {
  Outcome o;
  RobustnessRequest req;
  req.state = {StateKind::W, {}};
  req.suite = SuiteKind::W;
  req.tolerance = 1e-2;
  const RobustnessResult r = robustness(req);
  o.require(r.upper - r.lower <= 1e-2, "bracket width <= 1e-2");
  o.require(r.probes.at(1.0) == Verdict::Nonlocal, "p = 1 NONLOCAL");
  o.require(r.probes.at(0.0) == Verdict::Inconclusive, "p = 0 INCONCLUSIVE");

  const auto s = build_structure(Scenario(3, 2), 2);
  const CorrelatorTable pure = simulate_table({req.state, req.suite, 1.0}, s);
  double worst = 0.0;
  for (double p : {0.0, 0.25, 0.5, r.p_star, 0.9}) {
    const CorrelatorTable noisy = simulate_table({req.state, req.suite, p}, s);
    for (const auto& [key, mv] : pure) worst = std::max(worst, std::abs(noisy.at(key).value - p * mv.value));
  }
  o.require(worst <= 1e-10, "scaling law within 1e-10");
  o.detail << "p* " << r.p_star << " in [" << r.lower << ", " << r.upper << "], " << r.probes.size()
           << " probes, scaling deviation " << worst;
  return o;
}

Outcome round_trip() {
  Outcome o;
  const AnalysisRequest sim = simulated({StateKind::W, {}}, SuiteKind::W, Scenario(3, 2));
  const VerdictReport a = analyze(sim);
  const auto s = build_structure(Scenario(3, 2), 2);
  const std::string text = table_to_json(simulate_table(std::get<SimulatedSource>(sim.source), s)).dump(2);
  AnalysisRequest measured = sim;
  measured.source = MeasuredSource{ingest_table_text(text)};
  const VerdictReport b = analyze(measured);
  o.require(a.verdict == b.verdict, "identical verdict");
  o.require(std::abs(a.lambda_star - b.lambda_star) <= 1e-9, "lambda* within 1e-9");
  o.detail << to_string(a.verdict) << " / " << to_string(b.verdict) << ", |delta lambda*| "
           << std::abs(a.lambda_star - b.lambda_star);
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "two-party level-2 golden structure", 1.0, golden_two_party},
      {2, "three-party level-2 structure", 1.0, three_party_structure},
      {3, "W state detection", 60.0, w_detection},
      {4, "GHZ full-body vs two-body contrast", 120.0, ghz_contrast},
      {5, "graph states (3,3,2)", 600.0, graph_states},
      {6, "separable soundness", 10.0, separable_soundness},
      {7, "correlator oracle equivalence", 5.0, correlator_oracles},
      {8, "solver validation on random families", 120.0, solver_validation},
      {9, "white-noise robustness", 600.0, noise_robustness},
      {10, "table round trip", 60.0, round_trip},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double dt = seconds_since(t0);
    if (dt > c.limit_s) {
      o.pass = false;
      o.detail << " [over time limit " << c.limit_s << " s]";
    }
    failures += !o.pass;
    std::printf("%s  %2d  %-40s %7.2f s  %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, dt,
                o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
