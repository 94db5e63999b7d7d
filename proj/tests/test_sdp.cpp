#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "npacert/quantum.hpp"
#include "npacert/sdp.hpp"
#include "oracles.hpp"

using namespace npacert;

namespace {

double f(const AffineMatrixFamily& fam, const Eigen::VectorXd& v) { return oracle::lambda_min(fam.evaluate(v)); }

AffineMatrixFamily two_by_two() {
  return AffineMatrixFamily(Eigen::MatrixXd::Identity(2, 2), {{{0, 1}}}, {Bounds{}});
}

AffineMatrixFamily diag_one_minus_one() {
  return AffineMatrixFamily((Eigen::MatrixXd(2, 2) << 1, 0, 0, -1).finished(), {}, {});
}

AffineMatrixFamily w_family() {
  const auto s = build_structure(Scenario(3, 2), 2);
  const auto table =
      correlator_table(make_state({StateKind::W, {}}, 3), standard_suite(SuiteKind::W), s);
  return assemble(s, table, PinAll{});
}

SolverConfig quick(int iters = 1500) {
  SolverConfig c;
  c.max_iters = iters;
  c.restarts = 2;
  return c;
}

}  // namespace

TEST(MinEigen, Examples) {
  const EigenPair id = min_eigen(Eigen::MatrixXd::Identity(3, 3));
  EXPECT_NEAR(id.value, 1.0, 1e-14);
  EXPECT_NEAR(id.vector.norm(), 1.0, 1e-14);

  const EigenPair d = min_eigen((Eigen::MatrixXd(2, 2) << 1, 0, 0, -1).finished());
  EXPECT_NEAR(d.value, -1.0, 1e-14);
  EXPECT_NEAR(std::abs(d.vector(1)), 1.0, 1e-14);

  const EigenPair h = min_eigen((Eigen::MatrixXd(2, 2) << 1, 0.5, 0.5, 1).finished());
  EXPECT_NEAR(h.value, 0.5, 1e-14);
  EXPECT_NEAR(std::abs(h.vector(0) + h.vector(1)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(h.vector(0)), 1.0 / std::sqrt(2.0), 1e-12);
}

TEST(MinEigen, ResidualOnRandomSymmetric) {
  std::mt19937 rng(5);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial;
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = g(rng);
    const Eigen::MatrixXd m = a + a.transpose();
    const EigenPair ep = min_eigen(m);
    EXPECT_LE((m * ep.vector - ep.value * ep.vector).norm(), 1e-8);
    EXPECT_NEAR(ep.vector.norm(), 1.0, 1e-12);
  }
}

TEST(MinEigen, RejectsAsymmetricInput) {
  try {
    min_eigen((Eigen::MatrixXd(2, 2) << 1, 0.1, 0, 1).finished());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidArgument);
  }
}

TEST(MaximizeLambdaMin, TwoByTwoIsFeasibleAtZero) {
  const SolveOutcome out = maximize_lambda_min(two_by_two(), quick());
  EXPECT_EQ(out.status, SolveStatus::Feasible);
  EXPECT_NEAR(out.lambda_star, 1.0, 1e-6);
  EXPECT_NEAR(out.v_star(0), 0.0, 1e-6);
  EXPECT_FALSE(out.certificate.has_value());
}

TEST(MaximizeLambdaMin, DiagonalWithoutVariables) {
  const AffineMatrixFamily fam = diag_one_minus_one();
  const SolveOutcome out = maximize_lambda_min(fam, quick());
  EXPECT_EQ(out.status, SolveStatus::CertifiedInfeasible);
  EXPECT_NEAR(out.lambda_star, -1.0, 1e-12);
  ASSERT_TRUE(out.certificate);
  EXPECT_NEAR(out.certificate->value, -1.0, 1e-9);
  EXPECT_NEAR(out.certificate->z(1, 1), 1.0, 1e-9);
  EXPECT_NEAR(out.certificate->z(0, 0), 0.0, 1e-9);
}

TEST(MaximizeLambdaMin, StopsAtDiagonalCeiling) {
  const SolveOutcome out = maximize_lambda_min(two_by_two(), SolverConfig{});
  EXPECT_EQ(out.iterations, 1);
  EXPECT_EQ(out.status, SolveStatus::Feasible);
  EXPECT_DOUBLE_EQ(out.lambda_star, 1.0);
}

TEST(MinEigen, AgreesWithDenseSolver) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const AffineMatrixFamily fam = fixture::random_family(seed, 46, 3);
    const Eigen::MatrixXd m = fam.evaluate(Eigen::VectorXd::Constant(fam.variable_count(), 0.3));
    EXPECT_NEAR(min_eigen(m).value, oracle::lambda_min(m), 1e-10);
  }
}

TEST(MaximizeLambdaMin, RejectsDimensionZero) {
  const AffineMatrixFamily empty(Eigen::MatrixXd(0, 0), {}, {});
  EXPECT_THROW(maximize_lambda_min(empty, quick()), Error);
}

TEST(MaximizeLambdaMin, BestHistoryIsMonotone) {
  const SolveOutcome out = maximize_lambda_min(fixture::random_family(17), quick(800));
  ASSERT_FALSE(out.best_history.empty());
  for (std::size_t i = 1; i < out.best_history.size(); ++i)
    EXPECT_GE(out.best_history[i], out.best_history[i - 1]);
}

TEST(MaximizeLambdaMin, ObjectiveIsConcave) {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> u(-1.0, 1.0), theta(0.0, 1.0);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const AffineMatrixFamily fam = fixture::random_family(seed);
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::VectorXd a(fam.variable_count()), b(fam.variable_count());
      for (int k = 0; k < a.size(); ++k) {
        a(k) = u(rng);
        b(k) = u(rng);
      }
      const double t = theta(rng);
      EXPECT_GE(f(fam, t * a + (1 - t) * b), t * f(fam, a) + (1 - t) * f(fam, b) - 1e-9);
    }
  }
}

TEST(MaximizeLambdaMin, AgreesWithGridOracleAndDuality) {
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    const AffineMatrixFamily fam = fixture::random_family(seed);
    const SolveOutcome out = maximize_lambda_min(fam, quick(2000));
    const Eigen::VectorXd lo = Eigen::VectorXd::Constant(fam.variable_count(), -1.0);
    const auto [best, at] = oracle::grid_refine_max(
        [&](const Eigen::VectorXd& v) { return f(fam, v); }, lo, -lo, 15, 40);
    EXPECT_NEAR(out.lambda_star, best, 1e-3) << "seed " << seed;
    if (out.status == SolveStatus::Feasible) {
      EXPECT_GE(f(fam, out.v_star), -1e-8);
    }
    if (out.certificate) {
      const CertificateCheck check = check_certificate(fam, *out.certificate, 1e-7);
      EXPECT_TRUE(check.valid) << check.reason;
      EXPECT_LE(out.lambda_star, check.bound + 1e-6);
      EXPECT_LE(best, check.bound + 1e-6);
    }
  }
}

TEST(VerifyCertificate, HandBuiltAndAdversarial) {
  const AffineMatrixFamily diag = diag_one_minus_one();
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(2, 2);
  z(1, 1) = 1.0;
  EXPECT_TRUE(verify_certificate(diag, {z, -1.0}, 1e-7));
  EXPECT_FALSE(verify_certificate(diag, {z, -0.5}, 1e-7));

  // Tr deviation.
  EXPECT_FALSE(verify_certificate(diag, {z * (1 + 1e-5), -1.0 - 1e-5}, 1e-7));
  // Negative eigenvalue with correct trace.
  Eigen::MatrixXd neg = Eigen::MatrixXd::Zero(2, 2);
  neg(0, 0) = -1e-4;
  neg(1, 1) = 1.0 + 1e-4;
  EXPECT_FALSE(verify_certificate(diag, {neg, -1.0 - 2e-4}, 1e-7));

  // A variable on the off-diagonal: I/dim is orthogonal to it, but a shifted
  // off-diagonal entry is not.
  const AffineMatrixFamily fam(
      (Eigen::MatrixXd(3, 3) << 1, 0.9, 0, 0.9, 1, 0.9, 0, 0.9, 1).finished(), {{{0, 2}}}, {Bounds{}});
  Eigen::MatrixXd zi = Eigen::MatrixXd::Identity(3, 3) / 3.0;
  EXPECT_TRUE(verify_certificate(fam, {zi, fam.gamma0().cwiseProduct(zi).sum()}, 1e-7));

  const AffineMatrixFamily hits_diagonal_support(
      Eigen::MatrixXd::Identity(2, 2), {{{0, 1}}}, {Bounds{}});
  Eigen::MatrixXd ones = Eigen::MatrixXd::Constant(2, 2, 0.5);
  EXPECT_FALSE(verify_certificate(hits_diagonal_support, {ones, 1.0}, 1e-7));
}

TEST(VerifyCertificate, RejectsSmallPerturbationAlongVariable) {
  const AffineMatrixFamily fam = w_family();
  const SolveOutcome out = maximize_lambda_min(fam, quick(3000));
  ASSERT_TRUE(out.certificate);
  const double tol = 1e-7;
  ASSERT_TRUE(verify_certificate(fam, *out.certificate, tol));
  for (int k : {0, fam.variable_count() / 2, fam.variable_count() - 1}) {
    DualCertificate bad = *out.certificate;
    const auto [i, j] = fam.supports()[static_cast<std::size_t>(k)].front();
    bad.z(i, j) += 5.0 * tol;
    bad.z(j, i) += 5.0 * tol;
    EXPECT_FALSE(verify_certificate(fam, bad, tol)) << "variable " << k;
  }
}

TEST(WFamily, MatchesReferenceOptimum) {
  // Independent interior-point reference for this family: -0.17809455.
  const AffineMatrixFamily fam = w_family();
  EXPECT_EQ(fam.dim(), 22);
  EXPECT_EQ(fam.variable_count(), 30);
  const SolveOutcome out = maximize_lambda_min(fam, SolverConfig{});
  EXPECT_EQ(out.status, SolveStatus::CertifiedInfeasible);
  EXPECT_NEAR(out.lambda_star, -0.17809455, 1e-4);
  ASSERT_TRUE(out.certificate);
  EXPECT_LT(out.certificate->value, -1e-3);
  EXPECT_LE(out.lambda_star, out.certificate->value + 1e-6);

  // No sampled point of the box does better.
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    Eigen::VectorXd v(fam.variable_count());
    for (int k = 0; k < v.size(); ++k) v(k) = u(rng);
    EXPECT_LE(f(fam, v), out.lambda_star + 1e-9);
  }
}

TEST(ReferenceOptima, GhzAndGraphFamilies) {
  // Interior-point references from tests/reference/reference_sdp.py.
  struct Case {
    StateKind state;
    SuiteKind suite;
    int settings;
    double lambda;
  };
  for (const Case& c : {Case{StateKind::GHZ, SuiteKind::GHZ, 2, -0.0944539},
                        Case{StateKind::GraphLinear, SuiteKind::Graph, 3, -0.19729117},
                        Case{StateKind::GraphLoop, SuiteKind::Graph, 3, -0.60659799}}) {
    const auto s = build_structure(Scenario(3, c.settings), 2);
    const auto fam = assemble(s, correlator_table(make_state({c.state, {}}, 3), standard_suite(c.suite), s),
                              PinAll{});
    const SolveOutcome out = maximize_lambda_min(fam, SolverConfig{});
    EXPECT_NEAR(out.lambda_star, c.lambda, 1e-4);
    EXPECT_EQ(out.status, SolveStatus::CertifiedInfeasible);
  }
}

TEST(ExtractCertificate, EmptyTraceIsAnError) {
  EXPECT_THROW(extract_certificate(two_by_two(), IterateTrace{}, 1e-7), Error);
}

TEST(SolverConfig, Validation) {
  SolverConfig c;
  c.margin = 1e-8;
  EXPECT_THROW(c.validate(), Error);
  c = SolverConfig{};
  c.max_iters = 0;
  EXPECT_THROW(c.validate(), Error);
}
