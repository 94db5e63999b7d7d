#pragma once

// Feasibility of Gamma(v) >= 0 over a box, posed as maximizing the concave
// function f(v) = lambda_min(Gamma(v)). The main engine is projected
// supergradient ascent with seeded restarts; a log-barrier Newton phase then
// polishes the best point. Infeasibility is reported only together with a dual
// certificate Z (PSD, unit trace, orthogonal to the free directions) that
// verify_certificate re-checks using nothing but an eigendecomposition and
// inner products.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "npacert/hierarchy.hpp"

extern "C" void dsyevr_(const char* jobz, const char* range, const char* uplo, const int* n, double* a,
                        const int* lda, const double* vl, const double* vu, const int* il,
                        const int* iu, const double* abstol, int* m, double* w, double* z,
                        const int* ldz, int* isuppz, double* work, const int* lwork, int* iwork,
                        const int* liwork, int* info);

namespace npacert {

struct SolverConfig {
  int max_iters = 5000;
  double step_scale = 1.0;
  double tol_cert = 1e-7;
  double margin = 1e-3;
  int restarts = 4;
  std::uint64_t seed = 0;
  /// lambda_star >= -feasibility_tol counts as FEASIBLE.
  double feasibility_tol = 1e-9;
  bool polish = true;

  void validate() const {
    if (max_iters < 1) throw Error(ErrorKind::InvalidArgument, "max_iters must be positive");
    if (!(step_scale > 0.0)) throw Error(ErrorKind::InvalidArgument, "step_scale must be positive");
    if (!(tol_cert > 0.0)) throw Error(ErrorKind::InvalidArgument, "tol_cert must be positive");
    if (!(margin > tol_cert))
      throw Error(ErrorKind::InvalidArgument, "margin must exceed tol_cert");
    if (restarts < 1) throw Error(ErrorKind::InvalidArgument, "restarts must be positive");
    if (!(feasibility_tol >= 0.0))
      throw Error(ErrorKind::InvalidArgument, "feasibility_tol must be nonnegative");
  }
};

struct EigenPair {
  double value = 0.0;
  Eigen::VectorXd vector;
};

/// Smallest eigenpair only (LAPACK dsyevr with an index range of one).
inline EigenPair min_eigen(const Eigen::MatrixXd& m) {
  if (m.rows() == 0 || m.rows() != m.cols())
    throw Error(ErrorKind::InvalidArgument, "min_eigen: matrix must be square and non-empty");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw Error(ErrorKind::InvalidArgument, "min_eigen: matrix is not symmetric");
  const int n = static_cast<int>(m.rows());
  thread_local std::vector<double> work;
  thread_local std::vector<int> iwork;
  const int lwork = 26 * n, liwork = 10 * n, one = 1;
  work.resize(static_cast<std::size_t>(lwork));
  iwork.resize(static_cast<std::size_t>(liwork));
  Eigen::MatrixXd a = m;
  Eigen::VectorXd w(n);
  EigenPair out;
  out.vector.resize(n);
  const double unused = 0.0, abstol = 0.0;
  int found = 0, info = 0, isuppz[2];
  dsyevr_("V", "I", "L", &n, a.data(), &n, &unused, &unused, &one, &one, &abstol, &found, w.data(),
          out.vector.data(), &n, isuppz, work.data(), &lwork, iwork.data(), &liwork, &info);
  if (info != 0 || found != 1) throw Error(ErrorKind::Numerical, "eigensolver failed");
  out.value = w(0);
  return out;
}

struct DualCertificate {
  Eigen::MatrixXd z;
  double value = 0.0;  // <gamma0, Z>
};

/// Result of checking a certificate against a family.
struct CertificateCheck {
  bool valid = false;
  /// If valid and bound < 0, no v in the box makes Gamma(v) PSD.
  double bound = std::numeric_limits<double>::infinity();
  std::string reason;
};

enum class SolveStatus { Feasible, CertifiedInfeasible, Undecided };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Feasible: return "FEASIBLE";
    case SolveStatus::CertifiedInfeasible: return "CERTIFIED_INFEASIBLE";
    case SolveStatus::Undecided: return "UNDECIDED";
  }
  return "UNDECIDED";
}

struct SolveOutcome {
  double lambda_star = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd v_star;
  std::optional<DualCertificate> certificate;
  SolveStatus status = SolveStatus::Undecided;
  int iterations = 0;
  std::vector<double> best_history;  // best-so-far per supergradient iteration
};

/// Dual information collected while solving.
struct IterateTrace {
  Eigen::MatrixXd weighted_outer;  // sum_t w_t u_t u_t^T over the tail of the best restart
  double weight = 0.0;
  std::vector<Eigen::MatrixXd> dual_estimates;  // e.g. scaled barrier inverses
  int iterations = 0;
};

namespace detail {

/// A variable whose interval contains [-1, 1] adds no information beyond the
/// unit diagonal, so certificates must be orthogonal to its direction.
inline bool unrestricted(const Bounds& b) { return b.lo <= -1.0 && b.hi >= 1.0; }

inline double frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a.array() * b.array()).sum();
}

inline Eigen::VectorXd supergradient(const AffineMatrixFamily& family, const Eigen::VectorXd& u) {
  Eigen::VectorXd g(family.variable_count());
  for (int k = 0; k < family.variable_count(); ++k) {
    double s = 0.0;
    for (auto [i, j] : family.supports()[static_cast<std::size_t>(k)]) s += u(i) * u(j);
    g(k) = 2.0 * s;
  }
  return g;
}

inline void project_box(const AffineMatrixFamily& family, Eigen::VectorXd& v) {
  for (int k = 0; k < v.size(); ++k) {
    const Bounds& b = family.bounds()[static_cast<std::size_t>(k)];
    v(k) = std::clamp(v(k), b.lo, b.hi);
  }
}

/// Frobenius projection onto {Tr Z = 1, <G_k, Z> = 0 for unrestricted k}.
/// Supports are disjoint and off-diagonal, so the constraints decouple.
inline void project_affine(const AffineMatrixFamily& family, Eigen::MatrixXd& z) {
  const int n = family.dim();
  const double shift = (1.0 - z.trace()) / n;
  z.diagonal().array() += shift;
  for (int k = 0; k < family.variable_count(); ++k) {
    if (!unrestricted(family.bounds()[static_cast<std::size_t>(k)])) continue;
    const auto& support = family.supports()[static_cast<std::size_t>(k)];
    const double excess = family.basis_inner(k, z) / (2.0 * static_cast<double>(support.size()));
    for (auto [i, j] : support) {
      z(i, j) -= excess;
      z(j, i) -= excess;
    }
  }
}

}  // namespace detail

inline CertificateCheck check_certificate(const AffineMatrixFamily& family,
                                          const DualCertificate& cert, double tol) {
  CertificateCheck out;
  const int n = family.dim();
  const Eigen::MatrixXd& z = cert.z;
  if (n == 0 || z.rows() != n || z.cols() != n) {
    out.reason = "dimension mismatch";
    return out;
  }
  if (!z.allFinite()) {
    out.reason = "non-finite entries";
    return out;
  }
  if ((z - z.transpose()).cwiseAbs().maxCoeff() > tol) {
    out.reason = "Z not symmetric";
    return out;
  }
  const Eigen::MatrixXd zs = 0.5 * (z + z.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(zs, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd ev = es.eigenvalues();
  if (ev.minCoeff() < -tol) {
    out.reason = "Z has eigenvalue " + std::to_string(ev.minCoeff());
    return out;
  }
  if (std::abs(zs.trace() - 1.0) > tol) {
    out.reason = "trace deviates from 1";
    return out;
  }
  const double value = detail::frobenius(family.gamma0(), zs);
  if (std::abs(value - cert.value) > tol) {
    out.reason = "stored value does not match <gamma0, Z>";
    return out;
  }
  double slack = 0.0;
  for (int k = 0; k < family.variable_count(); ++k) {
    const Bounds& b = family.bounds()[static_cast<std::size_t>(k)];
    const double c = family.basis_inner(k, zs);
    if (detail::unrestricted(b) && std::abs(c) > tol) {
      out.reason = "<G_" + std::to_string(k) + ", Z> = " + std::to_string(c);
      return out;
    }
    slack += std::max(b.lo * c, b.hi * c);
  }
  // A PSD Gamma(v) has lambda_max <= Tr Gamma(v) = Tr gamma0, which bounds
  // what the negative part of Z can contribute.
  const double negative_mass = -ev.cwiseMin(0.0).sum();
  out.bound = value + slack + std::max(family.gamma0().trace(), 0.0) * negative_mass;
  out.valid = true;
  return out;
}

inline bool verify_certificate(const AffineMatrixFamily& family, const DualCertificate& cert,
                               double tol) {
  return check_certificate(family, cert, tol).valid;
}

/// Builds a certificate from the collected dual information: each candidate
/// (the averaged outer products of minimum eigenvectors, plus any extra dual
/// estimates) is normalized, driven onto the affine set by alternating
/// projections with PSD clipping, and kept only if it verifies. The lowest
/// verified bound wins; no candidate means no certificate.
inline std::optional<DualCertificate> extract_certificate(const AffineMatrixFamily& family,
                                                          const IterateTrace& trace,
                                                          double tol) {
  if (trace.iterations < 1)
    throw Error(ErrorKind::InvalidArgument, "extract_certificate: solver trace is empty");
  std::vector<Eigen::MatrixXd> candidates;
  if (trace.weight > 0.0) candidates.push_back(trace.weighted_outer / trace.weight);
  for (const auto& z : trace.dual_estimates) candidates.push_back(z);

  std::optional<DualCertificate> best;
  double best_bound = std::numeric_limits<double>::infinity();
  for (Eigen::MatrixXd z : candidates) {
    if (z.rows() != family.dim() || !z.allFinite()) continue;
    z = 0.5 * (z + z.transpose()).eval();
    if (!(z.trace() > 0.0)) continue;
    z /= z.trace();
    for (int round = 0; round < 500; ++round) {
      detail::project_affine(family, z);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(z);
      if (es.eigenvalues().minCoeff() >= -0.25 * tol) break;
      z = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() *
          es.eigenvectors().transpose();
    }
    DualCertificate cert{z, detail::frobenius(family.gamma0(), z)};
    const CertificateCheck check = check_certificate(family, cert, tol);
    if (check.valid && check.bound < best_bound) {
      best_bound = check.bound;
      best = std::move(cert);
    }
  }
  return best;
}

namespace detail {

struct BarrierResult {
  Eigen::VectorXd v;
  double lambda = -std::numeric_limits<double>::infinity();
  std::optional<Eigen::MatrixXd> dual;
};

/// Maximizes t subject to Gamma(v) - t I > 0 and the box, by Newton steps on
/// -sigma t - log det(Gamma(v) - t I) - sum log(box slacks) for increasing
/// sigma. Every iterate is strictly feasible, so lambda_min(Gamma(v)) > t.
inline BarrierResult barrier_polish(const AffineMatrixFamily& family, Eigen::VectorXd v0) {
  const int n = family.dim();
  const int kv = family.variable_count();
  const auto& bounds = family.bounds();
  const auto& supports = family.supports();

  std::vector<int> active;
  for (int k = 0; k < kv; ++k) {
    const Bounds& b = bounds[static_cast<std::size_t>(k)];
    if (b.hi - b.lo > 1e-12) {
      active.push_back(k);
      const double mid = 0.5 * (b.lo + b.hi), half = 0.5 * (b.hi - b.lo);
      v0(k) = mid + std::clamp(v0(k) - mid, -0.999 * half, 0.999 * half);
    } else {
      v0(k) = 0.5 * (b.lo + b.hi);
    }
  }
  const int na = static_cast<int>(active.size());
  const int m = n + 2 * na;  // barrier parameter

  BarrierResult result;
  Eigen::VectorXd v = v0;
  double t = min_eigen(family.evaluate(v)).value - 1.0;

  auto objective = [&](const Eigen::VectorXd& vv, double tt, double sigma, bool& ok) {
    Eigen::MatrixXd s = family.evaluate(vv);
    s.diagonal().array() -= tt;
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    ok = llt.info() == Eigen::Success;
    if (!ok) return std::numeric_limits<double>::infinity();
    double logdet = 0.0;
    for (int i = 0; i < n; ++i) logdet += std::log(llt.matrixL()(i, i));
    double phi = -sigma * tt - 2.0 * logdet;
    for (int k : active) {
      const Bounds& b = bounds[static_cast<std::size_t>(k)];
      const double up = b.hi - vv(k), lo = vv(k) - b.lo;
      if (up <= 0.0 || lo <= 0.0) {
        ok = false;
        return std::numeric_limits<double>::infinity();
      }
      phi -= std::log(up) + std::log(lo);
    }
    return phi;
  };

  auto record = [&](const Eigen::VectorXd& vv) {
    const double lam = min_eigen(family.evaluate(vv)).value;
    if (lam > result.lambda) {
      result.lambda = lam;
      result.v = vv;
    }
  };
  record(v);

  Eigen::MatrixXd s = family.evaluate(v);
  s.diagonal().array() -= t;
  double sigma = s.inverse().trace();

  for (int outer = 0; outer < 60; ++outer) {
    Eigen::MatrixXd p;
    bool centered = false;
    for (int newton = 0; newton < 80; ++newton) {
      s = family.evaluate(v);
      s.diagonal().array() -= t;
      Eigen::LLT<Eigen::MatrixXd> llt(s);
      if (llt.info() != Eigen::Success) break;
      p = llt.solve(Eigen::MatrixXd::Identity(n, n));
      p = 0.5 * (p + p.transpose()).eval();
      const Eigen::MatrixXd p2 = p * p;

      Eigen::VectorXd grad(na + 1);
      Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(na + 1, na + 1);
      for (int a = 0; a < na; ++a) {
        const int k = active[static_cast<std::size_t>(a)];
        const Bounds& b = bounds[static_cast<std::size_t>(k)];
        const double up = b.hi - v(k), lo = v(k) - b.lo;
        double gp = 0.0, gp2 = 0.0;
        for (auto [i, j] : supports[static_cast<std::size_t>(k)]) {
          gp += 2.0 * p(i, j);
          gp2 += 2.0 * p2(i, j);
        }
        grad(a) = -gp + 1.0 / up - 1.0 / lo;
        hess(a, a) += 1.0 / (up * up) + 1.0 / (lo * lo);
        hess(a, na) = hess(na, a) = -gp2;
        for (int c = a; c < na; ++c) {
          const int l = active[static_cast<std::size_t>(c)];
          double h = 0.0;
          for (auto [i, j] : supports[static_cast<std::size_t>(k)])
            for (auto [x, y] : supports[static_cast<std::size_t>(l)])
              h += p(i, x) * p(j, y) + p(i, y) * p(j, x);
          hess(a, c) += 2.0 * h;
          if (c != a) hess(c, a) = hess(a, c);
        }
      }
      grad(na) = -sigma + p.trace();
      hess(na, na) = p2.trace();

      const Eigen::VectorXd step = -hess.ldlt().solve(grad);
      if (!step.allFinite()) break;
      const double decrement = -grad.dot(step);
      if (decrement < 2e-10 || decrement != decrement) {
        centered = true;
        break;
      }

      // Largest step keeping the box strictly feasible, then backtracking.
      double alpha = 1.0;
      for (int a = 0; a < na; ++a) {
        const int k = active[static_cast<std::size_t>(a)];
        const Bounds& b = bounds[static_cast<std::size_t>(k)];
        if (step(a) > 0.0) alpha = std::min(alpha, 0.99 * (b.hi - v(k)) / step(a));
        if (step(a) < 0.0) alpha = std::min(alpha, 0.99 * (b.lo - v(k)) / step(a));
      }
      bool ok = true;
      const double phi0 = objective(v, t, sigma, ok);
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
        Eigen::VectorXd vn = v;
        for (int a = 0; a < na; ++a) vn(active[static_cast<std::size_t>(a)]) += alpha * step(a);
        const double tn = t + alpha * step(na);
        const double phi = objective(vn, tn, sigma, ok);
        if (ok && phi <= phi0 - 0.25 * alpha * decrement) {
          v = vn;
          t = tn;
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }
    record(v);
    if (p.size() > 0 && centered) result.dual = p / p.trace();
    if (static_cast<double>(m) / sigma < 1e-11) break;
    sigma *= 8.0;
  }
  return result;
}

}  // namespace detail

/// Projected supergradient ascent on lambda_min(Gamma(v)) over the box with
/// seeded restarts (restart 0 starts at the box center), followed by an
/// optional barrier polish from the best point.
inline SolveOutcome maximize_lambda_min(const AffineMatrixFamily& family,
                                        const SolverConfig& config) {
  config.validate();
  const int n = family.dim();
  const int kv = family.variable_count();
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "degenerate family (dimension 0)");

  SolveOutcome out;
  IterateTrace trace;
  trace.weighted_outer = Eigen::MatrixXd::Zero(n, n);

  double radius = 0.0;
  for (const Bounds& b : family.bounds()) radius = std::max(radius, 0.5 * (b.hi - b.lo));
  const double c = config.step_scale * std::max(radius, 1e-3);

  std::mt19937_64 rng(config.seed);
  const int tail_start = config.max_iters / 2;

  // G_k vanish on the diagonal, so lambda_min never exceeds the smallest
  // diagonal entry of gamma0; reaching it proves optimality, and the matching
  // unit vector e_i e_i^T is itself a dual estimate.
  Eigen::Index diag_arg = 0;
  const double ceiling = family.gamma0().diagonal().minCoeff(&diag_arg);
  bool optimal = false;

  for (int r = 0; r < config.restarts && !optimal; ++r) {
    Eigen::VectorXd v(kv);
    for (int k = 0; k < kv; ++k) {
      const Bounds& b = family.bounds()[static_cast<std::size_t>(k)];
      if (r == 0) {
        v(k) = std::clamp(0.0, b.lo, b.hi);
      } else {
        std::uniform_real_distribution<double> dist(b.lo, b.hi);
        v(k) = dist(rng);
      }
    }
    Eigen::MatrixXd outer = Eigen::MatrixXd::Zero(n, n);
    double weight = 0.0, restart_best = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd restart_v = v;

    const int iters = kv == 0 ? 1 : config.max_iters;
    for (int it = 1; it <= iters; ++it) {
      const EigenPair ep = min_eigen(family.evaluate(v));
      ++out.iterations;
      if (ep.value > restart_best) {
        restart_best = ep.value;
        restart_v = v;
      }
      if (ep.value > out.lambda_star) {
        out.lambda_star = ep.value;
        out.v_star = v;
      }
      out.best_history.push_back(out.lambda_star);
      if (ep.value >= ceiling - 1e-12) {
        optimal = true;
        break;
      }
      const double step = c / std::sqrt(static_cast<double>(it));
      if (it > tail_start || iters == 1) {
        outer.noalias() += step * ep.vector * ep.vector.transpose();
        weight += step;
      }
      if (kv == 0) break;
      const Eigen::VectorXd g = detail::supergradient(family, ep.vector);
      const double gnorm = g.norm();
      if (gnorm < 1e-14) break;  // u is orthogonal to every direction: v is optimal
      v += (step / gnorm) * g;
      detail::project_box(family, v);
    }
    // The best restart's tail average is the primal-dual estimate kept.
    if (r == 0 || restart_best >= out.lambda_star) {
      trace.weighted_outer = outer;
      trace.weight = weight;
    }
  }
  trace.iterations = out.iterations;
  {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, n);
    e(diag_arg, diag_arg) = 1.0;
    trace.dual_estimates.push_back(std::move(e));
  }

  if (config.polish && kv > 0 && !optimal) {
    detail::BarrierResult polished = detail::barrier_polish(family, out.v_star);
    if (polished.lambda > out.lambda_star) {
      out.lambda_star = polished.lambda;
      out.v_star = polished.v;
    }
    if (polished.dual) trace.dual_estimates.push_back(*polished.dual);
  }

  if (out.lambda_star >= -config.feasibility_tol) {
    out.status = SolveStatus::Feasible;
    return out;
  }
  out.certificate = extract_certificate(family, trace, config.tol_cert);
  if (out.certificate) {
    const CertificateCheck check = check_certificate(family, *out.certificate, config.tol_cert);
    if (check.valid && check.bound < -config.margin && out.certificate->value < -config.margin) {
      out.status = SolveStatus::CertifiedInfeasible;
      return out;
    }
  }
  out.status = SolveStatus::Undecided;
  return out;
}

}  // namespace npacert
