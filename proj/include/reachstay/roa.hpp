/*
 * roa.hpp
 *
 * Region-of-attraction targets: solve the Lyapunov equation at the
 * linearization, pick a contraction margin r, and certify by interval
 * arithmetic the largest sublevel ellipsoid x'Px <= c on which the
 * Lyapunov function strictly decreases along the field.  The certified
 * ellipsoid is handed to synthesis as an inequality target.
 *
 * The decrease test evaluates d/dt x'Px = 2 x'P f(x) directly on a
 * paving of the ellipsoid; the norm-comparison sufficient condition
 * ||f(x)-Ax|| < r||x|| is exposed separately (it is far more
 * conservative and rejects useful ellipsoids).
 */

#ifndef REACHSTAY_ROA_HPP
#define REACHSTAY_ROA_HPP

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <stdexcept>
#include <vector>

#include "reachstay/expr.hpp"
#include "reachstay/paver.hpp"

namespace reachstay {

inline bool is_hurwitz(const Eigen::MatrixXd& A) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(A);
  for (int i = 0; i < A.rows(); ++i)
    if (es.eigenvalues()[i].real() >= 0.0) return false;
  return true;
}

/* A'P + PA = -Q through the Kronecker-product linear system */
inline Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q) {
  const int n = static_cast<int>(A.rows());
  Eigen::MatrixXd At = A.transpose();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n * n, n * n);
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  /* vec(A'P) = (I (x) A') vec(P); vec(PA) = (A' (x) I) vec(P) */
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          M(i + j * n, k + l * n) += (l == j ? At(i, k) : 0.0);
          M(i + j * n, k + l * n) += (k == i ? At(j, l) : 0.0);
        }
  Eigen::VectorXd q(n * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) q(i + j * n) = -Q(i, j);
  Eigen::VectorXd p = M.fullPivLu().solve(q);
  Eigen::MatrixXd P(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) P(i, j) = p(i + j * n);
  /* symmetrize the rounding residue */
  return 0.5 * (P + P.transpose());
}

inline double lambda_min_spd(const Eigen::MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  return es.eigenvalues().minCoeff();
}

inline double spectral_norm_spd(const Eigen::MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/* strict inequality -lambda_min(Q) + 2 r ||P|| < 0 */
inline bool r_admissible(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& P, double r) {
  return -lambda_min_spd(Q) + 2.0 * r * spectral_norm_spd(P) < 0.0;
}

/* x'Px - c as an expression; the c-sublevel set is {g <= 0} */
inline ExprPtr ellipsoid_expr(const Eigen::MatrixXd& P, double c) {
  const int n = static_cast<int>(P.rows());
  ExprPtr acc = constant(-c);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (P(i, j) == 0.0) continue;
      acc = add(acc, mul(constant(P(i, j)), mul(state_var(i), state_var(j))));
    }
  return acc;
}

/* 2 x'P f(x) */
inline ExprPtr lyapunov_derivative_expr(const Eigen::MatrixXd& P,
                                        const std::vector<ExprPtr>& field) {
  const int n = static_cast<int>(P.rows());
  ExprPtr acc = constant(0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (P(i, j) == 0.0) continue;
      acc = add(acc, mul(constant(2.0 * P(i, j)), mul(state_var(i), field[j])));
    }
  return acc;
}

struct CertifyOptions {
  double eps = 0.01;          /* finest cell width before giving up */
  double core_radius = 1e-5;  /* cells inside this ball around the origin are
                                 accepted by the hyperbolic-equilibrium premise */
};

/*
 * Interval proof that V(x) = x'Px strictly decreases along the field on
 * the sublevel set {x'Px <= c} away from the origin.  Bisects where the
 * sign is unresolved; fails if an unresolved cell gets narrower than
 * eps outside the origin core.
 */
inline bool certify_invariant_ellipsoid(const std::vector<ExprPtr>& field,
                                        const Eigen::MatrixXd& P, double c,
                                        const CertifyOptions& opt = {}) {
  const int n = static_cast<int>(P.rows());
  if (c <= 0.0) return false;
  /* centered form: the natural form cannot resolve the sign of the
   * decrease near the origin (uncancelled cross terms) */
  InclusionFn vdot({lyapunov_derivative_expr(P, field)}, n, true);
  InclusionFn level({ellipsoid_expr(P, c)}, n);
  InclusionFn::Scratch s;

  /* bounding box of the ellipsoid: |x_i| <= sqrt(c * (P^-1)_ii) */
  Eigen::MatrixXd Pinv = P.inverse();
  Box bound(n);
  for (int i = 0; i < n; ++i) {
    double e = std::sqrt(std::max(0.0, c * Pinv(i, i))) * (1.0 + 1e-12);
    bound[i] = Interval(-e, e);
  }

  std::vector<Box> work{bound};
  while (!work.empty()) {
    Box b = work.back();
    work.pop_back();
    Box lv = level.eval(b, {}, {}, InclusionForm::Natural, s);
    if (lv[0].lo > 0.0) continue; /* outside the ellipsoid */
    Box dv = vdot.eval(b, {}, {}, InclusionForm::Centered, s);
    if (dv[0].hi < 0.0) continue; /* certified decrease */
    bool in_core = true;
    double dist = 0.0; /* infinity-norm distance of the box from the origin */
    for (int i = 0; i < n; ++i) {
      if (std::max(std::abs(b[i].lo), std::abs(b[i].hi)) > opt.core_radius) in_core = false;
      double d = b[i].lo > 0.0 ? b[i].lo : (b[i].hi < 0.0 ? -b[i].hi : 0.0);
      dist = std::max(dist, d);
    }
    if (in_core) continue; /* accepted by the hyperbolicity premise */
    /* cells hugging the origin keep shrinking towards the core; the width
     * cutoff only rejects cells bounded away from it */
    if (b.width() < opt.eps && dist > 4.0 * b.width()) return false;
    if (b.width() < 1e-9) return false;
    auto [l, r] = bisect(b);
    work.push_back(l);
    work.push_back(r);
  }
  return true;
}

/* interval value of ||f(x)-Ax|| - r||x|| on a box (Euclidean norms) */
inline Interval sr_margin(const std::vector<ExprPtr>& field, const Eigen::MatrixXd& A,
                          double r, const Box& b) {
  const int n = static_cast<int>(A.rows());
  ExprPtr g2 = constant(0.0), x2 = constant(0.0);
  for (int i = 0; i < n; ++i) {
    ExprPtr lin = constant(0.0);
    for (int j = 0; j < n; ++j)
      if (A(i, j) != 0.0) lin = add(lin, mul(constant(A(i, j)), state_var(j)));
    ExprPtr gi = sub(field[i], lin);
    g2 = add(g2, pow_e(gi, 2));
    x2 = add(x2, pow_e(state_var(i), 2));
  }
  ExprPtr margin = sub(sqrt_e(g2), mul(constant(r), sqrt_e(x2)));
  InclusionFn fn({margin}, n);
  InclusionFn::Scratch s;
  return fn.eval(b, {}, {}, InclusionForm::Natural, s)[0];
}

struct RoaTarget {
  Eigen::MatrixXd P;
  double r = 0.0;
  double c = 0.0;
  ExprPtr ellipsoid; /* x'Px - c, ready to use as a target inequality */
};

struct RoaOptions {
  double c_min = 1e-3;
  double c_max = 100.0;
  int bisection_rounds = 40;
  CertifyOptions certify;
};

/*
 * Build the reach-and-stay target for an asymptotically stable origin:
 * P from A'P+PA=-Q, r at 0.9 of the strict admissibility bound, and the
 * largest certified invariant sublevel c found by bisection.
 */
inline RoaTarget roa_target(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q,
                            const std::vector<ExprPtr>& field, const RoaOptions& opt = {}) {
  if (!is_hurwitz(A)) throw std::invalid_argument("roa_target: A is not Hurwitz");
  RoaTarget out;
  out.P = solve_lyapunov(A, Q);
  if (lambda_min_spd(out.P) <= 0.0)
    throw std::runtime_error("roa_target: Lyapunov solution is not positive definite");
  out.r = 0.9 * lambda_min_spd(Q) / (2.0 * spectral_norm_spd(out.P));

  double lo = 0.0, hi = opt.c_max;
  if (!certify_invariant_ellipsoid(field, out.P, opt.c_min, opt.certify))
    throw std::runtime_error("roa_target: certification failed down to c_min");
  lo = opt.c_min;
  for (int i = 0; i < opt.bisection_rounds; ++i) {
    double mid = 0.5 * (lo + hi);
    if (certify_invariant_ellipsoid(field, out.P, mid, opt.certify))
      lo = mid;
    else
      hi = mid;
  }
  out.c = lo;
  out.ellipsoid = ellipsoid_expr(out.P, out.c);
  return out;
}

} // namespace reachstay

#endif
