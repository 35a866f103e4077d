#pragma once

// Weakly unobservable subspaces from a model or from data, and the
// informativity-for-strong-observability verdict.

#include <infoattack/model_set.hpp>

#include <optional>
#include <vector>

namespace infoattack {

/// Largest J in R^k with  L J  ⊆  (G J) x {0} + im H.
///
/// L is a x k, G is g x k with g <= a (its image is padded with zero rows),
/// H is a x q. The iteration J_0 = R^k, J_{i+1} = J_i ∩ L^{-1}(im [G J_i; 0] + im H)
/// is run in the coordinates of the current basis, so each step is one
/// preimage and the basis stays orthonormal. The trace lists dim J_i.
struct OutputNullingResult {
  Subspace space;
  std::vector<Index> trace;
  double scale = 0.0;
};

namespace detail {

inline Matrix output_nulling_rhs(const Matrix& G, const Matrix& J, const Matrix& H) {
  const Index a = H.rows();
  Matrix W = Matrix::Zero(a, J.cols() + H.cols());
  W.topLeftCorner(G.rows(), J.cols()) = G * J;
  W.rightCols(H.cols()) = H;
  return W;
}

}  // namespace detail

inline OutputNullingResult largest_output_nulling(const Matrix& L, const Matrix& G, const Matrix& H,
                                                  const Tolerance& tol = {}) {
  const Index k = L.cols();
  require_dims(G.cols() == k && G.rows() <= L.rows() && H.rows() == L.rows(),
               "output-nulling: inconsistent block shapes");
  const double scale = std::max({spectral_norm(L), spectral_norm(G), spectral_norm(H)});

  Matrix J = Matrix::Identity(k, k);
  std::vector<Index> trace{k};
  for (Index iter = 0; iter <= k && J.cols() > 0; ++iter) {
    const Subspace rhs = image(detail::output_nulling_rhs(G, J, H), tol, scale);
    const Subspace keep = preimage(L * J, rhs, tol, scale);
    if (keep.dim() == J.cols()) break;
    J = J * keep.basis();
    trace.push_back(J.cols());
  }
  return {Subspace::from_orthonormal(std::move(J), tol), std::move(trace), scale};
}

/// Residual of the inclusion  L J ⊆ (G J) x {0} + im H,  relative to the
/// operator scale. Zero (up to round-off) for any output-nulling J.
inline double output_nulling_residual(const Matrix& L, const Matrix& G, const Matrix& H, const Subspace& J,
                                      const Tolerance& tol = {}) {
  if (J.is_zero()) return 0.0;
  const double scale = std::max({spectral_norm(L), spectral_norm(G), spectral_norm(H), 1e-300});
  const Subspace rhs = image(detail::output_nulling_rhs(G, J.basis(), H), tol, scale);
  const Matrix img = L * J.basis();
  const Matrix res = img - rhs.basis() * (rhs.basis().transpose() * img);
  return res.norm() / scale;
}

namespace detail {

struct CoefficientInclusion {
  Matrix L, G, H;
};

inline CoefficientInclusion coefficient_inclusion(const AffineSetParams& params, const SystemModel& sys) {
  const Index lq = params.Q.rows();
  const Index T = params.P.cols();
  require_dims(params.Q.cols() == sys.n && params.P.rows() == sys.n && params.R.rows() == lq &&
                   params.R.cols() == T,
               "coefficient space: parameters inconsistent with system");
  Matrix L(lq + sys.p, T);
  L << params.R, sys.C * params.P;
  Matrix H(lq + sys.p, sys.m);
  H << params.Q * sys.B, sys.D;
  return {std::move(L), params.Q * params.P, std::move(H)};
}

}  // namespace detail

inline OutputNullingResult max_coeff_space_trace(const AffineSetParams& params, const SystemModel& sys,
                                                 const Tolerance& tol = {}) {
  const auto inc = detail::coefficient_inclusion(params, sys);
  return largest_output_nulling(inc.L, inc.G, inc.H, tol);
}

/// J*(D): largest J ⊆ R^T with [R; CP] J ⊆ QP J x {0} + im [QB; D].
inline Subspace max_coeff_space(const AffineSetParams& params, const SystemModel& sys,
                                const Tolerance& tol = {}) {
  return max_coeff_space_trace(params, sys, tol).space;
}

inline double coefficient_inclusion_residual(const AffineSetParams& params, const SystemModel& sys,
                                             const Subspace& J, const Tolerance& tol = {}) {
  const auto inc = detail::coefficient_inclusion(params, sys);
  return output_nulling_residual(inc.L, inc.G, inc.H, J, tol);
}

/// V*(A, B, C, D): largest V with [A; C] V ⊆ V x {0} + im [B; D].
inline Subspace model_v_star(const Matrix& A, const Matrix& B, const Matrix& C, const Matrix& D,
                             const Tolerance& tol = {}) {
  const Index n = A.rows();
  require_dims(A.cols() == n && B.rows() == n && C.cols() == n && D.rows() == C.rows() &&
                   D.cols() == B.cols(),
               "model_v_star: inconsistent dimensions");
  Matrix L(n + C.rows(), n);
  L << A, C;
  Matrix H(n + C.rows(), B.cols());
  H << B, D;
  return largest_output_nulling(L, Matrix::Identity(n, n), H, tol).space;
}

struct InformativityReport {
  Subspace j_star;
  Subspace v_star_data;
  bool cond_image = false;
  bool cond_kernel = false;
  bool informative = false;
  std::optional<Vector> witness;
  double witness_gain = 0.0;  // ||P * witness||
};

/// Informative for strong observability iff C^{-1} im D ⊆ im P and J* ⊆ ker P.
inline InformativityReport is_informative_SO(const Dataset& data, const SystemModel& sys, const Annihilator& ann,
                                             const Tolerance& tol = {}) {
  const AffineSetParams params = compute_pqr(data, sys, ann);
  InformativityReport rep;
  rep.j_star = max_coeff_space(params, sys, tol);

  const Matrix& P = params.P;
  const double pscale = spectral_norm(P);
  const Subspace output_free = preimage(sys.C, image(sys.D, tol), tol);
  rep.cond_image = contains(image(P, tol), output_free);
  rep.cond_kernel = contains(kernel(P, tol), rep.j_star);
  rep.informative = rep.cond_image && rep.cond_kernel;

  if (rep.j_star.is_zero()) {
    rep.v_star_data = Subspace::zero(sys.n, tol);
  } else {
    const Matrix PJ = P * rep.j_star.basis();
    rep.v_star_data = image(PJ, tol, pscale);
    if (!rep.cond_kernel) {
      // Direction of J* on which P is largest.
      const auto dec = detail::svd(PJ, Eigen::ComputeThinV);
      Vector w = rep.j_star.basis() * dec.matrixV().col(0);
      w.normalize();
      rep.witness_gain = (P * w).norm();
      rep.witness = std::move(w);
    }
  }
  return rep;
}

}  // namespace infoattack
