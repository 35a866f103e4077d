#pragma once

// System, dataset, noise annihilator and the affine model set
//   Sigma(D) = { A : R(D) = Q A P(D) }.

#include <infoattack/subspace.hpp>

#include <optional>
#include <string>
#include <vector>

namespace infoattack {

struct SystemModel {
  Index n = 0, m = 0, p = 0, l = 0;
  std::optional<Matrix> A_true;
  Matrix B, C, D, E, F;

  void validate() const {
    require_dims(n > 0 && p > 0 && m >= 0 && l >= 0, "system: n and p must be positive");
    require_dims(B.rows() == n && B.cols() == m, "system: B must be n x m");
    require_dims(C.rows() == p && C.cols() == n, "system: C must be p x n");
    require_dims(D.rows() == p && D.cols() == m, "system: D must be p x m");
    require_dims(E.rows() == n && E.cols() == l, "system: E must be n x l");
    require_dims(F.rows() == p && F.cols() == l, "system: F must be p x l");
    if (A_true) require_dims(A_true->rows() == n && A_true->cols() == n, "system: A must be n x n");
  }

  [[nodiscard]] bool noise_free() const { return l == 0 || (E.isZero(0.0) && F.isZero(0.0)); }
};

struct Dataset {
  Matrix X_minus, X_plus, U_minus, Y_minus;

  [[nodiscard]] Index T() const { return X_minus.cols(); }

  void validate(const SystemModel& sys) const {
    const Index t = T();
    require_dims(t >= 1, "dataset: horizon T must be at least 1");
    require_dims(X_minus.rows() == sys.n && X_plus.rows() == sys.n, "dataset: state blocks must have n rows");
    require_dims(U_minus.rows() == sys.m, "dataset: U_minus must have m rows");
    require_dims(Y_minus.rows() == sys.p, "dataset: Y_minus must have p rows");
    require_dims(X_plus.cols() == t && U_minus.cols() == t && Y_minus.cols() == t,
                 "dataset: all blocks must share T columns");
  }

  /// [X_-; X_+; U_-; Y_-]
  [[nodiscard]] Matrix stacked() const {
    Matrix S(2 * X_minus.rows() + U_minus.rows() + Y_minus.rows(), T());
    S << X_minus, X_plus, U_minus, Y_minus;
    return S;
  }
};

inline Dataset operator-(const Dataset& a, const Dataset& b) {
  return {a.X_minus - b.X_minus, a.X_plus - b.X_plus, a.U_minus - b.U_minus, a.Y_minus - b.Y_minus};
}

/// Left factor [M N] whose kernel is im [E; F].
struct Annihilator {
  Matrix M, N;
  /// Set when E and F vanish; then M = I_n and N = 0.
  bool noise_free = false;

  [[nodiscard]] Index rows() const { return M.rows(); }

  static Annihilator identity(Index n, Index p) {
    return {Matrix::Identity(n, n), Matrix::Zero(n, p), true};
  }
};

struct AffineSetParams {
  Matrix P, Q, R;
};

inline Annihilator compute_annihilator(const Matrix& E, const Matrix& F, const Tolerance& tol = {}) {
  require_dims(E.cols() == F.cols(), "annihilator: E and F must have the same column count");
  const Index n = E.rows();
  const Index p = F.rows();
  Matrix G(n + p, E.cols());
  G << E, F;
  if (G.cols() == 0 || numerical_rank(G, tol) == 0) return Annihilator::identity(n, p);
  const Matrix rows = complement(image(G, tol)).basis().transpose();
  return {rows.leftCols(n), rows.rightCols(p), false};
}

/// Residuals of ker [M N] = im [E; F]: the product norm, and the rank defect
/// rank([M N]) - (n + p - rank([E; F])).
struct AnnihilatorCheck {
  double product_norm = 0.0;
  Index rank_defect = 0;
};

inline AnnihilatorCheck check_annihilator(const Annihilator& ann, const Matrix& E, const Matrix& F,
                                          const Tolerance& tol = {}) {
  Matrix MN(ann.rows(), ann.M.cols() + ann.N.cols());
  MN << ann.M, ann.N;
  Matrix G(E.rows() + F.rows(), E.cols());
  G << E, F;
  const Index expected = MN.cols() - numerical_rank(G, tol);
  return {(MN * G).norm(), numerical_rank(MN, tol) - expected};
}

inline AffineSetParams compute_pqr(const Dataset& data, const SystemModel& sys, const Annihilator& ann) {
  data.validate(sys);
  require_dims(ann.M.cols() == sys.n && ann.N.cols() == sys.p && ann.N.rows() == ann.M.rows(),
               "compute_pqr: annihilator does not match system dimensions");
  Matrix R = ann.M * (data.X_plus - sys.B * data.U_minus);
  if (ann.N.size() > 0) {
    R += ann.N * (data.Y_minus - sys.C * data.X_minus - sys.D * data.U_minus);
  }
  return {data.X_minus, ann.M, std::move(R)};
}

inline double sigma_residual(const Matrix& A, const AffineSetParams& params) {
  require_dims(A.rows() == params.Q.cols() && A.cols() == params.P.rows(), "sigma: A has wrong shape");
  return (params.R - params.Q * A * params.P).norm();
}

/// ||R - QAP||_F <= tol * max(1, ||R||_F)
inline bool sigma_contains(const Matrix& A, const AffineSetParams& params, double tol = 1e-9) {
  return sigma_residual(A, params) <= tol * std::max(1.0, params.R.norm());
}

namespace detail {

inline Matrix pseudo_inverse(const Matrix& M, const Tolerance& tol) {
  if (M.size() == 0) return Matrix::Zero(M.cols(), M.rows());
  const auto dec = svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = dec.singularValues();
  const double tau = tol.threshold(s(0), M.rows(), M.cols());
  Vector inv = Vector::Zero(s.size());
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > tau) inv(i) = 1.0 / s(i);
  }
  return dec.matrixV() * inv.asDiagonal() * dec.matrixU().transpose();
}

}  // namespace detail

inline Matrix pseudo_inverse(const Matrix& M, const Tolerance& tol = {}) {
  return detail::pseudo_inverse(M, tol);
}

/// Minimum-norm least-squares solution of Q A P = R, i.e. A = Q^+ R P^+;
/// absent when that solution does not reproduce R (Sigma(D) is empty).
inline std::optional<Matrix> sigma_representative(const AffineSetParams& params, const Tolerance& tol = {},
                                                  double residual_tol = 1e-9) {
  Matrix A = pseudo_inverse(params.Q, tol) * params.R * pseudo_inverse(params.P, tol);
  if (!sigma_contains(A, params, residual_tol)) return std::nullopt;
  return A;
}

/// Frobenius-orthonormal basis of { Z : Q Z P = 0 }, the directions along
/// which Sigma(D) extends. With [Kq | Rq] an orthonormal split of R^n into
/// ker Q and its complement (same for ker P^T), the rank-one products e f^T
/// with e in ker Q or f in ker P^T span exactly that kernel.
inline std::vector<Matrix> sigma_directions(const AffineSetParams& params, const Tolerance& tol = {}) {
  const Index n = params.Q.cols();
  const Subspace kq = kernel(params.Q, tol);
  const Subspace kp = kernel(params.P.transpose(), tol);
  const Matrix rq = complement(kq).basis();
  std::vector<Matrix> out;
  for (Index i = 0; i < kq.dim(); ++i) {
    for (Index j = 0; j < n; ++j) {
      out.push_back(kq.basis().col(i) * Matrix::Identity(n, n).row(j));
    }
  }
  for (Index i = 0; i < rq.cols(); ++i) {
    for (Index j = 0; j < kp.dim(); ++j) {
      out.push_back(rq.col(i) * kp.basis().col(j).transpose());
    }
  }
  return out;
}

}  // namespace infoattack
