#pragma once

// Tolerance-aware subspace algebra on dense real matrices.
//
// Every subspace carries an orthonormal basis obtained from an SVD, together
// with the tolerance that produced it. Rank decisions compare singular values
// against a threshold scaled by the largest singular value of the *operator
// the caller cares about*; products such as Z * Basis(J) therefore pass the
// scale of Z explicitly so that round-off in the product is not mistaken for
// rank.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <stdexcept>
#include <string>

namespace infoattack {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require_dims(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

struct Tolerance {
  enum class Mode { Relative, Absolute };

  double rel = 1e-9;
  Mode mode = Mode::Relative;

  /// Singular values at or below this value count as zero.
  [[nodiscard]] double threshold(double sigma_max, Index rows, Index cols) const {
    if (mode == Mode::Absolute) return rel;
    const auto dim = std::max<Index>({rows, cols, Index{1}});
    return rel * sigma_max * static_cast<double>(dim);
  }

  /// Largest residual a unit vector may leave after projection onto a
  /// subspace and still be counted as a member of it.
  [[nodiscard]] double containment() const { return 100.0 * rel; }
};

namespace detail {

inline Eigen::JacobiSVD<Matrix> svd(const Matrix& M, unsigned options) {
  return Eigen::JacobiSVD<Matrix>(M, options);
}

}  // namespace detail

/// Largest singular value, 0 for an empty matrix.
inline double spectral_norm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  return detail::svd(M, 0).singularValues()(0);
}

inline double smallest_singular_value(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  const Vector s = detail::svd(M, 0).singularValues();
  return s(s.size() - 1);
}

/// Count of singular values above the tolerance threshold. A negative scale
/// means "use the matrix's own largest singular value".
inline Index numerical_rank(const Matrix& M, const Tolerance& tol = {}, double scale = -1.0) {
  if (M.size() == 0) return 0;
  const Vector s = detail::svd(M, 0).singularValues();
  const double smax = scale >= 0.0 ? scale : s(0);
  const double tau = tol.threshold(smax, M.rows(), M.cols());
  Index r = 0;
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > tau) ++r;
  }
  return r;
}

class Subspace {
 public:
  Subspace() = default;

  static Subspace zero(Index ambient, Tolerance tol = {}) {
    return Subspace(ambient, Matrix(ambient, 0), tol);
  }
  static Subspace full(Index ambient, Tolerance tol = {}) {
    return Subspace(ambient, Matrix::Identity(ambient, ambient), tol);
  }
  /// Wraps a basis the caller guarantees to be orthonormal.
  static Subspace from_orthonormal(Matrix basis, Tolerance tol = {}) {
    const Index k = basis.rows();
    return Subspace(k, std::move(basis), tol);
  }

  [[nodiscard]] Index ambient_dim() const { return ambient_; }
  [[nodiscard]] Index dim() const { return basis_.cols(); }
  [[nodiscard]] bool is_zero() const { return dim() == 0; }
  [[nodiscard]] bool is_full() const { return dim() == ambient_; }
  [[nodiscard]] const Matrix& basis() const { return basis_; }
  [[nodiscard]] const Tolerance& tol() const { return tol_; }

  [[nodiscard]] Matrix projector() const { return basis_ * basis_.transpose(); }

  [[nodiscard]] Vector project(const Vector& v) const {
    require_dims(v.size() == ambient_, "project: vector length does not match ambient dimension");
    if (is_zero()) return Vector::Zero(ambient_);
    return basis_ * (basis_.transpose() * v);
  }

 private:
  Subspace(Index ambient, Matrix basis, Tolerance tol)
      : ambient_(ambient), basis_(std::move(basis)), tol_(tol) {}

  Index ambient_ = 0;
  Matrix basis_ = Matrix(0, 0);
  Tolerance tol_{};
};

inline Vector project(const Subspace& S, const Vector& v) { return S.project(v); }

/// Column space of M.
inline Subspace image(const Matrix& M, const Tolerance& tol = {}, double scale = -1.0) {
  if (M.rows() == 0 || M.cols() == 0) return Subspace::zero(M.rows(), tol);
  const auto dec = detail::svd(M, Eigen::ComputeThinU);
  const Vector& s = dec.singularValues();
  const double smax = scale >= 0.0 ? scale : s(0);
  const double tau = tol.threshold(smax, M.rows(), M.cols());
  Index r = 0;
  while (r < s.size() && s(r) > tau) ++r;
  return Subspace::from_orthonormal(dec.matrixU().leftCols(r), tol);
}

/// Null space of M.
inline Subspace kernel(const Matrix& M, const Tolerance& tol = {}, double scale = -1.0) {
  const Index k = M.cols();
  if (k == 0) return Subspace::zero(0, tol);
  if (M.rows() == 0) return Subspace::full(k, tol);
  const auto dec = detail::svd(M, Eigen::ComputeFullV);
  const Vector& s = dec.singularValues();
  const double smax = scale >= 0.0 ? scale : s(0);
  const double tau = tol.threshold(smax, M.rows(), M.cols());
  Index r = 0;
  while (r < s.size() && s(r) > tau) ++r;
  return Subspace::from_orthonormal(dec.matrixV().rightCols(k - r), tol);
}

/// Orthogonal complement, completed from a Householder QR of the basis.
inline Subspace complement(const Subspace& S) {
  const Index k = S.ambient_dim();
  if (S.is_zero()) return Subspace::full(k, S.tol());
  if (S.is_full()) return Subspace::zero(k, S.tol());
  Eigen::HouseholderQR<Matrix> qr(S.basis());
  const Matrix Q = qr.householderQ() * Matrix::Identity(k, k);
  return Subspace::from_orthonormal(Q.rightCols(k - S.dim()), S.tol());
}

/// Intersection: vectors annihilated by both complements.
inline Subspace intersect(const Subspace& S1, const Subspace& S2) {
  require_dims(S1.ambient_dim() == S2.ambient_dim(), "intersect: ambient dimension mismatch");
  const Index k = S1.ambient_dim();
  const Tolerance tol = S1.tol();
  if (S1.is_zero() || S2.is_zero()) return Subspace::zero(k, tol);
  if (S1.is_full()) return Subspace::from_orthonormal(S2.basis(), tol);
  if (S2.is_full()) return Subspace::from_orthonormal(S1.basis(), tol);
  const Matrix C1 = complement(S1).basis();
  const Matrix C2 = complement(S2).basis();
  Matrix stacked(C1.cols() + C2.cols(), k);
  stacked << C1.transpose(), C2.transpose();
  return kernel(stacked, tol, 1.0);
}

inline Subspace sum(const Subspace& S1, const Subspace& S2) {
  require_dims(S1.ambient_dim() == S2.ambient_dim(), "sum: ambient dimension mismatch");
  Matrix cat(S1.ambient_dim(), S1.dim() + S2.dim());
  cat << S1.basis(), S2.basis();
  return image(cat, S1.tol(), 1.0);
}

/// True iff every basis vector of `inner` lies in `outer` up to `atol`.
inline bool contains(const Subspace& outer, const Subspace& inner, double atol) {
  require_dims(outer.ambient_dim() == inner.ambient_dim(), "contains: ambient dimension mismatch");
  if (inner.is_zero()) return true;
  if (outer.is_zero()) return false;
  const Matrix& B = inner.basis();
  const Matrix residual = B - outer.basis() * (outer.basis().transpose() * B);
  return residual.colwise().norm().maxCoeff() <= atol;
}

inline bool contains(const Subspace& outer, const Subspace& inner) {
  return contains(outer, inner, outer.tol().containment());
}

inline bool same_span(const Subspace& a, const Subspace& b, double atol) {
  return a.dim() == b.dim() && contains(a, b, atol) && contains(b, a, atol);
}

/// {v : Z v in S}, as the kernel of the complement-projected map. The scale
/// used for rank decisions defaults to ||Z||_2.
inline Subspace preimage(const Matrix& Z, const Subspace& S, const Tolerance& tol = {},
                         double scale = -1.0) {
  require_dims(Z.rows() == S.ambient_dim(), "preimage: Z rows must equal subspace ambient dimension");
  const double zscale = scale >= 0.0 ? scale : spectral_norm(Z);
  const Subspace perp = complement(S);
  if (perp.is_zero()) return Subspace::full(Z.cols(), tol);
  return kernel(perp.basis().transpose() * Z, tol, zscale);
}

}  // namespace infoattack
