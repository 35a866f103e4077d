#pragma once

// Trajectory simulation, the five-node line network, and seeded random
// families used by the tests. All randomness comes from std::mt19937_64.

#include <infoattack/model_set.hpp>

#include <cstdint>
#include <optional>
#include <random>

namespace infoattack {

using Rng = std::mt19937_64;

enum class InputMode { Zero, Random, PersistentlyExciting };
enum class NoiseMode { None, Structural, Gaussian };
/// One trajectory from x0, or an independent standard-normal state in every
/// column (T one-step experiments).
enum class InitialState { Trajectory, PerColumn };

struct SimConfig {
  Index T = 100;
  std::uint64_t seed = 0;
  /// Initial state; a random unit vector when absent.
  std::optional<Vector> x0;
  InitialState initial_state = InitialState::Trajectory;
  InputMode input_mode = InputMode::Random;
  Index pe_order = 1;
  NoiseMode noise_mode = NoiseMode::None;
  double noise_sigma = 0.0;

  void validate() const {
    require_dims(T >= 1, "sim config: T must be at least 1");
    if (input_mode == InputMode::PersistentlyExciting) {
      require_dims(pe_order >= 1 && pe_order <= T, "sim config: pe order must lie in [1, T]");
    }
    require_dims(noise_sigma >= 0.0, "sim config: noise sigma must be nonnegative");
  }

  /// Gaussian noise on every state and output breaks the structural-noise
  /// model the informativity results rely on.
  [[nodiscard]] bool outside_structural_noise() const {
    return noise_mode == NoiseMode::Gaussian && noise_sigma > 0.0;
  }
};

inline Matrix random_matrix(Index rows, Index cols, Rng& rng, double sigma = 1.0) {
  std::normal_distribution<double> normal(0.0, sigma);
  Matrix M(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) M(i, j) = normal(rng);
  }
  return M;
}

inline Vector random_unit(Index n, Rng& rng) {
  Vector v = random_matrix(n, 1, rng);
  while (v.norm() == 0.0) v = random_matrix(n, 1, rng);
  return v.normalized();
}

/// Block-Hankel matrix of depth `order` built from the columns of U.
inline Matrix block_hankel(const Matrix& U, Index order) {
  const Index m = U.rows();
  const Index cols = U.cols() - order + 1;
  require_dims(order >= 1 && cols >= 1, "block_hankel: depth exceeds signal length");
  Matrix H(order * m, cols);
  for (Index i = 0; i < order; ++i) H.middleRows(i * m, m) = U.middleCols(i, cols);
  return H;
}

/// Seeded random input whose depth-`order` block-Hankel matrix has full row
/// rank; redrawn up to 8 times.
inline Matrix pe_input(Index order, Index m, Index T, std::uint64_t seed, const Tolerance& tol = {}) {
  require_dims(order >= 1 && m >= 1 && order * m <= T - order + 1,
               "pe_input: order * m must not exceed T - order + 1");
  Rng rng(seed);
  for (int attempt = 0; attempt < 8; ++attempt) {
    Matrix U = random_matrix(m, T, rng);
    if (numerical_rank(block_hankel(U, order), tol) == order * m) return U;
  }
  throw std::runtime_error("pe_input: could not draw a persistently exciting input");
}

/// x_{k+1} = A x_k + B u_k + E w_k,  y_k = C x_k + D u_k + F w_k.
inline Dataset simulate(const SystemModel& sys, const SimConfig& cfg) {
  sys.validate();
  cfg.validate();
  if (!sys.A_true) throw std::invalid_argument("simulate: system has no state matrix");
  const Matrix& A = *sys.A_true;
  const Index T = cfg.T;
  Rng rng(cfg.seed);

  Vector x = cfg.x0 ? *cfg.x0 : random_unit(sys.n, rng);
  require_dims(x.size() == sys.n, "simulate: x0 must have n entries");

  Matrix U;
  switch (cfg.input_mode) {
    case InputMode::Zero: U = Matrix::Zero(sys.m, T); break;
    case InputMode::Random: U = random_matrix(sys.m, T, rng); break;
    case InputMode::PersistentlyExciting: U = pe_input(cfg.pe_order, sys.m, T, rng()); break;
  }

  Matrix W = Matrix::Zero(sys.l, T);
  Matrix state_noise = Matrix::Zero(sys.n, T);
  Matrix output_noise = Matrix::Zero(sys.p, T);
  if (cfg.noise_mode == NoiseMode::Structural) {
    W = random_matrix(sys.l, T, rng, cfg.noise_sigma > 0.0 ? cfg.noise_sigma : 1.0);
  } else if (cfg.noise_mode == NoiseMode::Gaussian && cfg.noise_sigma > 0.0) {
    state_noise = random_matrix(sys.n, T, rng, cfg.noise_sigma);
    output_noise = random_matrix(sys.p, T, rng, cfg.noise_sigma);
  }

  Dataset d{Matrix(sys.n, T), Matrix(sys.n, T), U, Matrix(sys.p, T)};
  const Matrix fresh = cfg.initial_state == InitialState::PerColumn ? random_matrix(sys.n, T, rng) : Matrix();
  for (Index k = 0; k < T; ++k) {
    if (cfg.initial_state == InitialState::PerColumn) x = fresh.col(k);
    d.X_minus.col(k) = x;
    d.Y_minus.col(k) = sys.C * x + sys.D * U.col(k) + sys.F * W.col(k) + output_noise.col(k);
    x = A * x + sys.B * U.col(k) + sys.E * W.col(k) + state_noise.col(k);
    d.X_plus.col(k) = x;
  }
  return d;
}

/// Five-node line network with input at nodes 1 and 4, nodes 1-2 measured.
inline SystemModel paper_example_system() {
  SystemModel sys;
  sys.n = 5;
  sys.m = 1;
  sys.p = 2;
  sys.l = 0;
  Matrix A(5, 5);
  A << 0.8, 0.1, 0, 0, 0,
       0, 0.7, 0.1, 0, 0,
       0, 0, 0.6, 0.02, 0,
       0, 0, 0, 0.5, 0.05,
       0, 0, 0, 0, 0.4;
  sys.A_true = A;
  sys.B = Matrix::Zero(5, 1);
  sys.B(0, 0) = 1.0;
  sys.B(3, 0) = 1.0;
  sys.C = Matrix::Zero(2, 5);
  sys.C(0, 0) = 1.0;
  sys.C(1, 1) = 1.0;
  sys.D = Matrix::Zero(2, 1);
  sys.E = Matrix::Zero(5, 0);
  sys.F = Matrix::Zero(2, 0);
  return sys;
}

/// Random noise-free system with spectral radius scaled to `radius`.
inline SystemModel random_system(Index n, Index m, Index p, Rng& rng, double radius = 0.9) {
  SystemModel sys;
  sys.n = n;
  sys.m = m;
  sys.p = p;
  sys.l = 0;
  Matrix A = random_matrix(n, n, rng);
  const Eigen::EigenSolver<Matrix> es(A, false);
  const double rho = es.eigenvalues().cwiseAbs().maxCoeff();
  if (rho > 0.0) A *= radius / rho;
  sys.A_true = A;
  sys.B = random_matrix(n, m, rng);
  sys.C = random_matrix(p, n, rng);
  sys.D = Matrix::Zero(p, m);
  sys.E = Matrix::Zero(n, 0);
  sys.F = Matrix::Zero(p, 0);
  return sys;
}

/// Column-wise data: independent random states X_- with X_+ = A X_- + B U_-.
/// Better conditioned than one long trajectory of a stable system.
inline Dataset random_columns_dataset(const SystemModel& sys, Index T, Rng& rng) {
  const Matrix& A = *sys.A_true;
  Dataset d;
  d.X_minus = random_matrix(sys.n, T, rng);
  d.U_minus = random_matrix(sys.m, T, rng);
  d.X_plus = A * d.X_minus + sys.B * d.U_minus;
  d.Y_minus = sys.C * d.X_minus + sys.D * d.U_minus;
  return d;
}

}  // namespace infoattack
