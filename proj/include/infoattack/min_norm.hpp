#pragma once

// Minimum-norm attacks confined to X_+, the distance-to-unobservability
// metric, and the lower bound relating the two.

#include <infoattack/attack.hpp>

#include <Eigen/Eigenvalues>

#include <complex>
#include <limits>
#include <random>
#include <vector>

namespace infoattack {

enum class MinNormFailure { EmptyFeasibleSet, DimensionalCondition, ExcludedDirection, NoFeasibleStart,
                            EmptyModelSet, UnsupportedHypothesis, ZeroPerturbation };

class MinNormError : public std::runtime_error {
 public:
  MinNormError(MinNormFailure kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] MinNormFailure kind() const { return kind_; }

 private:
  MinNormFailure kind_;
};

struct MinNormProblem {
  Dataset data;
  SystemModel sys;
  Annihilator ann;
  Tolerance tol;
  Subspace j_star;
  /// (X_+^{-1} Pi_O(X_+))^perp = J*^perp ∩ im X_+^T
  Subspace S_plus;
  /// Feasible directions J*^perp ∩ ker(C X_-).
  Subspace K;
  /// X_+^{-1} Pi_O(X_+)
  Subspace excluded;
};

inline MinNormProblem build_problem(const Dataset& data, const SystemModel& sys, const Annihilator& ann,
                                    const Tolerance& tol = {}) {
  const AffineSetParams params = compute_pqr(data, sys, ann);
  MinNormProblem prob{data, sys, ann, tol, max_coeff_space(params, sys, tol), {}, {}, {}};

  const Matrix& Xp = data.X_plus;
  const Subspace pi = pi_O(Xp, prob.j_star);
  if (pi.dim() >= numerical_rank(Xp, tol)) {
    throw MinNormError(MinNormFailure::DimensionalCondition, "dim Pi_O(X_plus) is not below rank X_plus");
  }
  prob.excluded = preimage(Xp, pi, tol, spectral_norm(Xp));
  prob.S_plus = complement(prob.excluded);

  const Matrix CX = sys.C * data.X_minus;
  const double cx_scale = spectral_norm(sys.C) * spectral_norm(data.X_minus);
  prob.K = intersect(complement(prob.j_star), kernel(CX, tol, cx_scale));
  if (prob.K.is_zero()) {
    throw MinNormError(MinNormFailure::EmptyFeasibleSet, "J*^perp ∩ ker(C X_minus) is {0}");
  }
  return prob;
}

/// M(lambda) v = (lambda X_- - X_+ + B U_-) v
inline Vector pencil_residual(double lambda, const Vector& v, const MinNormProblem& prob) {
  const Dataset& d = prob.data;
  return lambda * (d.X_minus * v) - d.X_plus * v + prob.sys.B * (d.U_minus * v);
}

struct ZetaSolution {
  Vector zeta;  // X_+^T xi
  Vector xi;
};

/// Minimum of ||xi^T X_+|| subject to xi^T X_+ v = 1, xi^T X_+ J* = 0:
/// zeta = proj_{S+}(v) / ||proj_{S+}(v)||^2 and xi the least-norm solution of
/// X_+^T xi = zeta.
inline ZetaSolution zeta_closed_form(const Vector& v, const MinNormProblem& prob) {
  require_dims(v.size() == prob.data.T(), "zeta_closed_form: v must have T entries");
  const Vector pv = prob.S_plus.project(v);
  const double n2 = pv.squaredNorm();
  if (std::sqrt(n2) <= prob.tol.containment() * v.norm()) {
    throw MinNormError(MinNormFailure::ExcludedDirection, "v lies in X_plus^{-1} Pi_O(X_plus)");
  }
  Vector zeta = pv / n2;
  Vector xi = pseudo_inverse(prob.data.X_plus.transpose(), prob.tol) * zeta;
  return {std::move(zeta), std::move(xi)};
}

/// ||M(lambda) v||^2 / ||proj_{S+}(v)||^2
inline double objective(double lambda, const Vector& v, const MinNormProblem& prob) {
  const double den = prob.S_plus.project(v).squaredNorm();
  if (std::sqrt(den) <= prob.tol.containment() * v.norm()) {
    throw MinNormError(MinNormFailure::ExcludedDirection, "objective: v lies in the excluded set");
  }
  return pencil_residual(lambda, v, prob).squaredNorm() / den;
}

/// Row-energy shares delta_i^2 / ||Delta||_F^2.
inline Vector contribution_ratios(const Matrix& delta) {
  const double total = delta.squaredNorm();
  if (total == 0.0) throw MinNormError(MinNormFailure::ZeroPerturbation, "contribution_ratios: zero perturbation");
  return delta.rowwise().squaredNorm() / total;
}

struct MultistartConfig {
  int grid_points = 16;
  int max_iterations = 200;
  double rel_decrease = 1e-10;
};

struct MinNormSolution {
  double lambda_star = 0.0;
  Vector v_star;
  Vector zeta_star;
  Vector xi_star;
  Vector x0_tilde;
  Vector x1_tilde;
  Matrix delta_X_plus;
  Matrix phi_x_plus;
  Dataset attacked;
  double objective_value = 0.0;
  double frob_norm = 0.0;
  double relative_error = 0.0;
  Vector rho;
  std::optional<double> theorem2_lower_bound;
  int iterations = 0;
  int starts = 0;
  bool converged = false;
  /// Objective after every half-step of the winning start.
  std::vector<double> history;
};

namespace detail {

/// Coordinates of the objective restricted to K = span(Kb):
///   num(c) = || (lambda A1 - A2) c ||^2,  den(c) = c^T G c.
struct ReducedProblem {
  Matrix Kb, A1, A2;
  Matrix Wr, Wz;   // eigenvectors of G on its numerical range / null space
  Vector lam_r;    // positive eigenvalues of G
};

inline ReducedProblem reduce(const MinNormProblem& prob) {
  const Dataset& d = prob.data;
  ReducedProblem r;
  r.Kb = prob.K.basis();
  r.A1 = d.X_minus * r.Kb;
  r.A2 = (d.X_plus - prob.sys.B * d.U_minus) * r.Kb;
  const Matrix SK = prob.S_plus.basis().transpose() * r.Kb;
  const Matrix G = SK.transpose() * SK;
  Eigen::SelfAdjointEigenSolver<Matrix> es(G);
  const Vector& ev = es.eigenvalues();
  std::vector<Index> keep, drop;
  for (Index i = 0; i < ev.size(); ++i) (ev(i) > prob.tol.rel ? keep : drop).push_back(i);
  r.Wr.resize(G.rows(), static_cast<Index>(keep.size()));
  r.Wz.resize(G.rows(), static_cast<Index>(drop.size()));
  r.lam_r.resize(static_cast<Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    r.Wr.col(static_cast<Index>(j)) = es.eigenvectors().col(keep[j]);
    r.lam_r(static_cast<Index>(j)) = ev(keep[j]);
  }
  for (std::size_t j = 0; j < drop.size(); ++j) r.Wz.col(static_cast<Index>(j)) = es.eigenvectors().col(drop[j]);
  return r;
}

/// Exact minimizer over v ∈ K at fixed lambda. Components along the null
/// space of G only enter the numerator, so they are eliminated through the
/// Schur complement before the generalized Rayleigh quotient is minimized.
inline Vector v_step(double lambda, const ReducedProblem& r, const Tolerance& tol) {
  const Matrix Ml = lambda * r.A1 - r.A2;
  const Matrix MR = Ml * r.Wr;
  Matrix S = MR.transpose() * MR;
  Matrix cz_map = Matrix::Zero(r.Wz.cols(), r.Wr.cols());
  if (r.Wz.cols() > 0) {
    const Matrix MZ = Ml * r.Wz;
    const Matrix Hzz = MZ.transpose() * MZ;
    const Matrix Hzr = MZ.transpose() * MR;
    cz_map = -detail::pseudo_inverse(Hzz, tol) * Hzr;
    S += Hzr.transpose() * cz_map;
  }
  const Vector inv_sqrt = r.lam_r.cwiseSqrt().cwiseInverse();
  const Matrix Sn = inv_sqrt.asDiagonal() * S * inv_sqrt.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (Sn + Sn.transpose()));
  const Vector d = inv_sqrt.asDiagonal() * es.eigenvectors().col(0);
  const Vector c = r.Wr * d + r.Wz * (cz_map * d);
  return (r.Kb * c).normalized();
}

/// Least-squares eigenvalue for a fixed direction.
inline double lambda_step(const Vector& v, const MinNormProblem& prob, double fallback) {
  const Vector x = prob.data.X_minus * v;
  const Vector y = prob.data.X_plus * v - prob.sys.B * (prob.data.U_minus * v);
  const double xx = x.squaredNorm();
  if (xx == 0.0) return fallback;
  return x.dot(y) / xx;
}

}  // namespace detail

inline std::vector<double> lambda_starts(const MinNormProblem& prob, const MultistartConfig& cfg) {
  std::vector<double> starts;
  double radius = 1.0;
  const auto a0 = sigma_representative(compute_pqr(prob.data, prob.sys, prob.ann), prob.tol);
  if (a0) {
    const Eigen::EigenSolver<Matrix> es(*a0, false);
    double rho = 0.0;
    for (Index i = 0; i < es.eigenvalues().size(); ++i) {
      starts.push_back(es.eigenvalues()(i).real());
      rho = std::max(rho, std::abs(es.eigenvalues()(i)));
    }
    if (rho > 0.0) radius = rho;
  }
  for (int i = 0; i < cfg.grid_points; ++i) {
    const double t = cfg.grid_points == 1 ? 0.5 : static_cast<double>(i) / (cfg.grid_points - 1);
    starts.push_back(-2.0 * radius + 4.0 * radius * t);
  }
  return starts;
}

/// Alternating minimization of the min-norm objective over (lambda, v):
/// exact v-step at fixed lambda, least-squares lambda-step at fixed v.
/// Multi-started from the spectrum of a model in Sigma(D) and a real grid.
inline MinNormSolution alternating_solve(const MinNormProblem& prob, const MultistartConfig& cfg = {}) {
  const detail::ReducedProblem red = detail::reduce(prob);
  if (red.Wr.cols() == 0) {
    throw MinNormError(MinNormFailure::NoFeasibleStart, "every feasible direction lies in the excluded set");
  }

  double best_obj = std::numeric_limits<double>::infinity();
  double best_lambda = 0.0;
  Vector best_v;
  int best_iters = 0;
  bool best_converged = false;
  std::vector<double> best_history;
  const std::vector<double> starts = lambda_starts(prob, cfg);
  const double margin = 100.0 * prob.tol.rel;

  for (double lambda0 : starts) {
    double lambda = lambda0;
    Vector v = detail::v_step(lambda, red, prob.tol);
    double obj = objective(lambda, v, prob);
    std::vector<double> history{obj};
    bool converged = false;
    int it = 0;
    for (; it < cfg.max_iterations; ++it) {
      lambda = detail::lambda_step(v, prob, lambda);
      const double mid = objective(lambda, v, prob);
      v = detail::v_step(lambda, red, prob.tol);
      const double next = objective(lambda, v, prob);
      history.push_back(mid);
      history.push_back(next);
      const double decrease = obj - next;
      obj = std::min(obj, next);
      if (decrease <= cfg.rel_decrease * std::max(obj, std::numeric_limits<double>::min())) {
        converged = true;
        break;
      }
    }
    if (prob.S_plus.project(v).norm() <= margin) continue;
    if (obj < best_obj) {
      best_obj = obj;
      best_lambda = lambda;
      best_v = v;
      best_iters = it;
      best_converged = converged;
      best_history = std::move(history);
    }
  }
  if (best_v.size() == 0) {
    throw MinNormError(MinNormFailure::NoFeasibleStart, "all starts converged onto the excluded set");
  }

  MinNormSolution sol;
  sol.lambda_star = best_lambda;
  sol.v_star = best_v;
  sol.iterations = best_iters;
  sol.converged = best_converged;
  sol.starts = static_cast<int>(starts.size());
  sol.history = std::move(best_history);

  const Dataset& d = prob.data;
  const ZetaSolution z = zeta_closed_form(best_v, prob);
  sol.zeta_star = z.zeta;
  sol.xi_star = z.xi;
  sol.x0_tilde = d.X_minus * best_v;
  sol.x1_tilde = best_lambda * sol.x0_tilde + prob.sys.B * (d.U_minus * best_v);
  const Vector shift = sol.x1_tilde - d.X_plus * best_v;
  sol.phi_x_plus = Matrix::Identity(d.X_plus.rows(), d.X_plus.rows()) + shift * z.xi.transpose();
  sol.attacked = d;
  sol.attacked.X_plus = sol.phi_x_plus * d.X_plus;
  sol.delta_X_plus = sol.attacked.X_plus - d.X_plus;
  sol.objective_value = objective(best_lambda, best_v, prob);
  sol.frob_norm = sol.delta_X_plus.norm();
  sol.relative_error = sol.frob_norm / d.X_plus.norm();
  if (sol.frob_norm > 0.0) sol.rho = contribution_ratios(sol.delta_X_plus);
  else sol.rho = Vector::Zero(d.X_plus.rows());
  return sol;
}

/// Attack spec equivalent to a min-norm solution (x0 = X_- v*, u0 = U_- v*).
inline AttackSpec as_attack_spec(const MinNormSolution& sol, const MinNormProblem& prob) {
  return {sol.lambda_star, sol.x0_tilde, prob.data.U_minus * sol.v_star};
}

// --- distance to unobservability -------------------------------------------

struct GridConfig {
  double step = 0.05;
  /// Local refinement stops once the pattern step falls below this.
  double min_step = 1e-12;
  int refine_candidates = 6;
};

struct DUnobsResult {
  double value = 0.0;
  std::complex<double> lambda{};
  Vector x;  // unused placeholder for real callers
};

namespace detail {

inline double pencil_sigma_min(const Matrix& A, const Matrix& C, std::complex<double> lambda,
                               Eigen::VectorXcd* right = nullptr) {
  const Index n = A.rows();
  Eigen::MatrixXcd P(n + C.rows(), n);
  P.topRows(n) = -A.cast<std::complex<double>>();
  P.topRows(n).diagonal().array() += lambda;
  P.bottomRows(C.rows()) = C.cast<std::complex<double>>();
  if (right) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> dec(P, Eigen::ComputeThinV);
    *right = dec.matrixV().col(n - 1);
    return dec.singularValues()(n - 1);
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> dec(P);
  return dec.singularValues()(n - 1);
}

/// Pattern search on (Re, Im) with halving steps; Im is kept nonnegative
/// since the pencil of a real pair is conjugate-symmetric.
inline std::pair<std::complex<double>, double> refine_pencil(const Matrix& A, const Matrix& C,
                                                             std::complex<double> z, double step,
                                                             double min_step) {
  double best = pencil_sigma_min(A, C, z);
  static constexpr std::array<std::pair<int, int>, 8> kDirs{
      {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};
  while (step > min_step && best > 0.0) {
    bool moved = false;
    for (auto [dr, di] : kDirs) {
      std::complex<double> c(z.real() + dr * step, std::abs(z.imag() + di * step));
      const double val = pencil_sigma_min(A, C, c);
      if (val < best) {
        best = val;
        z = c;
        moved = true;
      }
    }
    if (!moved) step *= 0.5;
  }
  return {z, best};
}

}  // namespace detail

/// inf over complex lambda of sigma_min([lambda I - A; C]): coarse grid on the
/// upper half of a disc around the spectrum plus the eigenvalues themselves,
/// then pattern-search refinement of the best candidates.
inline DUnobsResult d_unobs(const Matrix& A, const Matrix& C, const GridConfig& cfg = {}) {
  require_dims(A.rows() == A.cols() && C.cols() == A.rows(), "d_unobs: A must be square and match C");
  const Eigen::EigenSolver<Matrix> es(A, false);
  double rho = 0.0;
  std::vector<std::pair<double, std::complex<double>>> cand;
  for (Index i = 0; i < es.eigenvalues().size(); ++i) {
    const std::complex<double> ev = es.eigenvalues()(i);
    rho = std::max(rho, std::abs(ev));
    const std::complex<double> z(ev.real(), std::abs(ev.imag()));
    cand.emplace_back(detail::pencil_sigma_min(A, C, z), z);
  }
  const double radius = 1.5 * rho + 1.0;
  const int steps = static_cast<int>(std::ceil(radius / cfg.step));
  for (int i = -steps; i <= steps; ++i) {
    for (int j = 0; j <= steps; ++j) {
      const std::complex<double> z(i * cfg.step, j * cfg.step);
      if (std::abs(z) > radius) continue;
      cand.emplace_back(detail::pencil_sigma_min(A, C, z), z);
    }
  }
  const auto k = std::min<std::size_t>(cand.size(), static_cast<std::size_t>(cfg.refine_candidates));
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end(),
                    [](const auto& a, const auto& b) { return a.first < b.first; });
  DUnobsResult out{std::numeric_limits<double>::infinity(), {}, {}};
  for (std::size_t i = 0; i < k; ++i) {
    const auto [z, val] = detail::refine_pencil(A, C, cand[i].second, cfg.step, cfg.min_step);
    if (val < out.value) {
      out.value = val;
      out.lambda = z;
    }
  }
  return out;
}

struct ModelSetDistance {
  double value = 0.0;
  /// True when Sigma(D) is not a singleton and the value is the best of a
  /// randomized local search, i.e. an upper bound on the infimum.
  bool sampled = false;
  int samples = 0;
};

/// Smallest of the n singular values of C (zero when p < n).
inline double output_floor(const Matrix& C) {
  const Index n = C.cols();
  if (C.rows() < n) return 0.0;
  return Eigen::JacobiSVD<Matrix>(C).singularValues()(n - 1);
}

/// inf over A in Sigma(D) of d_unobs(A). Exact for a singleton model set.
/// When Q is injective but P lacks full row rank, A is unconstrained on
/// (im P)^perp: any unit x with a component there becomes an eigenvector of
/// some member, so the infimum is the floor ||C x|| >= sigma_n(C), which
/// bounds every member from below. Otherwise random members are improved by
/// alternating between the pencil minimizer (lambda, x) and a least-squares
/// step on A along Sigma(D).
inline ModelSetDistance d_unobs_model_set(const Dataset& data, const SystemModel& sys, const Annihilator& ann,
                                          const Tolerance& tol = {}, const GridConfig& grid = {},
                                          int samples = 16, std::uint64_t seed = 0) {
  const AffineSetParams params = compute_pqr(data, sys, ann);
  const auto a0 = sigma_representative(params, tol);
  if (!a0) throw MinNormError(MinNormFailure::EmptyModelSet, "Sigma(D) is empty");
  const std::vector<Matrix> dirs = sigma_directions(params, tol);
  if (dirs.empty()) return {d_unobs(*a0, sys.C, grid).value, false, 0};
  if (numerical_rank(params.Q, tol) == sys.n && numerical_rank(params.P, tol) < sys.n) {
    return {output_floor(sys.C), false, 0};
  }

  using cd = std::complex<double>;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const double spread = std::max(1.0, spectral_norm(*a0));
  const Index n = sys.n;
  ModelSetDistance out{d_unobs(*a0, sys.C, grid).value, true, samples};

  for (int s = 0; s <= samples && out.value > 0.0; ++s) {
    Matrix A = *a0;
    if (s > 0) {
      for (const Matrix& Z : dirs) A += spread * normal(rng) / std::sqrt(static_cast<double>(dirs.size())) * Z;
    }
    DUnobsResult cur = d_unobs(A, sys.C, grid);
    for (int round = 0; round < 50 && cur.value > 0.0; ++round) {
      Eigen::VectorXcd x;
      (void)detail::pencil_sigma_min(A, sys.C, cur.lambda, &x);
      // min over real alpha of ||(lambda I - A - sum alpha_i Z_i) x||
      const Eigen::VectorXcd b = cur.lambda * x - A.cast<cd>() * x;
      Matrix LS(2 * n, static_cast<Index>(dirs.size()));
      for (std::size_t i = 0; i < dirs.size(); ++i) {
        const Eigen::VectorXcd zx = dirs[i].cast<cd>() * x;
        LS.col(static_cast<Index>(i)) << zx.real(), zx.imag();
      }
      Vector rhs(2 * n);
      rhs << b.real(), b.imag();
      const Vector alpha = LS.completeOrthogonalDecomposition().solve(rhs);
      Matrix next = A;
      for (std::size_t i = 0; i < dirs.size(); ++i) next += alpha(static_cast<Index>(i)) * dirs[i];
      const auto [z, val] = detail::refine_pencil(next, sys.C, cur.lambda, grid.step, grid.min_step);
      if (val >= cur.value * (1.0 - 1e-9)) break;
      A = std::move(next);
      cur.value = val;
      cur.lambda = z;
    }
    out.value = std::min(out.value, cur.value);
  }
  return out;
}

struct Theorem2Check {
  double lhs = 0.0;
  double rhs = 0.0;
  double d_unobs = 0.0;
  double sigma_min_x = 0.0;
  bool sampled = false;
  bool holds = false;
};

/// ||Delta D||_F >= d_unobs(Sigma(D)) * sigma_min(X_-), noise-free data only.
inline Theorem2Check theorem2_check(const MinNormSolution& sol, const Dataset& data, const SystemModel& sys,
                                    const Annihilator& ann, const Tolerance& tol = {},
                                    const GridConfig& grid = {}) {
  if (!ann.noise_free) {
    throw MinNormError(MinNormFailure::UnsupportedHypothesis,
                       "distance bound requires noise-free data (M = I, N = 0)");
  }
  Theorem2Check out;
  const ModelSetDistance dist = d_unobs_model_set(data, sys, ann, tol, grid);
  out.d_unobs = dist.value;
  out.sampled = dist.sampled;
  out.sigma_min_x = data.T() < sys.n ? 0.0 : smallest_singular_value(data.X_minus);
  out.lhs = sol.frob_norm;
  out.rhs = out.d_unobs * out.sigma_min_x;
  out.holds = out.lhs >= out.rhs - 1e-8 * std::max(1.0, out.lhs);
  return out;
}

}  // namespace infoattack
