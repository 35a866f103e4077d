#pragma once

// Invertible block transformations that embed a weakly unobservable
// eigenpair into the model set explained by a dataset.

#include <infoattack/informativity.hpp>

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace infoattack {

enum class Block : int { XMinus = 0, XPlus = 1, UMinus = 2, YMinus = 3 };

inline constexpr std::array<Block, 4> kBlocks{Block::XMinus, Block::XPlus, Block::UMinus, Block::YMinus};

inline constexpr std::string_view block_name(Block b) {
  switch (b) {
    case Block::XMinus: return "X_minus";
    case Block::XPlus: return "X_plus";
    case Block::UMinus: return "U_minus";
    case Block::YMinus: return "Y_minus";
  }
  return "?";
}

inline const Matrix& block_of(const Dataset& d, Block b) {
  switch (b) {
    case Block::XMinus: return d.X_minus;
    case Block::XPlus: return d.X_plus;
    case Block::UMinus: return d.U_minus;
    case Block::YMinus: return d.Y_minus;
  }
  throw std::logic_error("unknown block");
}

/// Per-block flags, indexed by Block.
using BlockMask = std::array<bool, 4>;

enum class AttackFailure {
  InvalidSpec,
  DimensionalCondition,  // dim Pi_O(Z) >= rank Z for a block that must be transformed
  TargetInImage,         // target lies in Pi_O(Z)
  DirectionExhausted,    // no admissible coefficient direction found
  PivotTooSmall,         // no u_Z with usable u_Z^T Z v and xi^T z_tar
  RankOnePrecondition,   // xi^T Z v != 1 or xi^T z_tar == 0
};

class AttackError : public std::runtime_error {
 public:
  AttackError(AttackFailure kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] AttackFailure kind() const { return kind_; }

 private:
  AttackFailure kind_;
};

/// Target eigenpair (lambda, x0) with x0 in ker C, and the initial input u0.
struct AttackSpec {
  double lambda = 0.0;
  Vector x0;
  Vector u0;

  void validate(const SystemModel& sys, const Tolerance& tol = {}) const {
    if (x0.size() != sys.n || u0.size() != sys.m) {
      throw AttackError(AttackFailure::InvalidSpec, "attack spec: x0 must have n entries and u0 m entries");
    }
    if (!x0.allFinite() || !u0.allFinite() || !std::isfinite(lambda)) {
      throw AttackError(AttackFailure::InvalidSpec, "attack spec: non-finite entries");
    }
    const double nx = x0.norm();
    if (nx == 0.0) throw AttackError(AttackFailure::InvalidSpec, "attack spec: x0 must be nonzero");
    const double cx = (sys.C * x0).norm();
    if (cx > tol.containment() * std::max(1.0, spectral_norm(sys.C)) * nx) {
      throw AttackError(AttackFailure::InvalidSpec,
                        "attack spec: x0 is not in ker C (||C x0|| = " + std::to_string(cx) + ")");
    }
  }
};

struct Targets {
  Vector x0, x1, u0, y0;

  [[nodiscard]] const Vector& operator[](Block b) const {
    switch (b) {
      case Block::XMinus: return x0;
      case Block::XPlus: return x1;
      case Block::UMinus: return u0;
      case Block::YMinus: return y0;
    }
    throw std::logic_error("unknown block");
  }
};

/// One-step trajectory of the malicious model: x1 = lambda x0 + B u0, y0 = D u0.
inline Targets build_targets(const AttackSpec& spec, const SystemModel& sys) {
  return {spec.x0, spec.lambda * spec.x0 + sys.B * spec.u0, spec.u0, sys.D * spec.u0};
}

struct BlockTransform {
  Matrix phi_x_minus, phi_x_plus, phi_u, phi_y;

  static BlockTransform identity(const SystemModel& sys) {
    return {Matrix::Identity(sys.n, sys.n), Matrix::Identity(sys.n, sys.n), Matrix::Identity(sys.m, sys.m),
            Matrix::Identity(sys.p, sys.p)};
  }

  [[nodiscard]] Matrix& operator[](Block b) {
    switch (b) {
      case Block::XMinus: return phi_x_minus;
      case Block::XPlus: return phi_x_plus;
      case Block::UMinus: return phi_u;
      case Block::YMinus: return phi_y;
    }
    throw std::logic_error("unknown block");
  }
  [[nodiscard]] const Matrix& operator[](Block b) const { return const_cast<BlockTransform&>(*this)[b]; }

  [[nodiscard]] Dataset apply(const Dataset& d) const {
    return {phi_x_minus * d.X_minus, phi_x_plus * d.X_plus, phi_u * d.U_minus, phi_y * d.Y_minus};
  }

  /// blk-diag(Phi_-^X, Phi_+^X, Phi_-^U, Phi_-^Y)
  [[nodiscard]] Matrix stacked() const {
    const Index n = phi_x_minus.rows(), m = phi_u.rows(), p = phi_y.rows();
    Matrix out = Matrix::Zero(2 * n + m + p, 2 * n + m + p);
    out.block(0, 0, n, n) = phi_x_minus;
    out.block(n, n, n, n) = phi_x_plus;
    out.block(2 * n, 2 * n, m, m) = phi_u;
    out.block(2 * n + m, 2 * n + m, p, p) = phi_y;
    return out;
  }

  [[nodiscard]] bool nonsingular(const Tolerance& tol = {}) const {
    for (Block b : kBlocks) {
      const Matrix& phi = (*this)[b];
      if (numerical_rank(phi, tol) != phi.rows()) return false;
    }
    return true;
  }
};

/// Pi_O(Z) = Z J*(D). Rank decisions use the scale of Z.
inline Subspace pi_O(const Matrix& Z, const Subspace& j_star) {
  require_dims(Z.cols() == j_star.ambient_dim(), "pi_O: Z columns must match coefficient space");
  if (j_star.is_zero()) return Subspace::zero(Z.rows(), j_star.tol());
  return image(Z * j_star.basis(), j_star.tol(), spectral_norm(Z));
}

struct BlockFeasibility {
  Index dim_pi = 0;
  Index rank_z = 0;
  bool dimensional_ok = false;  // dim Pi_O(Z) < rank Z
};

struct FeasibilityVerdict {
  std::array<BlockFeasibility, 4> blocks{};
  bool common_v_exists = false;

  [[nodiscard]] const BlockFeasibility& operator[](Block b) const { return blocks[static_cast<int>(b)]; }
};

namespace detail {

/// Z^{-1} Pi_O(Z) = J* + ker Z.
inline Subspace excluded_set(const Matrix& Z, const Subspace& j_star) {
  return preimage(Z, pi_O(Z, j_star), j_star.tol(), spectral_norm(Z));
}

/// Coefficient directions the chosen v must live in: J*^perp, further cut
/// down to ker Z for every block whose target is zero (those blocks stay
/// untouched, which needs Z v = 0).
inline Subspace admissible_directions(const Dataset& data, const Subspace& j_star, const BlockMask& passive) {
  Subspace space = complement(j_star);
  for (Block b : kBlocks) {
    if (!passive[static_cast<int>(b)]) continue;
    const Matrix& Z = block_of(data, b);
    space = intersect(space, kernel(Z, j_star.tol(), spectral_norm(Z)));
  }
  return space;
}

}  // namespace detail

/// Pick a unit v in J*^perp with v ∉ Z^{-1} Pi_O(Z) for every active block
/// and v ∈ ker Z for every passive block. Seeded random draws projected onto
/// the admissible space; each non-membership margin must exceed 100 * tol.
inline Vector choose_direction(const Dataset& data, const Subspace& j_star, const Tolerance& tol,
                               std::uint64_t seed, const BlockMask& passive = {}) {
  const Subspace space = detail::admissible_directions(data, j_star, passive);
  if (space.is_zero()) {
    throw AttackError(AttackFailure::DirectionExhausted, "choose_direction: admissible coefficient space is {0}");
  }
  std::array<Subspace, 4> excluded_perp;
  for (Block b : kBlocks) {
    if (passive[static_cast<int>(b)]) continue;
    excluded_perp[static_cast<int>(b)] = complement(detail::excluded_set(block_of(data, b), j_star));
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const double margin = 100.0 * tol.rel;
  constexpr int kMaxTries = 64;
  for (int attempt = 0; attempt < kMaxTries; ++attempt) {
    Vector c(space.dim());
    for (Index i = 0; i < c.size(); ++i) c(i) = normal(rng);
    Vector v = space.basis() * c;
    const double nv = v.norm();
    if (nv == 0.0) continue;
    v /= nv;
    bool ok = true;
    for (Block b : kBlocks) {
      if (passive[static_cast<int>(b)]) continue;
      if (excluded_perp[static_cast<int>(b)].project(v).norm() <= margin) {
        ok = false;
        break;
      }
    }
    if (ok) return v;
  }
  throw AttackError(AttackFailure::DirectionExhausted,
                    "choose_direction: no coefficient direction escapes Z^{-1} Pi_O(Z) for all blocks");
}

/// Per-block dimensional condition, plus whether choose_direction finds a
/// common direction (passive blocks are exempt from the condition).
inline FeasibilityVerdict check_feasibility(const Dataset& data, const Subspace& j_star, const Tolerance& tol,
                                            const BlockMask& passive = {}, std::uint64_t seed = 0) {
  FeasibilityVerdict out;
  for (Block b : kBlocks) {
    const Matrix& Z = block_of(data, b);
    auto& rec = out.blocks[static_cast<int>(b)];
    rec.dim_pi = pi_O(Z, j_star).dim();
    rec.rank_z = numerical_rank(Z, tol);
    rec.dimensional_ok = rec.dim_pi < rec.rank_z;
  }
  try {
    (void)choose_direction(data, j_star, tol, seed, passive);
    out.common_v_exists = true;
  } catch (const AttackError&) {
    out.common_v_exists = false;
  }
  return out;
}

/// Phi_Z = I + (z_tar - Z v) xi^T. Requires xi^T Z v = 1 and xi^T z_tar != 0.
inline Matrix rank_one_map(const Matrix& Z, const Vector& v, const Vector& z_tar, const Vector& xi,
                           const Tolerance& tol = {}) {
  require_dims(Z.cols() == v.size() && Z.rows() == z_tar.size() && Z.rows() == xi.size(),
               "rank_one_map: inconsistent dimensions");
  const Vector zv = Z * v;
  const double pivot = xi.dot(zv);
  const double slack = 100.0 * tol.rel;
  if (std::abs(pivot - 1.0) > slack) {
    throw AttackError(AttackFailure::RankOnePrecondition,
                      "rank_one_map: xi^T Z v = " + std::to_string(pivot) + ", expected 1");
  }
  const double gain = xi.dot(z_tar);
  if (std::abs(gain) <= slack * xi.norm() * z_tar.norm() || gain == 0.0) {
    throw AttackError(AttackFailure::RankOnePrecondition, "rank_one_map: xi^T z_tar vanishes, map would be singular");
  }
  const Index mz = Z.rows();
  return Matrix::Identity(mz, mz) + (z_tar - zv) * xi.transpose();
}

namespace detail {

/// xi_Z = u_Z / (u_Z^T Z v) with u_Z ∈ Pi_O(Z)^perp. The first candidate is
/// the normalized projection of Z v (largest pivot); if it is orthogonal to
/// the target, the projection of the target is mixed in.
inline Vector choose_xi(const Matrix& Z, const Vector& v, const Vector& z_tar, const Subspace& pi,
                        const Tolerance& tol) {
  const Subspace perp = complement(pi);
  const Vector zv = Z * v;
  const double zscale = std::max(1.0, spectral_norm(Z));
  const double slack = 100.0 * tol.rel;
  const Vector pzv = perp.project(zv);
  const Vector pt = perp.project(z_tar);
  const std::array<double, 4> mix{0.0, 1.0, -1.0, 0.5};
  for (double a : mix) {
    Vector u = pzv.normalized();
    if (a != 0.0 && pt.norm() > 0.0) u += a * pt.normalized();
    const double un = u.norm();
    if (un == 0.0) continue;
    u /= un;
    const double pivot = u.dot(zv);
    if (std::abs(pivot) <= slack * zscale) continue;
    Vector xi = u / pivot;
    if (std::abs(xi.dot(z_tar)) > slack * xi.norm() * z_tar.norm()) return xi;
  }
  throw AttackError(AttackFailure::PivotTooSmall, "no normal vector u_Z gives a usable pivot");
}

}  // namespace detail

struct AttackResult {
  BlockTransform transform;
  Dataset attacked;
  Dataset delta;
  Vector v;
  Targets targets;
  AttackSpec spec;
  Subspace j_star;
  BlockMask passive{};
};

/// Blocks whose target is zero: they must be left untouched (Z v = 0),
/// since a nonsingular map cannot send a nonzero Z v to zero.
inline BlockMask passive_blocks(const Targets& t) {
  BlockMask mask{};
  for (Block b : kBlocks) mask[static_cast<int>(b)] = t[b].size() == 0 || t[b].isZero(0.0);
  return mask;
}

/// Builds the block maps for a fixed direction v and explicit targets.
inline BlockTransform build_transform(const Dataset& data, const Subspace& j_star, const Vector& v,
                                      const Targets& targets, const Tolerance& tol = {}) {
  const Index n = data.X_minus.rows(), m = data.U_minus.rows(), p = data.Y_minus.rows();
  BlockTransform phi{Matrix::Identity(n, n), Matrix::Identity(n, n), Matrix::Identity(m, m),
                     Matrix::Identity(p, p)};
  for (Block b : kBlocks) {
    const Matrix& Z = block_of(data, b);
    const Vector& z_tar = targets[b];
    const Vector zv = Z * v;
    const double zscale = std::max(1.0, spectral_norm(Z));
    if ((z_tar - zv).norm() <= tol.containment() * zscale) continue;  // already on target
    const Vector xi = detail::choose_xi(Z, v, z_tar, pi_O(Z, j_star), tol);
    phi[b] = rank_one_map(Z, v, z_tar, xi, tol);
  }
  return phi;
}

/// Data-driven structural attack: choose v, build Phi_Z per block, apply.
inline AttackResult run_attack(const Dataset& data, const SystemModel& sys, const Annihilator& ann,
                               const AttackSpec& spec, const Tolerance& tol = {}, std::uint64_t seed = 0) {
  spec.validate(sys, tol);
  const AffineSetParams params = compute_pqr(data, sys, ann);
  const Subspace j_star = max_coeff_space(params, sys, tol);
  const Targets targets = build_targets(spec, sys);
  const BlockMask passive = passive_blocks(targets);

  for (Block b : kBlocks) {
    if (passive[static_cast<int>(b)]) continue;
    const Matrix& Z = block_of(data, b);
    const Subspace pi = pi_O(Z, j_star);
    const Index rank = numerical_rank(Z, tol);
    if (pi.dim() >= rank) {
      throw AttackError(AttackFailure::DimensionalCondition,
                        std::string("dim Pi_O(") + std::string(block_name(b)) + ") = " + std::to_string(pi.dim()) +
                            " is not below rank " + std::to_string(rank));
    }
    const Vector& t = targets[b];
    if ((t - pi.project(t)).norm() <= tol.containment() * t.norm()) {
      throw AttackError(AttackFailure::TargetInImage,
                        std::string("target for ") + std::string(block_name(b)) + " lies in Pi_O(Z)");
    }
  }

  Vector v = choose_direction(data, j_star, tol, seed, passive);
  BlockTransform phi = build_transform(data, j_star, v, targets, tol);
  Dataset attacked = phi.apply(data);
  Dataset delta = attacked - data;
  return {std::move(phi), std::move(attacked), std::move(delta), std::move(v), targets, spec, j_star, passive};
}

struct Theorem1Report {
  // (i) J*(D) ⊕ span{v} ⊆ J*(D~)
  Index dim_j = 0;
  Index dim_j_attacked = 0;
  double v_alignment = 0.0;  // ||proj_{J*(D)} v||
  bool part_i = false;
  // (ii) Sigma(D~) contains a model with eigenpair (lambda, x0)
  bool sigma_nonempty = false;
  double eigen_residual = 0.0;
  double sigma_residual = 0.0;
  bool part_ii = false;
  std::optional<Matrix> a_star;
  // (iii) D~ not informative
  bool part_iii = false;
  std::optional<Vector> witness;

  [[nodiscard]] bool all_passed() const { return part_i && part_ii && part_iii; }
};

inline Theorem1Report verify_theorem1(const Dataset& data, const Dataset& attacked, const SystemModel& sys,
                                      const Annihilator& ann, const Vector& v, const AttackSpec& spec,
                                      const Tolerance& tol = {}, double residual_tol = 1e-8) {
  Theorem1Report rep;
  const AffineSetParams before = compute_pqr(data, sys, ann);
  const AffineSetParams after = compute_pqr(attacked, sys, ann);
  const Subspace j0 = max_coeff_space(before, sys, tol);
  const InformativityReport info = is_informative_SO(attacked, sys, ann, tol);
  const Subspace& j1 = info.j_star;

  rep.dim_j = j0.dim();
  rep.dim_j_attacked = j1.dim();
  const Vector vu = v.normalized();
  rep.v_alignment = j0.project(vu).norm();
  const Subspace grown = sum(j0, Subspace::from_orthonormal(vu, tol));
  rep.part_i = rep.v_alignment <= tol.containment() && contains(j1, grown);

  const auto a0 = sigma_representative(after, tol, residual_tol);
  rep.sigma_nonempty = a0.has_value();
  if (a0) {
    const Vector& x0 = spec.x0;
    const Vector w = spec.lambda * x0 - (*a0) * x0;
    // Q w = 0 on attacked data, so the rank-one correction stays in Sigma.
    Matrix a_star = *a0 + w * x0.transpose() / x0.squaredNorm();
    rep.eigen_residual = (a_star * x0 - spec.lambda * x0).norm();
    rep.sigma_residual = sigma_residual(a_star, after) / std::max(1.0, after.R.norm());
    rep.part_ii = rep.eigen_residual <= residual_tol * x0.norm() && rep.sigma_residual <= residual_tol;
    rep.a_star = std::move(a_star);
  } else {
    rep.part_ii = true;  // statement is conditional on Sigma(D~) being nonempty
  }

  rep.part_iii = !info.informative && info.witness.has_value();
  rep.witness = info.witness;
  return rep;
}

}  // namespace infoattack
