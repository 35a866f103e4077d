#include "support.hpp"

#include <gtest/gtest.h>

using namespace infoattack;
namespace ts = testing_support;

namespace {

SystemModel autonomous(const Matrix& A, const Matrix& C) {
  SystemModel sys;
  sys.n = A.rows();
  sys.m = 0;
  sys.p = C.rows();
  sys.A_true = A;
  sys.B = Matrix::Zero(sys.n, 0);
  sys.C = C;
  sys.D = Matrix::Zero(sys.p, 0);
  sys.E = Matrix::Zero(sys.n, 0);
  sys.F = Matrix::Zero(sys.p, 0);
  return sys;
}

/// Random (A, C) with a planted unobservable subspace of dimension `hidden`.
SystemModel with_unobservable_part(Index n, Index p, Index hidden, Rng& rng) {
  Matrix A = random_matrix(n, n, rng) * 0.5;
  Matrix C = random_matrix(p, n, rng);
  // Block-triangular in a random basis: the last `hidden` coordinates never reach C.
  A.topRightCorner(n - hidden, hidden).setZero();
  C.rightCols(hidden).setZero();
  const Matrix S = random_matrix(n, n, rng) + 3.0 * Matrix::Identity(n, n);
  return autonomous(S * A * S.inverse(), C * S.inverse());
}

}  // namespace

TEST(ModelVStar, DiagonalExample) {
  Matrix A(2, 2), C(1, 2);
  A << 0.5, 0, 0, 2;
  C << 1, 0;
  const Subspace V = model_v_star(A, Matrix::Zero(2, 0), C, Matrix::Zero(1, 0));
  ASSERT_EQ(V.dim(), 1);
  EXPECT_NEAR(std::abs(V.basis()(1, 0)), 1.0, 1e-12);
}

TEST(ModelVStar, EqualsObservabilityKernelWithoutInput) {
  Rng rng(1);
  for (int trial = 0; trial < 30; ++trial) {
    const Index n = 2 + trial % 4, hidden = trial % n;
    const SystemModel sys = with_unobservable_part(n, 1 + trial % 2, hidden, rng);
    const Subspace V = model_v_star(*sys.A_true, sys.B, sys.C, sys.D);
    const Matrix oracle = ts::observability_kernel(*sys.A_true, sys.C, 1e-9);
    EXPECT_EQ(V.dim(), oracle.cols());
    EXPECT_TRUE(same_span(V, Subspace::from_orthonormal(oracle), 1e-7));
  }
}

TEST(ModelVStar, InjectiveOutputGivesZero) {
  Rng rng(2);
  const Matrix A = random_matrix(3, 3, rng), B = random_matrix(3, 2, rng);
  EXPECT_TRUE(model_v_star(A, B, Matrix::Identity(3, 3), Matrix::Zero(3, 2)).is_zero());
}

TEST(ModelVStar, InvertibleFeedthroughGivesWholeSpace) {
  Rng rng(3);
  const Matrix A = random_matrix(3, 3, rng), B = random_matrix(3, 1, rng), C = random_matrix(1, 3, rng);
  EXPECT_TRUE(model_v_star(A, B, C, Matrix::Ones(1, 1)).is_full());
}

TEST(ModelVStar, LineNetworkIsStronglyObservable) {
  const SystemModel sys = paper_example_system();
  EXPECT_TRUE(model_v_star(*sys.A_true, sys.B, sys.C, sys.D).is_zero());
}

TEST(Isa, TraceIsMonotoneAndShort) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const SystemModel sys = random_system(3, 1, 1, rng);
    const Dataset d = random_columns_dataset(sys, 6 + trial % 5, rng);
    const auto res = max_coeff_space_trace(compute_pqr(d, sys, Annihilator::identity(3, 1)), sys);
    for (std::size_t i = 1; i < res.trace.size(); ++i) EXPECT_LT(res.trace[i], res.trace[i - 1]);
    EXPECT_LE(static_cast<Index>(res.trace.size()), d.T() + 1);
  }
}

TEST(Isa, FixedPointCertificateAndMaximality) {
  Rng rng(5);
  for (int trial = 0; trial < 15; ++trial) {
    const SystemModel sys = random_system(3, 1, 2, rng);
    const Dataset d = random_columns_dataset(sys, 9, rng);
    const AffineSetParams pqr = compute_pqr(d, sys, Annihilator::identity(3, 2));
    const Subspace J = max_coeff_space(pqr, sys);
    EXPECT_LE(coefficient_inclusion_residual(pqr, sys, J), 1e-8);
    const Subspace outside = complement(J);
    for (int k = 0; k < 20 && !outside.is_zero(); ++k) {
      const Vector dir = outside.basis() * random_matrix(outside.dim(), 1, rng);
      Matrix grown(J.ambient_dim(), J.dim() + 1);
      grown << J.basis(), dir.normalized();
      EXPECT_GT(coefficient_inclusion_residual(pqr, sys, image(grown)), 1e-6);
    }
  }
}

TEST(Isa, DataSpaceMatchesObservabilityKernel) {
  Rng rng(6);
  for (int trial = 0; trial < 25; ++trial) {
    const Index n = 2 + trial % 4;
    const SystemModel sys = with_unobservable_part(n, 1, trial % n, rng);
    const Dataset d = random_columns_dataset(sys, 2 * n + 2, rng);
    const Subspace J = max_coeff_space(compute_pqr(d, sys, Annihilator::identity(n, 1)), sys);
    const Subspace XJ = image(d.X_minus * J.basis(), {}, spectral_norm(d.X_minus));
    const Matrix oracle = ts::observability_kernel(*sys.A_true, sys.C, 1e-9);
    EXPECT_TRUE(same_span(XJ, Subspace::from_orthonormal(oracle), 1e-7)) << "trial " << trial;
    EXPECT_TRUE(contains(J, kernel(d.X_minus)));
  }
}

TEST(Isa, SingleColumnObservableGivesZero) {
  const SystemModel sys = paper_example_system();
  Dataset d;
  d.X_minus = Matrix::Zero(5, 1);
  d.X_minus(0, 0) = 1.0;
  d.U_minus = Matrix::Zero(1, 1);
  d.X_plus = *sys.A_true * d.X_minus;
  d.Y_minus = sys.C * d.X_minus;
  EXPECT_TRUE(max_coeff_space(compute_pqr(d, sys, Annihilator::identity(5, 2)), sys).is_zero());
}

TEST(Informativity, LineNetworkDataIsInformative) {
  const SystemModel sys = paper_example_system();
  for (auto mode : {InitialState::Trajectory, InitialState::PerColumn}) {
    SimConfig cfg;
    cfg.T = 100;
    cfg.seed = 42;
    cfg.initial_state = mode;
    const Dataset d = simulate(sys, cfg);
    const InformativityReport rep = is_informative_SO(d, sys, Annihilator::identity(5, 2));
    EXPECT_TRUE(rep.informative);
    EXPECT_TRUE(rep.cond_image && rep.cond_kernel);
    EXPECT_FALSE(rep.witness.has_value());
    EXPECT_EQ(rep.j_star.dim(), 95);  // ker X_- only
    EXPECT_TRUE(rep.v_star_data.is_zero());
  }
}

TEST(Informativity, ShortHorizonIsNotInformative) {
  const SystemModel sys = paper_example_system();
  SimConfig cfg;
  cfg.T = 3;
  cfg.seed = 1;
  const Dataset d = simulate(sys, cfg);
  const InformativityReport rep = is_informative_SO(d, sys, Annihilator::identity(5, 2));
  EXPECT_FALSE(rep.informative);
  EXPECT_FALSE(rep.cond_image);
}

TEST(Informativity, UnobservableDataHasWitness) {
  Rng rng(7);
  const SystemModel sys = with_unobservable_part(4, 1, 1, rng);
  const Dataset d = random_columns_dataset(sys, 10, rng);
  const InformativityReport rep = is_informative_SO(d, sys, Annihilator::identity(4, 1));
  EXPECT_FALSE(rep.informative);
  EXPECT_FALSE(rep.cond_kernel);
  ASSERT_TRUE(rep.witness.has_value());
  EXPECT_GT((d.X_minus * *rep.witness).norm(), 1e-6);
  EXPECT_NEAR(rep.j_star.project(*rep.witness).norm(), 1.0, 1e-10);
  EXPECT_EQ(rep.v_star_data.dim(), 1);
}

TEST(Informativity, RepresentativeModelIsStronglyObservable) {
  const SystemModel sys = paper_example_system();
  SimConfig cfg;
  cfg.T = 100;
  cfg.seed = 3;
  const Dataset d = simulate(sys, cfg);
  const AffineSetParams pqr = compute_pqr(d, sys, Annihilator::identity(5, 2));
  ASSERT_TRUE(is_informative_SO(d, sys, Annihilator::identity(5, 2)).informative);
  const auto a0 = sigma_representative(pqr);
  ASSERT_TRUE(a0.has_value());
  EXPECT_TRUE(model_v_star(*a0, sys.B, sys.C, sys.D).is_zero());
}
