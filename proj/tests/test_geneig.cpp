#include <gtest/gtest.h>

#include <numbers>

#include "rigspec/geneig.hpp"

using namespace rigspec;

namespace {

// (M_x - lambda) v in H_{-3}, entries written out from the three-term relation
double residual_oracle(const RVector& v, double lambda) {
  const std::size_t N = static_cast<std::size_t>(v.size());
  double acc = 0.0, home = 0.0;
  for (std::size_t n = 0; n <= N; ++n) {
    double r = 0.0;
    if (n >= 1 && n - 1 < N) r += std::sqrt(n / 2.0) * v(n - 1);
    if (n + 1 < N) r += std::sqrt((n + 1) / 2.0) * v(n + 1);
    if (n < N) r -= lambda * v(n);
    const double w = 1.0 / std::sqrt(1.0 + std::pow(n + 1.0, 6.0));
    acc += r * r * w * w;
  }
  for (std::size_t n = 0; n < N; ++n) {
    const double w = 1.0 / std::sqrt(1.0 + std::pow(n + 1.0, 2.0));
    home += v(n) * v(n) * w * w;
  }
  return std::sqrt(acc / home);
}

}  // namespace

TEST(HermiteFunctions, MatchesClosedFormsAndNormalization) {
  const double c = std::pow(std::numbers::pi, -0.25);
  for (double x : {-2.0, -0.3, 0.0, 1.7}) {
    const RVector v = hermite_functions(x, 4);
    const double g = c * std::exp(-x * x / 2);
    EXPECT_NEAR(v(0), g, 1e-15);
    EXPECT_NEAR(v(1), std::sqrt(2.0) * x * g, 1e-15);
    EXPECT_NEAR(v(2), (2 * x * x - 1) / std::sqrt(2.0) * g, 1e-15);
    EXPECT_NEAR(v(3), (2 * x * x * x - 3 * x) / std::sqrt(3.0) * g, 1e-14);
  }
  const auto rule = gauss_legendre(300, -25, 25);
  const Eigen::MatrixXd t = hermite_table(rule.nodes, 20);
  const Eigen::MatrixXd gram = t.transpose() * rule.weights.asDiagonal() * t;
  EXPECT_LE((gram - Eigen::MatrixXd::Identity(20, 20)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(HermiteFunctions, ScaledRecurrenceSurvivesLargeArguments) {
  // phi_n(x) for x = 40 underflows in the naive form; the scaled form agrees
  // with the naive form wherever the naive one is representable
  const RVector v = hermite_functions(40.0, 2000);
  EXPECT_TRUE(v.allFinite());
  EXPECT_EQ(v(0), 0.0);
  EXPECT_GT(v.cwiseAbs().maxCoeff(), 1e-3);
  const RVector w = hermite_functions(3.0, 60);
  double p0 = std::pow(std::numbers::pi, -0.25) * std::exp(-4.5), p1 = std::sqrt(2.0) * 3.0 * p0;
  for (std::size_t k = 1; k + 1 < 60; ++k) {
    const double p2 = std::sqrt(2.0 / (k + 1)) * 3.0 * p1 - std::sqrt(double(k) / (k + 1)) * p0;
    p0 = p1;
    p1 = p2;
    EXPECT_NEAR(w(k + 1), p2, 1e-12 * (1 + std::abs(p2)));
  }
}

TEST(DeltaEigenvector, ParityAtZero) {
  const auto g = delta_eigenvector_hermite(0.0, Index(1), 256);
  for (Eigen::Index n = 1; n < 256; n += 2) EXPECT_EQ(g.vector.coeffs(n), cplx(0.0));
  for (Eigen::Index n = 0; n < 256; n += 2) EXPECT_NE(g.vector.coeffs(n), cplx(0.0));
  const auto h = delta_eigenvector_hermite(0.8, Index(1), 64);
  const auto hm = delta_eigenvector_hermite(-0.8, Index(1), 64);
  for (Eigen::Index n = 0; n < 64; ++n)
    EXPECT_NEAR(hm.vector.coeffs(n).real(), (n % 2 ? -1.0 : 1.0) * h.vector.coeffs(n).real(), 1e-14);
}

TEST(DeltaEigenvector, ResidualSmallAndAgreesWithOracle) {
  const auto g = delta_eigenvector_hermite(1.0, Index(1), 1024);
  EXPECT_LE(g.residual, 1e-6);
  EXPECT_NEAR(g.residual, residual_oracle(g.vector.coeffs.real(), 1.0), 1e-12);
  EXPECT_EQ(g.home.label(), hermite_chain_space(Index(-1)).label());
  EXPECT_EQ(g.target.label(), hermite_chain_space(Index(-3)).label());
}

TEST(DeltaEigenvector, ResidualDecreasesWithTruncation) {
  for (double lambda : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t N : {256u, 512u, 1024u, 2048u}) {
      const auto g = delta_eigenvector_hermite(lambda, Index(1), N);
      EXPECT_LE(g.residual, prev) << lambda << " N=" << N;
      prev = g.residual;
    }
  }
}

TEST(DeltaEigenvector, Preconditions) {
  EXPECT_THROW(delta_eigenvector_hermite(60.0, Index(1), 16), PreconditionError);
  EXPECT_THROW(delta_eigenvector_hermite(0.0, Index(1, 2), 16), PreconditionError);
  EXPECT_THROW(delta_eigenvector_hermite(std::nan(""), Index(1), 16), PreconditionError);
  EXPECT_NO_THROW(delta_eigenvector_hermite(5.0, Index(1), 16));
}

TEST(Membership, ConvergesForHalfAndUpNotBelow) {
  // |phi_n(lambda)|^2 ~ n^{-1/2}, so the H_{-s} sum converges iff s > 1/4
  const auto one = membership_norm(0.5, Index(1));
  EXPECT_TRUE(one.converged);
  EXPECT_GT(one.norm, 0.0);
  const auto quarter = membership_norm(0.5, Index(1, 4));
  EXPECT_FALSE(quarter.converged);
  const auto first = smallest_membership_index(0.5);
  ASSERT_TRUE(first.has_value());
  EXPECT_TRUE(Index(1, 4) < *first);
}

TEST(Expansion, ReconstructsSmoothCoefficients) {
  CVector e0 = CVector::Zero(8);
  e0(0) = 1.0;
  const auto r0 = expansion_check(CoefficientVector{Basis::hermite, e0});
  EXPECT_LE(r0.error, 1e-8);
  EXPECT_LE(r0.parseval_error, 1e-6);
  EXPECT_TRUE(r0.rapidly_decreasing);

  CVector e3 = CVector::Zero(8);
  e3(3) = 1.0;
  EXPECT_LE(expansion_check(CoefficientVector{Basis::hermite, e3}).error, 1e-7);

  const auto z = expansion_check(CoefficientVector{Basis::hermite, CVector::Zero(8)});
  EXPECT_EQ(z.error, 0.0);
  EXPECT_EQ(z.parseval_error, 0.0);

  CVector mix = CVector::Zero(8);
  mix(0) = cplx(2.0, -1.0);
  mix(3) = 0.5;
  const auto rm = expansion_check(CoefficientVector{Basis::hermite, mix});
  const auto r3 = expansion_check(CoefficientVector{Basis::hermite, e3});
  EXPECT_LE((rm.reconstructed - (cplx(2.0, -1.0) * r0.reconstructed + 0.5 * r3.reconstructed)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(rm.parseval_error, 1e-6);
}

TEST(Expansion, WarnsOnSlowDecay) {
  CVector c(100);
  for (Eigen::Index n = 0; n < 100; ++n) c(n) = 1.0 / (n + 1);
  const auto r = expansion_check(CoefficientVector{Basis::hermite, c});
  EXPECT_FALSE(r.rapidly_decreasing);
  EXPECT_FALSE(r.warning.empty());
  EXPECT_THROW(expansion_check(CoefficientVector{Basis::fourier_torus, c}), BasisMismatch);
}

TEST(Restriction, PositionDeltaAndDiagonal) {
  const auto mx = restricted_operator(hermite_position_operator(), hermite_chain_space(Index(1)), 128);
  EXPECT_LE(mx.max_imag_eigenvalue, 1e-12);
  EXPECT_EQ(mx.hermitian_defect, 0.0);
  EXPECT_EQ(mx.domain_dimension, 128u);
  EXPECT_NE(mx.verdict.find("self-adjoint"), std::string::npos);

  const auto d = restricted_operator(torus_delta().op, ScaleSpace::sobolev_torus(Index(1)), 64);
  EXPECT_EQ(d.rank, 1u);

  const auto diag = restricted_operator(hermite_diagonal("n+1").op, hermite_chain_space(Index(1)), 64);
  EXPECT_EQ(diag.verdict, "diagonal, self-adjoint");
  EXPECT_EQ(diag.rank, 64u);
}
