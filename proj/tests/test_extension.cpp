#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "rigspec/extension_family.hpp"

using namespace rigspec;

namespace {

constexpr double kPi = std::numbers::pi;
const cplx I(0, 1);

std::shared_ptr<const IntervalQuadrature> quad(std::size_t n) { return std::make_shared<const IntervalQuadrature>(n); }

// closed form of u = (S_alpha - lambda)^{-1} g given the primitive P(x) = int_0^x e^{-i lambda t} g(t) dt
cplx oracle_u(cplx alpha, cplx lambda, double x, cplx Px, cplx P1) {
  const cplx u0 = I * std::exp(I * lambda) * P1 / (alpha - std::exp(I * lambda));
  return std::exp(I * lambda * x) * (u0 + I * Px);
}

}  // namespace

TEST(Quadrature, GaussLegendreExactForPolynomials) {
  for (std::size_t n : {1u, 2u, 5u, 16u, 64u}) {
    const auto r = gauss_legendre(n, 0.0, 1.0);
    for (std::size_t k = 0; k < 2 * n; ++k) {
      const double q = r.integrate([k](double x) { return std::pow(x, static_cast<double>(k)); });
      EXPECT_NEAR(q, 1.0 / static_cast<double>(k + 1), 1e-14) << n << " " << k;
    }
  }
  // three-point rule: nodes 0, +-sqrt(3/5), weights 8/9, 5/9
  const auto r3 = gauss_legendre(3);
  EXPECT_NEAR(r3.nodes(2), std::sqrt(0.6), 1e-15);
  EXPECT_EQ(r3.nodes(1), 0.0);
  EXPECT_NEAR(r3.weights(1), 8.0 / 9.0, 1e-15);
  EXPECT_NEAR(r3.weights(0), 5.0 / 9.0, 1e-15);
}

TEST(Quadrature, PrimitiveAndDerivativeSpectral) {
  IntervalQuadrature q(64);
  const auto f = q.sample([](double x) { return cplx(std::cos(3 * x), std::sin(x)); });
  const auto F = q.primitive(f);
  const auto D = q.derivative(f);
  for (Eigen::Index k = 0; k < f.size(); ++k) {
    const double x = q.nodes()(k);
    EXPECT_NEAR(std::abs(F(k) - cplx(std::sin(3 * x) / 3, 1 - std::cos(x))), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(D(k) - cplx(-3 * std::sin(3 * x), std::cos(x))), 0.0, 1e-10);
  }
  EXPECT_NEAR(std::abs(q.primitive_at(f, 1.0) - q.integral(f)), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(q.evaluate(f, 0.25) - cplx(std::cos(0.75), std::sin(0.25))), 0.0, 1e-14);
}

TEST(Momentum, PeriodicClosedForm) {
  auto q = quad(128);
  const MomentumExtension s(1.0, q);
  const cplx lambda = kPi;
  const auto g = q->sample([](double x) { return std::exp(I * kPi * x); });
  const auto r = momentum_resolvent_apply(s, lambda, g);
  // e^{-i pi t} g = 1, so the primitive is x and u = e^{i pi x} (-i/2 + i x)
  for (Eigen::Index k = 0; k < g.size(); ++k) {
    const double x = q->nodes()(k);
    EXPECT_NEAR(std::abs(r.u(k) - std::exp(I * kPi * x) * (-0.5 * I + I * x)), 0.0, 1e-12);
  }
  EXPECT_LE(r.ode_residual, 1e-10);
  EXPECT_LE(r.boundary_residual, 1e-12);
}

TEST(Momentum, BoundaryConditionForRandomSmoothG) {
  auto q = quad(128);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int trial = 0; trial < 10; ++trial) {
    const double a = U(rng), b = U(rng), c = U(rng);
    const auto g = q->sample([&](double x) { return cplx(a * std::cos(4 * x) + b, c * x * x); });
    const auto s = MomentumExtension::from_angle(3 * U(rng), q);
    const cplx lambda(5 * U(rng), U(rng));
    const auto r = momentum_resolvent_apply(s, lambda, g);
    EXPECT_LE(r.boundary_residual, 1e-12);
    EXPECT_LE(r.ode_residual, 1e-8);
  }
}

TEST(Momentum, EigenvalueRejected) {
  auto q = quad(32);
  const MomentumExtension s(1.0, q);
  const auto g = q->sample([](double) { return cplx(1.0); });
  EXPECT_THROW(momentum_resolvent_apply(s, 2 * kPi, g), PreconditionError);
  EXPECT_NO_THROW(momentum_resolvent_apply(s, kPi, g));
  EXPECT_THROW(MomentumExtension(cplx(2.0), q), PreconditionError);
}

TEST(Momentum, EigenvalueLattice) {
  auto q = quad(8);
  for (double theta : {0.0, kPi / 2, kPi}) {
    const auto s = MomentumExtension::from_angle(theta, q);
    const auto ev = s.eigenvalues_in(-10, 10);
    for (double e : ev) EXPECT_TRUE(s.is_eigenvalue(e, 1e-10));
    for (std::size_t k = 0; k + 1 < ev.size(); ++k) EXPECT_NEAR(ev[k + 1] - ev[k], 2 * kPi, 1e-12);
    EXPECT_FALSE(s.is_eigenvalue(cplx(theta, 0.1), 1e-10));
  }
}

TEST(Krein, EqualExtensionsGiveZero) {
  auto q = quad(256);
  const auto a = MomentumExtension::from_angle(0.7, q);
  const auto g = q->sample([](double x) { return cplx(std::exp(x), 0.0); });
  const auto r = krein_difference_check(a, a, cplx(0.3, 0.2), g);
  EXPECT_EQ(r.residual, 0.0);
  EXPECT_EQ(r.formula.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Krein, ConstantGAtImaginaryLambda) {
  auto q = quad(256);
  const MomentumExtension a(1.0, q), b(-1.0, q);
  const cplx lambda = I;
  const auto g = q->sample([](double) { return cplx(1.0); });
  const auto r = krein_difference_check(a, b, lambda, g);
  EXPECT_LE(r.residual, 1e-10 * r.g_sup);
  // oracle: int_0^x e^{-i lambda t} dt = (1 - e^{-i lambda x}) / (i lambda)
  auto P = [&](double x) { return (1.0 - std::exp(-I * lambda * x)) / (I * lambda); };
  for (Eigen::Index k = 0; k < g.size(); ++k) {
    const double x = q->nodes()(k);
    const cplx d = oracle_u(1.0, lambda, x, P(x), P(1)) - oracle_u(-1.0, lambda, x, P(x), P(1));
    EXPECT_NEAR(std::abs(r.difference(k) - d), 0.0, 1e-12);
  }
}

TEST(Krein, LinearGAtComplexLambda) {
  auto q = quad(256);
  const MomentumExtension a(std::polar(1.0, kPi / 3), q), b(std::polar(1.0, -kPi / 3), q);
  const cplx lambda(0.5, 0.5);
  const auto g = q->sample([](double x) { return cplx(x); });
  const auto r = krein_difference_check(a, b, lambda, g);
  EXPECT_LE(r.residual, 1e-10 * r.g_sup);
  // oracle: int_0^x t e^{c t} dt = e^{c x}(x/c - 1/c^2) + 1/c^2 with c = -i lambda
  const cplx c = -I * lambda;
  auto P = [&](double x) { return std::exp(c * x) * (x / c - 1.0 / (c * c)) + 1.0 / (c * c); };
  for (Eigen::Index k = 0; k < g.size(); ++k) {
    const double x = q->nodes()(k);
    const cplx d = oracle_u(a.alpha(), lambda, x, P(x), P(1)) - oracle_u(b.alpha(), lambda, x, P(x), P(1));
    EXPECT_NEAR(std::abs(r.difference(k) - d), 0.0, 1e-12);
  }
}

TEST(Krein, SwapFlipsSignExactly) {
  auto q = quad(128);
  const auto a = MomentumExtension::from_angle(0.4, q), b = MomentumExtension::from_angle(-2.0, q);
  const auto g = q->sample([](double x) { return cplx(std::sin(5 * x), x); });
  const auto ab = krein_difference_check(a, b, cplx(1.5, -0.25), g);
  const auto ba = krein_difference_check(b, a, cplx(1.5, -0.25), g);
  EXPECT_EQ(ab.residual, ba.residual);
  EXPECT_TRUE(ab.difference == -ba.difference);
  EXPECT_TRUE(ab.formula == -ba.formula);
}

TEST(Krein, CollisionRejected) {
  auto q = quad(32);
  const MomentumExtension a(1.0, q), b(-1.0, q);
  const auto g = q->sample([](double) { return cplx(1.0); });
  EXPECT_THROW(krein_difference_check(a, b, kPi, g), PreconditionError);
  EXPECT_THROW(krein_difference_check(a, b, 0.0, g), PreconditionError);
}

TEST(MomentumCover, Examples) {
  std::vector<cplx> line;
  for (int k = 0; k <= 200; ++k) line.push_back(-10.0 + 0.1 * k);
  for (const auto& row : momentum_union_resolvent({1.0, -1.0}, line)) EXPECT_TRUE(row.covered());
  const auto single = momentum_union_resolvent({1.0}, {2 * kPi});
  EXPECT_FALSE(single[0].covered());

  std::vector<cplx> grid;
  for (int a = 0; a <= 40; ++a)
    for (int b = 0; b <= 4; ++b) grid.push_back(cplx(-10.0 + 0.5 * a, -1.0 + 0.5 * b));
  for (const auto& row : momentum_union_resolvent({1.0, I, -1.0, -I}, grid)) EXPECT_TRUE(row.covered());
  // lattice points of 1 are covered by the other three
  const auto lat = momentum_union_resolvent({1.0, I, -1.0, -I}, {0.0, 2 * kPi});
  EXPECT_EQ(lat[0].covering.size(), 3u);
  EXPECT_THROW(momentum_union_resolvent({}, {0.0}), PreconditionError);
}

TEST(MomentumCover, DistinctAlphasAlwaysCover) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-kPi, kPi);
  std::vector<cplx> line;
  for (int k = 0; k <= 200; ++k) line.push_back(-10.0 + 0.1 * k);
  for (int t = 0; t < 20; ++t) {
    const double a = U(rng), b = U(rng);
    line.push_back(a);
    line.push_back(b + 2 * kPi);
    for (const auto& row : momentum_union_resolvent({std::polar(1.0, a), std::polar(1.0, b)}, line)) EXPECT_TRUE(row.covered());
  }
}

TEST(Momentum, EquivalenceBridge) {
  auto q = quad(64);
  const MomentumExtension a(1.0, q), b(-1.0, q);
  RunConfig cfg;
  cfg.equivalence_probes = 8;
  cfg.truncation.n_work = 64;
  const cplx lambda(0.5, 0.5);
  EXPECT_TRUE(equivalent(momentum_handle(a, lambda), momentum_handle(a, lambda), Basis::interval_l2, cfg));
  EXPECT_FALSE(equivalent(momentum_handle(a, lambda), momentum_handle(b, lambda), Basis::interval_l2, cfg));
}

TEST(DeltaInteraction, Catalog) {
  const DeltaInteraction att{-2.0, 0.0};
  const auto s = att.spectrum();
  EXPECT_TRUE(s.contains(-1.0, 1e-15));
  EXPECT_TRUE(s.contains(3.0, 0.0));
  EXPECT_FALSE(s.contains(-0.5, 1e-3));
  EXPECT_FALSE(s.contains(cplx(1, 1), 0.5));
  const DeltaInteraction rep{3.0, 0.0};
  EXPECT_TRUE(rep.spectrum().points.empty());
  EXPECT_FALSE(rep.bound_state().has_value());
  EXPECT_THROW(bound_state_check(rep), PreconditionError);
}

TEST(DeltaInteraction, BoundStateRichardson) {
  const DeltaInteraction d{-2.0, 1.5};
  const auto r = bound_state_check(d, {20.0, 0.1, 3});
  ASSERT_EQ(r.raw.size(), 3u);
  EXPECT_NEAR(r.estimate, -1.0, 0.01);
  // discrete oracle on the infinite grid: u_j = r^{|j|} with r^2 - alpha h r - 1 = 0, E = -(r + 1/r - 2)/h^2
  for (std::size_t k = 0; k < r.h.size(); ++k) {
    const double h = r.h[k];
    const double rr = (d.alpha * h + std::sqrt(d.alpha * d.alpha * h * h + 4.0)) / 2.0;
    const double E = -(rr + 1.0 / rr - 2.0) / (h * h);
    EXPECT_NEAR(r.raw[k], E, 1e-8);
  }
  EXPECT_LE(std::abs(r.estimate + 1.0), std::abs(r.raw.back() + 1.0));
}
