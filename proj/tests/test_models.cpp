#include <gtest/gtest.h>

#include <numbers>

#include <Eigen/Eigenvalues>

#include "rigspec/models.hpp"
#include "rigspec/quadrature.hpp"
#include "rigspec/resolvent.hpp"

using namespace rigspec;

namespace {

constexpr double kPi = std::numbers::pi;

ScaleSpace W(int k) { return ScaleSpace::sobolev_torus(Index(k)); }

// normalized Hermite function phi_n by the plain recurrence (moderate x only)
double phi(std::size_t n, double x) {
  double p0 = std::pow(kPi, -0.25) * std::exp(-x * x / 2), p1 = std::sqrt(2.0) * x * p0;
  if (n == 0) return p0;
  for (std::size_t k = 1; k < n; ++k) {
    const double p2 = std::sqrt(2.0 / (k + 1)) * x * p1 - std::sqrt(double(k) / (k + 1)) * p0;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

}  // namespace

TEST(Gallery, HermiteDiagonalSpectra) {
  const auto inv = hermite_diagonal("1/(n+1)");
  EXPECT_TRUE(inv.expected.contains(0.0, 1e-12));
  EXPECT_TRUE(inv.expected.contains(0.5, 1e-12));
  EXPECT_TRUE(inv.expected.contains(1.0 / 3.0, 1e-12));
  EXPECT_FALSE(inv.expected.contains(0.4, 1e-3));
  EXPECT_FALSE(inv.expected.contains(cplx(0.5, 0.1), 1e-3));
  EXPECT_EQ(inv.expected.points.size(), 1u);

  const auto lin = hermite_diagonal("n+1");
  for (double k : {1.0, 2.0, 3.0, 100.0}) EXPECT_TRUE(lin.expected.contains(k, 1e-12));
  EXPECT_FALSE(lin.expected.contains(0.0, 1e-3));
  EXPECT_FALSE(lin.expected.contains(2.5, 1e-3));
  EXPECT_TRUE(lin.expected.points.empty());

  const auto zero = hermite_diagonal("0");
  EXPECT_TRUE(zero.expected.contains(0.0, 0.0));
  EXPECT_FALSE(zero.expected.contains(1e-3, 1e-6));
}

TEST(Gallery, HermiteDiagonalGrowthCondition) {
  EXPECT_THROW(hermite_diagonal("exp(n)"), PreconditionError);
  EXPECT_THROW(hermite_diagonal("exp(sqrt(n))"), PreconditionError);
  EXPECT_NO_THROW(hermite_diagonal("(n+1)^5"));
  EXPECT_NEAR(polynomial_growth_exponent(Symbol::parse("(n+1)^2")), 2.0, 1e-12);
}

TEST(Gallery, HermiteDiagonalResolventIsClosedForm) {
  const auto lin = hermite_diagonal("n+1");
  RunConfig cfg;
  cfg.truncation.n_work = 64;
  const auto s1 = ScaleSpace::polynomial(Basis::hermite, Index(1));
  const auto s0 = ScaleSpace::polynomial(Basis::hermite, Index(0));
  CVector eta(64);
  for (Eigen::Index k = 0; k < 64; ++k) eta(k) = cplx(1.0 / (k + 1), 0.5);
  const auto r = resolvent_solve(lin.op, cplx(0, 1), s1, s0, CoefficientVector{Basis::hermite, eta}, cfg);
  for (Eigen::Index k = 0; k < 64; ++k) EXPECT_EQ(r.xi.coeffs(k), eta(k) / (cplx(double(k) + 1.0) - cplx(0, 1)));
}

TEST(Gallery, PositionEntriesMatchQuadrature) {
  const auto x = hermite_position_operator();
  const auto rule = gauss_legendre(200, -15, 15);
  for (std::size_t n = 0; n < 6; ++n)
    for (std::size_t m = 0; m < 6; ++m) {
      const double q = rule.integrate([&](double t) { return t * phi(n, t) * phi(m, t); });
      EXPECT_NEAR(x.entry(n, m).real(), q, 1e-12) << n << "," << m;
    }
  EXPECT_NEAR(x.entry(1, 0).real(), std::sqrt(0.5), 1e-15);
  const CMatrix t = x.truncate(40);
  EXPECT_TRUE(t == t.transpose());
}

TEST(Gallery, PositionTruncationEigenvaluesAreHermiteRoots) {
  const auto x = hermite_position_operator();
  double spread_prev = 0.0;
  for (std::size_t N : {64u, 128u, 256u}) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x.truncate(N).real());
    const auto& ev = es.eigenvalues();
    for (Eigen::Index k = 0; k < ev.size(); ++k) {
      double big = 0.0;
      for (std::size_t j = 0; j <= N; ++j) big = std::max(big, std::abs(phi(j, ev(k))));
      EXPECT_LE(std::abs(phi(N, ev(k))), 1e-9 * big);
    }
    const double spread = ev(ev.size() - 1) - ev(0);
    EXPECT_GT(spread, spread_prev);
    spread_prev = spread;
  }
}

TEST(Gallery, TorusDeltaKernelAndCertificates) {
  const auto d = torus_delta();
  for (std::size_t N : {128u, 256u, 512u}) {
    const RVector sv = singular_values(d.op.truncate(N));
    std::size_t nonzero = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k)
      if (sv(k) > 1e-10 * sv(0)) ++nonzero;
    EXPECT_EQ(nonzero, 1u);
    EXPECT_NEAR(sv(0), double(N), 1e-9 * N);
  }
  EXPECT_TRUE(certify(d.op, W(1), W(-1)).certified());
  EXPECT_TRUE(certify(d.op, W(1), W(0)).failed());
}

TEST(Gallery, TorusDeltaInverseNormGrows) {
  const auto d = torus_delta();
  for (cplx lambda : {cplx(1), cplx(0, 1), cplx(-2)}) {
    std::vector<double> norms;
    for (std::size_t N : {32u, 64u, 128u, 256u}) {
      const CMatrix inv = (d.op.truncate(N) - lambda * CMatrix::Identity(N, N)).inverse();
      // W^{-1} -> W^{1}: scale rows by w_1, columns by 1/w_{-1} = w_1
      CMatrix m(N, N);
      for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) m(i, j) = W(1).weight_at(i) * inv(i, j) * W(1).weight_at(j);
      norms.push_back(spectral_norm(m));
    }
    EXPECT_GE(norms[3], 1.5 * norms[0]);
  }
}

TEST(Gallery, TorusCombKernel) {
  const auto c = torus_comb(4);
  const std::size_t N = 64;
  const RVector sv = singular_values(c.op.truncate(N));
  std::size_t nonzero = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv(k) > 1e-10 * sv(0)) ++nonzero;
  EXPECT_EQ(nonzero, 4u);
  // a trigonometric polynomial vanishing at the four points lies in the kernel
  CVector f = CVector::Zero(N);
  f(7) = 1.0;  // mode 4
  f(0) = -1.0;
  EXPECT_LE((c.op.truncate(N) * f).norm(), 1e-12);
}

TEST(Gallery, TorusMultiplicationToeplitzEigenvalues) {
  const auto c = torus_multiplication("cos(theta)");
  EXPECT_EQ(c.op.bandwidth(), 1);
  EXPECT_NEAR(c.expected.intervals.at(0).lo, -1.0, 1e-12);
  EXPECT_NEAR(c.expected.intervals.at(0).hi, 1.0, 1e-12);
  const std::size_t N = 64;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(c.op.truncate(N));
  std::vector<double> ref;
  for (std::size_t j = 1; j <= N; ++j) ref.push_back(std::cos(j * kPi / (N + 1)));
  std::sort(ref.begin(), ref.end());
  for (std::size_t j = 0; j < N; ++j) EXPECT_NEAR(es.eigenvalues()(j), ref[j], 1e-12);

  const auto z = torus_multiplication("0");
  EXPECT_TRUE(z.expected.contains(0.0, 0.0));
  EXPECT_FALSE(z.expected.contains(0.1, 1e-3));
  EXPECT_THROW(torus_multiplication("abs(cos(theta))"), PreconditionError);
}

TEST(Gallery, TwoPlusCosResolventNorm) {
  const auto h = torus_multiplication("2+cos(theta)");
  EXPECT_NEAR(h.expected.intervals.at(0).lo, 1.0, 1e-12);
  EXPECT_NEAR(h.expected.intervals.at(0).hi, 3.0, 1e-12);
  RunConfig cfg;
  cfg.truncation.dense_nmax = 1024;
  const auto a = analyze_pair(h.op, 0.0, W(0), W(0), cfg);
  EXPECT_EQ(a.status, PairStatus::resolvent);
  EXPECT_NEAR(1.0 / a.c_low, 1.0, 0.05);
}

TEST(Gallery, NamesAndJson) {
  const auto names = gallery_names();
  EXPECT_EQ(names.size(), 10u);
  for (const auto& n : names) {
    const auto g = gallery_entry(n);
    EXPECT_EQ(g.name, n);
    const auto j = g.to_json();
    EXPECT_TRUE(j.contains("expected_spectrum"));
    EXPECT_EQ(g.op.basis(), g.family.basis());
  }
  EXPECT_THROW(gallery_entry("nope"), PreconditionError);
}
