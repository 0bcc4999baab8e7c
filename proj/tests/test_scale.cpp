#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rigspec/config.hpp"
#include "rigspec/expr.hpp"
#include "rigspec/scale.hpp"

using namespace rigspec;

namespace {

ScaleSpace H(int k) { return ScaleSpace::hilbert_scale(Basis::hermite, Index(k), Symbol::parse("n+1")); }

}  // namespace

TEST(Expr, ArithmeticAndFunctions) {
  auto e = Expr::parse("2*n^2 - 3/(n+1) + sqrt(4)", {"n"});
  EXPECT_DOUBLE_EQ(e(2.0).real(), 8.0 - 1.0 + 2.0);
  auto f = Expr::parse("exp(i*pi)", {});
  EXPECT_NEAR(f(0.0).real(), -1.0, 1e-15);
  EXPECT_NEAR(f(0.0).imag(), 0.0, 1e-15);
  auto g = Expr::parse("-2^2", {});
  EXPECT_DOUBLE_EQ(g(0.0).real(), -4.0);
  auto h = Expr::parse("2^3^2", {});
  EXPECT_DOUBLE_EQ(h(0.0).real(), 512.0);
  auto c = Expr::parse("3i + abs(-4) + cos(0) + sin(0)", {});
  EXPECT_EQ(c(0.0), cplx(5.0, 3.0));
  EXPECT_TRUE(c.is_constant());
  EXPECT_FALSE(e.is_constant());
}

TEST(Expr, TwoVariables) {
  auto e = Expr::parse("n - 2*m", {"n", "m"});
  EXPECT_DOUBLE_EQ(e(5.0, 1.0).real(), 3.0);
}

TEST(Expr, ParseErrors) {
  EXPECT_THROW(Expr::parse("", {"n"}), ParseError);
  EXPECT_THROW(Expr::parse("n +", {"n"}), ParseError);
  EXPECT_THROW(Expr::parse("foo(n)", {"n"}), ParseError);
  EXPECT_THROW(Expr::parse("(n", {"n"}), ParseError);
  EXPECT_THROW(Expr::parse("n $ 2", {"n"}), ParseError);
  EXPECT_THROW(Expr::parse("x", {"n"}), ParseError);
}

TEST(Expr, ComplexLiterals) {
  EXPECT_EQ(parse_complex("1"), cplx(1, 0));
  EXPECT_EQ(parse_complex("2i"), cplx(0, 2));
  EXPECT_EQ(parse_complex("0+1i"), cplx(0, 1));
  EXPECT_EQ(parse_complex("0.5-0.25i"), cplx(0.5, -0.25));
  EXPECT_EQ(parse_complex("i"), cplx(0, 1));
  EXPECT_EQ(parse_complex("-i"), cplx(0, -1));
  EXPECT_EQ(parse_complex("1e-3+2e+1i"), cplx(1e-3, 20));
  EXPECT_THROW(parse_complex("abc"), ParseError);
  EXPECT_THROW(parse_complex(""), ParseError);
}

TEST(Config, JsonRoundTripAndValidation) {
  RunConfig c;
  c.truncation.n0 = 16;
  c.tolerances.ge_tol = 1e-5;
  c.grid.n_re = 7;
  nlohmann::json j = c;
  const auto back = run_config_from_json(j);
  EXPECT_EQ(back.truncation.n0, 16u);
  EXPECT_EQ(back.tolerances.ge_tol, 1e-5);
  EXPECT_EQ(back.grid.n_re, 7u);
  EXPECT_EQ(nlohmann::json(back).dump(), j.dump());

  nlohmann::json bad = j;
  bad["tolerances"]["solve_tol"] = 0.0;
  EXPECT_THROW(run_config_from_json(bad), PreconditionError);
  bad = j;
  bad["grid"]["n_im"] = 1;
  EXPECT_THROW(run_config_from_json(bad), PreconditionError);
  bad = j;
  bad["truncation"]["n0"] = 10000;
  EXPECT_THROW(run_config_from_json(bad), PreconditionError);
  bad = j;
  bad["truncation"]["n0"] = "x";
  EXPECT_THROW(run_config_from_json(bad), ParseError);
}

TEST(Index, RationalArithmetic) {
  EXPECT_EQ(Index(2, 4), Index(1, 2));
  EXPECT_EQ(-Index(1, 2), Index(-1, 2));
  EXPECT_EQ(Index(3, -6).str(), "-1/2");
  EXPECT_EQ(Index::from_json(nlohmann::json("3/2")), Index(3, 2));
  EXPECT_EQ(Index::from_json(nlohmann::json(1.5)), Index(3, 2));
  EXPECT_EQ(Index::from_json(nlohmann::json(-2)), Index(-2));
  EXPECT_LT(Index(1, 3), Index(1, 2));
}

TEST(ScaleSpace, NormExamples) {
  const auto e0 = CoefficientVector::unit(Basis::hermite, 0, 1);
  EXPECT_DOUBLE_EQ(norm(e0, H(0)), 1.0);
  EXPECT_DOUBLE_EQ(norm(CoefficientVector::unit(Basis::fourier_torus, 0, 1), ScaleSpace::sobolev_torus(Index(3))), 1.0);

  // torus modes 0 and 1 occupy positions 0 and 1
  CoefficientVector v{Basis::fourier_torus, CVector::Ones(2)};
  EXPECT_NEAR(norm(v, ScaleSpace::sobolev_torus(Index(1))), std::sqrt(3.0), 1e-15);

  const auto phi3 = CoefficientVector::unit(Basis::hermite, 3, 50);
  EXPECT_NEAR(norm(phi3, H(1)), std::sqrt(17.0), 1e-14);
}

TEST(ScaleSpace, NormRejectsBasisMismatch) {
  CoefficientVector v{Basis::fourier_torus, CVector::Ones(2)};
  EXPECT_THROW(norm(v, H(1)), BasisMismatch);
}

TEST(ScaleSpace, WeightLaws) {
  const auto h2 = H(2);
  for (double n : {0.0, 1.0, 7.0, 1000.0}) {
    const double a = n + 1;
    EXPECT_NEAR(h2.weight(n), std::sqrt(1 + std::pow(a, 4)), 1e-12 * h2.weight(n));
  }
  EXPECT_DOUBLE_EQ(H(0).weight(5.0), 1.0);
  const auto w3 = ScaleSpace::sobolev_torus(Index(3));
  EXPECT_NEAR(w3.weight(-4.0), std::pow(17.0, 1.5), 1e-10);
  const auto s2 = ScaleSpace::polynomial(Basis::hermite, Index(2));
  EXPECT_NEAR(s2.weight(4.0), 25.0, 1e-12);
  EXPECT_NEAR(s2.dual().weight(4.0), 1.0 / 25.0, 1e-15);
  // huge k does not overflow in log form
  const auto h40 = H(40);
  EXPECT_TRUE(std::isfinite(h40.log_weight(1e9)));
}

TEST(ScaleSpace, WeightsAtLeastOneForNonnegativeIndex) {
  for (int k = 0; k <= 4; ++k)
    for (double n = 0; n < 200; n += 1) {
      EXPECT_GE(H(k).weight(n), 1.0);
      EXPECT_GE(ScaleSpace::sobolev_torus(Index(k)).weight(n - 100), 1.0);
    }
}

TEST(ScaleSpace, DualityIsExactInvolution) {
  for (int k = -3; k <= 3; ++k) {
    const auto e = H(k);
    EXPECT_EQ(e.dual().dual(), e);
    EXPECT_EQ(e.dual().index(), Index(-k));
    for (double n : {0.0, 3.0, 1e6}) {
      EXPECT_EQ(e.dual().log_weight(n), -e.log_weight(n));
      EXPECT_EQ(e.dual().dual().log_weight(n), e.log_weight(n));
    }
  }
  EXPECT_EQ(dual_space(H(2)), H(-2));
  const auto w0 = ScaleSpace::sobolev_torus(Index(0));
  EXPECT_EQ(w0.dual(), w0);
}

TEST(ScaleSpace, EmbeddingNormExamples) {
  // oracle: brute sup over n <= 10^6 of w_1/w_2
  double brute = 0.0;
  for (int n = 0; n <= 1000000; ++n) {
    const double a = n + 1.0;
    brute = std::max(brute, std::sqrt(1 + a * a) / std::sqrt(1 + a * a * a * a));
  }
  EXPECT_NEAR(brute, 1.0, 1e-15);
  EXPECT_NEAR(embedding_norm(H(2), H(1)), brute, 1e-15);
  EXPECT_EQ(embedding_norm(H(1), H(1)), 1.0);
  EXPECT_EQ(embedding_norm(ScaleSpace::sobolev_torus(Index(0)), ScaleSpace::sobolev_torus(Index(1))), kInf);
}

TEST(ScaleSpace, ChainMonotonicity) {
  for (int k = -4; k <= 4; ++k)
    for (int m = -4; m <= 4; ++m) {
      const double v = embedding_norm(H(k), H(m));
      if (k >= m)
        EXPECT_TRUE(std::isfinite(v)) << k << " " << m;
      else
        EXPECT_EQ(v, kInf) << k << " " << m;
    }
}

TEST(ScaleSpace, FractionalIndices) {
  const auto half = ScaleSpace::hilbert_scale(Basis::hermite, Index(1, 2), Symbol::parse("n+1"));
  EXPECT_NEAR(half.weight(3.0), std::sqrt(1 + 4.0), 1e-12);
  EXPECT_TRUE(embeds(H(1), half));
  EXPECT_FALSE(embeds(half, H(1)));
}

TEST(ScaleSpace, NormDualityPairing) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  for (int k : {-2, 1, 3}) {
    const auto e = H(k);
    const std::size_t n = 40;
    CVector v(n), u(n);
    for (std::size_t p = 0; p < n; ++p) v(p) = {nd(rng), nd(rng)};
    for (std::size_t p = 0; p < n; ++p) u(p) = std::conj(v(p)) / std::pow(e.weight_at(p), 2);
    CoefficientVector cu{Basis::hermite, u}, cv{Basis::hermite, v};
    // <u, v> = sum u_n conj(v_n)
    cplx pairing{};
    for (std::size_t p = 0; p < n; ++p) pairing += u(p) * std::conj(v(p));
    const double prod = norm(cu, e) * norm(cv, e.dual());
    EXPECT_LE(std::abs(pairing), prod * (1 + 1e-12));

    // equality at u_n = conj(v_n) w(n)^-2 for the pairing sum u_n v_n
    cplx bil{};
    for (std::size_t p = 0; p < n; ++p) bil += u(p) * v(p);
    EXPECT_NEAR(std::abs(bil), prod, 1e-12 * prod);
  }
}

TEST(ScaleSpace, IntersectionAndSum) {
  const auto a = ScaleSpace::sobolev_torus(Index(1));
  const auto b = ScaleSpace::sobolev_torus(Index(-1));
  EXPECT_EQ(ScaleSpace::intersection(a, b), a);
  EXPECT_EQ(ScaleSpace::sum(a, b), b);
  const auto p = ScaleSpace::polynomial(Basis::hermite, Index(1));
  const auto h = H(1);
  const auto cap = ScaleSpace::intersection(p, h);
  for (double n : {0.0, 2.0, 9.0}) {
    EXPECT_EQ(cap.log_weight(n), std::max(p.log_weight(n), h.log_weight(n)));
    EXPECT_EQ(cap.dual().log_weight(n), -cap.log_weight(n));
    EXPECT_EQ(ScaleSpace::sum(p, h).log_weight(n), std::min(p.log_weight(n), h.log_weight(n)));
  }
}

TEST(ScaleFamily, ChainsAndJson) {
  const auto fam = ScaleFamily::hilbert_chain(Basis::hermite, "n+1", -3, 3);
  EXPECT_EQ(fam.spaces().size(), 7u);
  EXPECT_TRUE(fam.closed_under_duality());
  EXPECT_EQ(fam.finest(), H(3));
  EXPECT_EQ(fam.coarsest(), H(-3));
  const auto back = ScaleFamily::from_json(fam.to_json());
  EXPECT_EQ(back.to_json().dump(), fam.to_json().dump());
  EXPECT_EQ(back.spaces().size(), 7u);

  const auto half = ScaleFamily::hilbert_chain(Basis::hermite, "n+1", {Index(0), Index(1, 2)});
  EXPECT_FALSE(half.closed_under_duality());

  const auto sob = ScaleFamily::from_json(nlohmann::json::parse(R"J({"basis":"fourier-torus","indices":[-1,0,1],
      "generator":{"type":"sobolev-torus"}})J"));
  EXPECT_EQ(sob.spaces().size(), 3u);
  EXPECT_EQ(sob.finest(), ScaleSpace::sobolev_torus(Index(1)));
  EXPECT_THROW(ScaleFamily::from_json(nlohmann::json::parse(R"J({"basis":"nowhere","indices":[0]})J")), ParseError);
}
