#pragma once

// Gallery of coefficient models: Hermite diagonal operators and the position
// operator on the line, and rank-sum / Toeplitz multiplication operators on
// the torus. Each entry carries a family and an expected spectrum.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "rigspec/error.hpp"
#include "rigspec/expr.hpp"
#include "rigspec/numeric.hpp"
#include "rigspec/operator.hpp"
#include "rigspec/scale.hpp"
#include "rigspec/spectral_set.hpp"

namespace rigspec {

struct GalleryEntry {
  std::string name;
  CoefficientOperator op = CoefficientOperator::diagonal(Basis::hermite, Symbol::constant(0.0), true, "0");
  ScaleFamily family;
  SpectralSet expected;
  std::vector<std::string> notes;

  nlohmann::json to_json() const {
    return {{"name", name},
            {"operator", op.describe()},
            {"family", family.to_json()},
            {"expected_spectrum", expected.to_json()},
            {"notes", notes}};
  }
};

// ---------------------------------------------------------------- hermite line

/// Polynomial growth exponent of |a_n| sampled at n = 2^j; throws when the
/// exponent keeps increasing (super-polynomial symbol).
inline double polynomial_growth_exponent(const Symbol& a) {
  std::vector<double> p;
  for (int j = 4; j <= 40; j += 4) {
    const double n = std::ldexp(1.0, j);
    const double v = std::abs(a(n));
    if (!std::isfinite(v)) throw PreconditionError("symbol " + a.text + " violates the polynomial growth condition sup |a_n|/(1+n)^m < inf");
    p.push_back(v > 0 ? std::log(v) / std::log1p(n) : -kInf);
  }
  // slope of log|a| against log(1+n) over the last two samples must settle
  const std::size_t L = p.size();
  const double tail = p[L - 1], before = p[L - 2], early = p[L - 4];
  if (tail > 1.0 && tail - before > 0.05 && before - early > 0.05)
    throw PreconditionError("symbol " + a.text + " violates the polynomial growth condition sup |a_n|/(1+n)^m < inf");
  return std::max(0.0, tail);
}

/// Diagonal A phi_n = a_n phi_n on the s_m chain, weights (1+n)^m, |m| <= mmax.
inline GalleryEntry hermite_diagonal(const std::string& expr, int mmax = 3, std::string name = "") {
  const auto a = Symbol::parse(expr);
  const double p = polynomial_growth_exponent(a);
  GalleryEntry g;
  g.name = name.empty() ? "hermite-diagonal[" + expr + "]" : std::move(name);
  g.op = CoefficientOperator::diagonal(Basis::hermite, a, false, "diag(" + expr + ")");
  g.family = ScaleFamily::polynomial_chain(Basis::hermite, mmax);
  g.expected.description = "closure{a_n}";
  g.expected.sequence = a;
  g.expected.sequence_basis = Basis::hermite;
  // a limit of a_n, when it exists, is the only accumulation point
  const cplx far = a(std::ldexp(1.0, 48)), farther = a(std::ldexp(1.0, 50));
  if (std::isfinite(std::abs(far)) && std::abs(far - farther) <= 1e-9 * (1.0 + std::abs(far))) {
    const cplx lim(std::round(farther.real() * 1e9) / 1e9, std::round(farther.imag() * 1e9) / 1e9);
    g.expected.points.push_back(lim);
    g.expected.description += " u {" + format_complex(lim) + "}";
  }
  g.notes.push_back("growth exponent " + format_double(p));
  return g;
}

/// Hermite position operator: X_{n+1,n} = X_{n,n+1} = sqrt((n+1)/2).
inline CoefficientOperator hermite_position_operator() {
  return CoefficientOperator::banded(
      Basis::hermite, 1,
      [](double n, double m) { return n == m ? cplx{} : cplx(std::sqrt(std::max(n, m) / 2.0), 0.0); },
      "sqrt(max(n,m)/2)", true, "M_x");
}

inline GalleryEntry hermite_generator(int kmax = 3) {
  GalleryEntry g;
  g.name = "hermite-generator";
  g.op = CoefficientOperator::diagonal(Basis::hermite, Symbol::parse("n+1"), true, "A");
  g.family = ScaleFamily::hilbert_chain(Basis::hermite, "n+1", -kmax, kmax);
  g.expected.description = "{1,2,3,...}";
  g.expected.sequence = Symbol::parse("n+1");
  g.notes.push_back("Hilbert scale of A = diag(n+1); A^{-1} is Hilbert-Schmidt");
  return g;
}

inline GalleryEntry hermite_position(int kmax = 3) {
  GalleryEntry g;
  g.name = "hermite-position";
  g.op = hermite_position_operator();
  g.family = ScaleFamily::hilbert_chain(Basis::hermite, "n+1", -kmax, kmax);
  g.expected = SpectralSet::plane("all of C on the truncated Hilbert chain");
  g.notes.push_back("sigma_H(M_x) = R; no pair of the chain inverts M_x - lambda");
  return g;
}

/// M_x under the chain extended by the spaces with weights e^{+-sqrt(n)}.
inline GalleryEntry hermite_position_extreme(int kmax = 2) {
  GalleryEntry g;
  g.name = "hermite-position-extreme";
  g.op = hermite_position_operator();
  std::vector<ScaleSpace> sp;
  for (int k = -kmax; k <= kmax; ++k) sp.push_back(ScaleSpace::hilbert_scale(Basis::hermite, Index(k), Symbol::parse("n+1")));
  sp.push_back(ScaleSpace::exponential_root(Basis::hermite, Index(1)));
  sp.push_back(ScaleSpace::exponential_root(Basis::hermite, Index(-1)));
  g.family = ScaleFamily(Basis::hermite, std::move(sp));
  g.expected = SpectralSet::plane("all of C on every single pair, extreme spaces included");
  g.notes.push_back("contrast only: the real-line result needs the projective and inductive limits themselves");
  return g;
}

// ---------------------------------------------------------------- torus

inline GalleryEntry torus_delta(int kmax = 4) {
  GalleryEntry g;
  g.name = "torus-delta";
  g.op = CoefficientOperator::rank_sum(Basis::fourier_torus, {{Symbol::parse("1"), Symbol::parse("1")}}, true, "M_delta");
  g.family = ScaleFamily::sobolev_chain(kmax);
  g.expected = SpectralSet::plane();
  g.expected.points.push_back(0.0);
  g.notes.push_back("eigenvalue 0 with eigenspace {f : f(0) = 0}");
  return g;
}

/// Rank-sum over the points theta_j = 2 pi j / M: f -> sum_j f(theta_j) delta_{theta_j}.
inline GalleryEntry torus_comb(int points = 4, int kmax = 4) {
  if (points < 1) throw PreconditionError("torus comb needs at least one point");
  std::vector<RankTerm> terms;
  for (int j = 0; j < points; ++j) {
    const double th = 2.0 * std::numbers::pi * j / points;
    auto e = Symbol{[th](double n) { return std::polar(1.0, -n * th); }, "exp(-i n " + format_double(th) + ")"};
    terms.push_back({e, e});
  }
  GalleryEntry g;
  g.name = "torus-comb";
  g.op = CoefficientOperator::rank_sum(Basis::fourier_torus, std::move(terms), true, "M_C");
  g.family = ScaleFamily::sobolev_chain(kmax);
  g.expected = SpectralSet::plane();
  g.expected.points.push_back(0.0);
  g.notes.push_back("eigenvalue 0 with eigenspace {f : f(theta_j) = 0 for all j}");
  g.notes.push_back(std::to_string(points) + " sampling points");
  return g;
}

struct TrigPolynomial {
  int degree = 0;
  std::vector<cplx> coeffs;  ///< coeffs[k + degree] = h^(k), |k| <= degree
  bool real_valued = true;

  cplx coefficient(int k) const { return std::abs(k) > degree ? cplx{} : coeffs[static_cast<std::size_t>(k + degree)]; }
};

/// Fourier coefficients of h(theta) from 256 samples; throws unless h is a
/// trigonometric polynomial of degree at most 64.
inline TrigPolynomial trig_polynomial(const std::string& expr) {
  const auto h = Expr::parse(expr, {"theta"});
  const int K = 256;
  std::vector<cplx> s(K);
  double scale = 0.0;
  bool real = true;
  for (int j = 0; j < K; ++j) {
    s[j] = h(2.0 * std::numbers::pi * j / K);
    if (!std::isfinite(std::abs(s[j]))) throw PreconditionError("symbol " + expr + " is not finite on the circle");
    scale = std::max(scale, std::abs(s[j]));
    real = real && std::abs(s[j].imag()) <= 1e-14 * std::max(1.0, std::abs(s[j]));
  }
  std::vector<cplx> c(K);
  for (int k = 0; k < K; ++k) {
    cplx acc{};
    for (int j = 0; j < K; ++j) acc += s[j] * std::polar(1.0, -2.0 * std::numbers::pi * ((static_cast<long>(k) * j) % K) / K);
    c[k] = acc / static_cast<double>(K);
  }
  const double cut = 1e-13 * std::max(1.0, scale);
  auto at = [&](int k) { return c[static_cast<std::size_t>((k % K + K) % K)]; };
  int deg = 0;
  for (int k = 1; k < K / 2; ++k)
    if (std::abs(at(k)) > cut || std::abs(at(-k)) > cut) deg = k;
  if (deg > 64) throw PreconditionError("symbol " + expr + " is not a trigonometric polynomial (unsupported)");
  TrigPolynomial t;
  t.degree = deg;
  t.real_valued = real;
  for (int k = -deg; k <= deg; ++k) t.coeffs.push_back(std::abs(at(k)) > cut ? at(k) : cplx{});
  if (real) {
    // Hermitian Toeplitz matrix exactly: h^(-k) = conj h^(k)
    for (int k = 0; k <= deg; ++k) {
      auto& pos = t.coeffs[static_cast<std::size_t>(deg + k)];
      if (k == 0) pos = cplx(pos.real(), 0.0);
      t.coeffs[static_cast<std::size_t>(deg - k)] = std::conj(pos);
    }
  }
  // off-grid reconstruction
  for (int j = 0; j < 97; ++j) {
    const double th = 0.1 + 2.0 * std::numbers::pi * j / 97.0;
    cplx r{};
    for (int k = -deg; k <= deg; ++k) r += t.coefficient(k) * std::polar(1.0, k * th);
    if (std::abs(r - h(th)) > 1e-10 * std::max(1.0, scale))
      throw PreconditionError("symbol " + expr + " is not a trigonometric polynomial (unsupported)");
  }
  return t;
}

/// Closure of h([0, 2 pi]) for a continuous symbol: an interval for real h
/// (10^4 samples, extremes refined by golden section), sampled points otherwise.
inline SpectralSet symbol_range(const std::function<cplx(double)>& h, const std::string& text, bool real) {
  const int S = 10000;
  SpectralSet r;
  r.description = "closure of the range of " + text;
  std::vector<double> th(S);
  for (int j = 0; j < S; ++j) th[j] = 2.0 * std::numbers::pi * j / S;
  if (!real) {
    for (double t : th) r.points.push_back(h(t));
    return r;
  }
  // smallest value of sign * Re h near t0
  auto refine = [&](double t0, double sign) {
    auto f = [&](double t) { return sign * h(t).real(); };
    const double d = 2.0 * std::numbers::pi / S;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = t0 - d, b = t0 + d;
    for (int it = 0; it < 80; ++it) {
      const double c = b - g * (b - a), e = a + g * (b - a);
      if (f(c) < f(e))
        b = e;
      else
        a = c;
    }
    return std::min(f(t0), f(0.5 * (a + b)));
  };
  std::size_t imin = 0, imax = 0;
  for (std::size_t j = 1; j < th.size(); ++j) {
    if (h(th[j]).real() < h(th[imin]).real()) imin = j;
    if (h(th[j]).real() > h(th[imax]).real()) imax = j;
  }
  const double lo = refine(th[imin], 1.0);
  const double hi = -refine(th[imax], -1.0);
  r.intervals.push_back({lo, hi});
  return r;
}

/// Multiplication by a trigonometric polynomial h(theta): the Toeplitz matrix
/// of its Fourier coefficients on the Sobolev chain.
inline GalleryEntry torus_multiplication(const std::string& expr, std::string name = "", int kmax = 4) {
  const auto t = trig_polynomial(expr);
  auto coeffs = t.coeffs;
  const int deg = t.degree;
  GalleryEntry g;
  g.name = name.empty() ? "torus-multiplication[" + expr + "]" : std::move(name);
  g.op = CoefficientOperator::banded(
      Basis::fourier_torus, deg,
      [coeffs, deg](double n, double m) {
        const int k = static_cast<int>(n - m);
        return std::abs(k) > deg ? cplx{} : coeffs[static_cast<std::size_t>(k + deg)];
      },
      expr, t.real_valued, "M_h[" + expr + "]");
  g.family = ScaleFamily::sobolev_chain(kmax);
  const auto h = Expr::parse(expr, {"theta"});
  g.expected = symbol_range([h](double th) { return h(th); }, expr, t.real_valued);
  g.notes.push_back("trigonometric polynomial of degree " + std::to_string(deg));
  g.notes.push_back("(0,0) pair: resolvent set C minus the closed range; (k,0), k > 0: empty");
  return g;
}

// ---------------------------------------------------------------- gallery

inline std::vector<std::string> gallery_names() {
  return {"hermite-inverse", "hermite-linear",   "hermite-zero",   "hermite-generator", "hermite-position",
          "hermite-position-extreme", "torus-delta", "torus-comb", "torus-cos",        "torus-2pluscos"};
}

inline GalleryEntry gallery_entry(const std::string& name) {
  if (name == "hermite-inverse") return hermite_diagonal("1/(n+1)", 3, name);
  if (name == "hermite-linear") return hermite_diagonal("n+1", 3, name);
  if (name == "hermite-zero") return hermite_diagonal("0", 3, name);
  if (name == "hermite-generator") return hermite_generator();
  if (name == "hermite-position") return hermite_position();
  if (name == "hermite-position-extreme") return hermite_position_extreme();
  if (name == "torus-delta") return torus_delta();
  if (name == "torus-comb") return torus_comb();
  if (name == "torus-cos") return torus_multiplication("cos(theta)", name);
  if (name == "torus-2pluscos") return torus_multiplication("2+cos(theta)", name);
  throw PreconditionError("unknown gallery entry '" + name + "'");
}

inline std::vector<GalleryEntry> gallery() {
  std::vector<GalleryEntry> out;
  for (const auto& n : gallery_names()) out.push_back(gallery_entry(n));
  return out;
}

}  // namespace rigspec
