#pragma once

// Gauss-Legendre rules and a spectral model of functions on [0, 1].

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <utility>

#include "rigspec/error.hpp"
#include "rigspec/numeric.hpp"

namespace rigspec {

/// Legendre P_j(s) and P_j'(s) for j < n at one point.
inline void legendre_values(double s, std::size_t n, RVector& p, RVector& dp) {
  p.resize(static_cast<Eigen::Index>(n));
  dp.resize(static_cast<Eigen::Index>(n));
  if (n == 0) return;
  p(0) = 1.0;
  dp(0) = 0.0;
  if (n == 1) return;
  p(1) = s;
  dp(1) = 1.0;
  for (std::size_t j = 1; j + 1 < n; ++j) {
    const auto k = static_cast<Eigen::Index>(j);
    const double jj = static_cast<double>(j);
    p(k + 1) = ((2 * jj + 1) * s * p(k) - jj * p(k - 1)) / (jj + 1);
    dp(k + 1) = dp(k - 1) + (2 * jj + 1) * p(k);
  }
}

struct GaussRule {
  RVector nodes;
  RVector weights;

  std::size_t size() const { return static_cast<std::size_t>(nodes.size()); }

  template <class F>
  auto integrate(F&& f) const {
    using R = decltype(f(0.0));
    R acc{};
    for (Eigen::Index i = 0; i < nodes.size(); ++i) acc += weights(i) * f(nodes(i));
    return acc;
  }
};

/// n-point Gauss-Legendre rule on [a, b]; nodes ascending.
inline GaussRule gauss_legendre(std::size_t n, double a = -1.0, double b = 1.0) {
  if (n == 0) throw PreconditionError("gauss_legendre: at least one node required");
  if (!(b > a)) throw PreconditionError("gauss_legendre: empty interval");
  GaussRule r;
  const auto m = static_cast<Eigen::Index>(n);
  r.nodes.resize(m);
  r.weights.resize(m);
  const double nn = static_cast<double>(n);
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (nn + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (std::size_t j = 1; j < n; ++j) {
        const double jj = static_cast<double>(j);
        const double p2 = ((2 * jj + 1) * x * p1 - jj * p0) / (jj + 1);
        p0 = p1;
        p1 = p2;
      }
      dp = nn * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) <= 1e-16 * std::max(1.0, std::abs(x))) break;
    }
    double p0 = 1.0, p1 = x;
    for (std::size_t j = 1; j < n; ++j) {
      const double jj = static_cast<double>(j);
      const double p2 = ((2 * jj + 1) * x * p1 - jj * p0) / (jj + 1);
      p0 = p1;
      p1 = p2;
    }
    dp = n == 1 ? 1.0 : nn * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const auto lo = static_cast<Eigen::Index>(i), hi = m - 1 - lo;
    r.nodes(lo) = -x;
    r.nodes(hi) = x;
    r.weights(lo) = w;
    r.weights(hi) = w;
  }
  if (n % 2 == 1) r.nodes(m / 2) = 0.0;
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  r.nodes = (r.nodes.array() * half + mid).matrix();
  r.weights *= half;
  return r;
}

/// Functions on [0, 1] held as values at Gauss-Legendre nodes. The orthonormal
/// Legendre coefficients p_j(x) = sqrt(2j+1) P_j(2x-1) are exact for
/// polynomials of degree below n; integration and differentiation act on them.
class IntervalQuadrature {
 public:
  explicit IntervalQuadrature(std::size_t n = 128) : rule_(gauss_legendre(n, 0.0, 1.0)) {
    const auto m = static_cast<Eigen::Index>(n);
    basis_.resize(m, m);
    prim_.resize(m, m);
    deriv_.resize(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const RowPair r = rows_at(rule_.nodes(i));
      basis_.row(i) = r.value;
      prim_.row(i) = r.primitive;
    }
    // analysis: c = B^T W f
    analysis_ = basis_.transpose() * rule_.weights.asDiagonal();
    // barycentric differentiation at the nodes, weights (-1)^j sqrt(x_j (1 - x_j) w_j)
    RVector bw(m);
    for (Eigen::Index j = 0; j < m; ++j) {
      const double x = rule_.nodes(j);
      bw(j) = (j % 2 == 0 ? 1.0 : -1.0) * std::sqrt(x * (1.0 - x) * rule_.weights(j));
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      double diag = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (j == i) continue;
        deriv_(i, j) = (bw(j) / bw(i)) / (rule_.nodes(i) - rule_.nodes(j));
        diag -= deriv_(i, j);
      }
      deriv_(i, i) = diag;
    }
  }

  std::size_t size() const { return rule_.size(); }
  const RVector& nodes() const { return rule_.nodes; }
  const RVector& weights() const { return rule_.weights; }

  CVector sample(const std::function<cplx(double)>& f) const {
    CVector v(rule_.nodes.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = f(rule_.nodes(i));
    return v;
  }

  cplx integral(const CVector& f) const { return rule_.weights.cast<cplx>().dot(f); }
  double l2_norm(const CVector& f) const { return std::sqrt(rule_.weights.dot(f.cwiseAbs2())); }

  CVector coefficients(const CVector& f) const { return analysis_.cast<cplx>() * f; }
  CVector from_coefficients(const CVector& c) const { return basis_.cast<cplx>() * c.head(basis_.cols()); }

  /// Values of x -> int_0^x f at the nodes.
  CVector primitive(const CVector& f) const { return prim_.cast<cplx>() * coefficients(f); }
  CVector derivative(const CVector& f) const { return deriv_.cast<cplx>() * f; }

  /// Interpolant and its primitive at an arbitrary x in [0, 1].
  cplx evaluate(const CVector& f, double x) const { return rows_at(x).value.cast<cplx>().dot(coefficients(f)); }
  cplx primitive_at(const CVector& f, double x) const { return rows_at(x).primitive.cast<cplx>().dot(coefficients(f)); }

 private:
  struct RowPair {
    Eigen::RowVectorXd value, primitive;
  };

  RowPair rows_at(double x) const {
    const std::size_t n = size();
    const double s = 2.0 * x - 1.0;
    RVector p, dp;
    legendre_values(s, n + 1, p, dp);
    RowPair r;
    const auto m = static_cast<Eigen::Index>(n);
    r.value.resize(m);
    r.primitive.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) {
      const double nrm = std::sqrt(2.0 * static_cast<double>(j) + 1.0);
      r.value(j) = nrm * p(j);
      // int_0^x P_j(2t-1) dt = (P_{j+1}(s) - P_{j-1}(s)) / (2 (2j+1))
      r.primitive(j) = j == 0 ? 0.5 * (s + 1.0) : nrm * (p(j + 1) - p(j - 1)) / (2.0 * (2.0 * static_cast<double>(j) + 1.0));
    }
    return r;
  }

  GaussRule rule_;
  Eigen::MatrixXd basis_, prim_, deriv_, analysis_;
};

}  // namespace rigspec
