#pragma once

// Momentum operator -i d/dx on [0, 1]: the self-adjoint extensions S_alpha with
// f(1) = alpha f(0), their resolvents, the difference of two resolvents, and
// the delta interaction catalog.

#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "rigspec/config.hpp"
#include "rigspec/error.hpp"
#include "rigspec/numeric.hpp"
#include "rigspec/quadrature.hpp"
#include "rigspec/resolvent.hpp"
#include "rigspec/spectral_set.hpp"

namespace rigspec {

class MomentumExtension {
 public:
  MomentumExtension(cplx alpha, std::shared_ptr<const IntervalQuadrature> quad) : alpha_(alpha), quad_(std::move(quad)) {
    if (!(std::abs(std::abs(alpha) - 1.0) <= 1e-12)) throw PreconditionError("momentum extension requires |alpha| = 1");
    if (!quad_) throw PreconditionError("momentum extension requires a quadrature");
  }

  /// alpha = e^{i theta}.
  static MomentumExtension from_angle(double theta, std::shared_ptr<const IntervalQuadrature> quad) {
    return {std::polar(1.0, theta), std::move(quad)};
  }

  cplx alpha() const { return alpha_; }
  double angle() const { return std::arg(alpha_); }
  const IntervalQuadrature& quadrature() const { return *quad_; }
  std::shared_ptr<const IntervalQuadrature> quadrature_ptr() const { return quad_; }

  /// arg(alpha) + 2 k pi
  double eigenvalue(long k) const { return angle() + 2.0 * std::numbers::pi * static_cast<double>(k); }

  /// Eigenvalues in [lo, hi], ascending.
  std::vector<double> eigenvalues_in(double lo, double hi) const {
    std::vector<double> out;
    const double two_pi = 2.0 * std::numbers::pi;
    for (long k = static_cast<long>(std::ceil((lo - angle()) / two_pi)); eigenvalue(k) <= hi; ++k) out.push_back(eigenvalue(k));
    return out;
  }

  /// e^{i lambda} = alpha up to tol.
  bool is_eigenvalue(cplx lambda, double tol) const { return std::abs(std::exp(cplx(0, 1) * lambda) - alpha_) <= tol; }

 private:
  cplx alpha_;
  std::shared_ptr<const IntervalQuadrature> quad_;
};

struct MomentumSolution {
  CVector u;                     ///< values at the quadrature nodes
  cplx u0;                       ///< u(0)
  cplx u1;                       ///< u(1)
  double ode_residual = 0.0;     ///< ||-i u' - lambda u - g|| / ||g||, L2 on [0, 1]
  double boundary_residual = 0.0;  ///< |u(1) - alpha u(0)|
};

namespace detail {

inline void require_resolvent(const MomentumExtension& s, cplx lambda, double tol) {
  if (s.is_eigenvalue(lambda, tol))
    throw PreconditionError("lambda " + format_complex(lambda) + " is an eigenvalue of S_alpha, alpha = " + format_complex(s.alpha()));
}

}  // namespace detail

/// u = (S_alpha - lambda)^{-1} g:
///   u(x) = e^{i lambda x} u0 + i e^{i lambda x} int_0^x e^{-i lambda t} g(t) dt,
///   u0 = i e^{i lambda} (alpha - e^{i lambda})^{-1} int_0^1 e^{-i lambda t} g(t) dt.
inline MomentumSolution momentum_resolvent_apply(const MomentumExtension& s, cplx lambda, const CVector& g,
                                                 const ToleranceConfig& tol = {}) {
  detail::require_resolvent(s, lambda, tol.eigen_tol);
  const auto& q = s.quadrature();
  if (static_cast<std::size_t>(g.size()) != q.size()) throw PreconditionError("momentum resolvent: g must be sampled on the quadrature nodes");
  const cplx I(0, 1);
  const RVector& x = q.nodes();
  CVector h(g.size()), phase(g.size());
  for (Eigen::Index k = 0; k < g.size(); ++k) {
    phase(k) = std::exp(I * lambda * x(k));
    h(k) = std::exp(-I * lambda * x(k)) * g(k);
  }
  const cplx G = q.integral(h);
  const cplx el = std::exp(I * lambda);
  MomentumSolution r;
  r.u0 = I * el * G / (s.alpha() - el);
  const CVector H = q.primitive(h);
  r.u = phase.cwiseProduct(CVector::Constant(g.size(), r.u0) + I * H);
  r.u1 = el * (r.u0 + I * q.primitive_at(h, 1.0));
  r.boundary_residual = std::abs(r.u1 - s.alpha() * r.u0);
  const CVector res = -I * q.derivative(r.u) - lambda * r.u - g;
  const double gn = q.l2_norm(g);
  r.ode_residual = gn > 0 ? q.l2_norm(res) / gn : q.l2_norm(res);
  return r;
}

struct KreinReport {
  cplx alpha, beta, lambda;
  CVector difference;   ///< (R_alpha - R_beta) g at the nodes
  CVector formula;      ///< closed-form difference at the nodes
  double residual = 0.0;  ///< max |difference - formula|
  double g_sup = 0.0;     ///< max |g| over the nodes
};

/// Compares R_lambda(S_alpha) g - R_lambda(S_beta) g with
/// (1/(alpha - e^{i lambda}) - 1/(beta - e^{i lambda})) i e^{i (x+1) lambda} int_0^1 g(t) e^{-i lambda t} dt.
inline KreinReport krein_difference_check(const MomentumExtension& a, const MomentumExtension& b, cplx lambda, const CVector& g,
                                          const ToleranceConfig& tol = {}) {
  if (a.quadrature_ptr() != b.quadrature_ptr() && a.quadrature().size() != b.quadrature().size())
    throw PreconditionError("krein check: extensions must share a quadrature");
  detail::require_resolvent(a, lambda, tol.eigen_tol);
  detail::require_resolvent(b, lambda, tol.eigen_tol);
  const auto ra = momentum_resolvent_apply(a, lambda, g, tol);
  const auto rb = momentum_resolvent_apply(b, lambda, g, tol);
  const auto& q = a.quadrature();
  const cplx I(0, 1);
  const cplx el = std::exp(I * lambda);
  const RVector& x = q.nodes();
  CVector h(g.size());
  for (Eigen::Index k = 0; k < g.size(); ++k) h(k) = g(k) * std::exp(-I * lambda * x(k));
  const cplx G = q.integral(h);
  const cplx factor = 1.0 / (a.alpha() - el) - 1.0 / (b.alpha() - el);
  KreinReport r{a.alpha(), b.alpha(), lambda, ra.u - rb.u, CVector(g.size()), 0.0, 0.0};
  for (Eigen::Index k = 0; k < g.size(); ++k) r.formula(k) = factor * (I * std::exp(I * (x(k) + 1.0) * lambda)) * G;
  r.residual = (r.difference - r.formula).cwiseAbs().maxCoeff();
  r.g_sup = g.cwiseAbs().maxCoeff();
  return r;
}

struct CoverageRow {
  cplx lambda;
  std::vector<std::size_t> covering;  ///< indices of alphas with lambda in the resolvent set of S_alpha
  bool covered() const { return !covering.empty(); }
};

/// For each lambda, the extensions of the family whose resolvent set contains it.
inline std::vector<CoverageRow> momentum_union_resolvent(const std::vector<cplx>& alphas, const std::vector<cplx>& lambdas,
                                                         const ToleranceConfig& tol = {}) {
  if (alphas.empty()) throw PreconditionError("momentum cover: family must be nonempty");
  auto quad = std::make_shared<const IntervalQuadrature>(1);
  std::vector<MomentumExtension> ext;
  for (cplx a : alphas) ext.emplace_back(a, quad);
  std::vector<CoverageRow> rows;
  for (cplx z : lambdas) {
    CoverageRow row{z, {}};
    for (std::size_t k = 0; k < ext.size(); ++k)
      if (!ext[k].is_eigenvalue(z, tol.eigen_tol)) row.covering.push_back(k);
    rows.push_back(std::move(row));
  }
  return rows;
}

/// R_lambda(S_alpha) acting on orthonormal Legendre coefficients of [0, 1]
/// functions; the output is projected back onto as many coefficients as the
/// quadrature resolves.
inline VectorMap momentum_handle(const MomentumExtension& s, cplx lambda, const ToleranceConfig& tol = {}) {
  detail::require_resolvent(s, lambda, tol.eigen_tol);
  return [s, lambda, tol](const CoefficientVector& c) {
    if (c.basis != Basis::interval_l2) throw BasisMismatch("momentum handle expects interval-l2 coefficients");
    const auto& q = s.quadrature();
    const auto n = static_cast<Eigen::Index>(q.size());
    CVector cc = CVector::Zero(n);
    const Eigen::Index m = std::min(n, c.coeffs.size());
    cc.head(m) = c.coeffs.head(m);
    const auto u = momentum_resolvent_apply(s, lambda, q.from_coefficients(cc), tol).u;
    return CoefficientVector{Basis::interval_l2, q.coefficients(u)};
  };
}

// ---------------------------------------------------------------- delta interaction

/// -d^2/dx^2 with a point interaction g'(y+) - g'(y-) = alpha g(y).
struct DeltaInteraction {
  double alpha = 0.0;
  double y = 0.0;

  SpectralSet spectrum() const {
    SpectralSet s;
    s.intervals.push_back({0.0, kInf});
    if (alpha < 0) {
      s.points.push_back(cplx(-alpha * alpha / 4.0, 0.0));
      s.description = "[0,inf) u {" + format_double(-alpha * alpha / 4.0) + "}";
    } else {
      s.description = "[0,inf)";
    }
    return s;
  }

  std::optional<double> bound_state() const {
    if (alpha < 0) return -alpha * alpha / 4.0;
    return std::nullopt;
  }
};

struct DeltaMesh {
  double half_width = 20.0;  ///< L: the box is [y - L, y + L] with Dirichlet walls
  double h0 = 0.1;
  int levels = 3;            ///< meshes h0, h0/2, ...
};

struct BoundStateReport {
  std::vector<double> h;
  std::vector<double> raw;            ///< lowest eigenvalue per mesh
  std::vector<std::vector<double>> table;  ///< Richardson table, table[k][j] eliminates h^2 .. h^{2k}
  double estimate = 0.0;
  double error_bar = 0.0;

  nlohmann::json to_json() const {
    return {{"h", h}, {"raw", raw}, {"richardson", table}, {"estimate", estimate}, {"error_bar", error_bar}};
  }
};

/// Lowest eigenvalue of the three-point discretization with the jump
/// condition at the grid point y; Richardson extrapolation in h^2.
inline BoundStateReport bound_state_check(const DeltaInteraction& d, const DeltaMesh& mesh = {}) {
  if (!(d.alpha < 0)) throw PreconditionError("delta interaction with alpha >= 0 has no bound state");
  if (!(mesh.half_width > 0) || !(mesh.h0 > 0) || mesh.levels < 1) throw PreconditionError("delta mesh requires L > 0, h0 > 0, levels >= 1");
  BoundStateReport r;
  double h = mesh.h0;
  for (int lev = 0; lev < mesh.levels; ++lev, h /= 2) {
    const auto half = static_cast<Eigen::Index>(std::llround(mesh.half_width / h));
    const Eigen::Index n = 2 * half - 1;  // interior nodes, y at index half - 1
    RVector diag = RVector::Constant(n, 2.0 / (h * h));
    RVector off = RVector::Constant(n - 1, -1.0 / (h * h));
    diag(half - 1) += d.alpha / h;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
    r.h.push_back(h);
    r.raw.push_back(es.eigenvalues()(0));
  }
  r.table.push_back(r.raw);
  for (std::size_t k = 1; k < r.raw.size(); ++k) {
    const auto& prev = r.table.back();
    std::vector<double> next;
    const double f = std::pow(4.0, static_cast<double>(k));
    for (std::size_t j = 0; j + 1 < prev.size(); ++j) next.push_back((f * prev[j + 1] - prev[j]) / (f - 1.0));
    r.table.push_back(next);
  }
  r.estimate = r.table.back().back();
  if (r.table.size() >= 2) {
    const auto& below = r.table[r.table.size() - 2];
    r.error_bar = std::abs(r.estimate - below.back());
  } else {
    r.error_bar = kInf;
  }
  return r;
}

}  // namespace rigspec
