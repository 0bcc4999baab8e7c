#pragma once

// Generalized eigenvectors of the Hermite position operator: chi(lambda) with
// coefficients phi_n(lambda), its scale membership, and the completeness
// expansion phi = int <chi(lambda), phi> chi(lambda) d lambda.

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "rigspec/config.hpp"
#include "rigspec/error.hpp"
#include "rigspec/models.hpp"
#include "rigspec/numeric.hpp"
#include "rigspec/operator.hpp"
#include "rigspec/quadrature.hpp"
#include "rigspec/scale.hpp"

namespace rigspec {

/// phi_0(x), ..., phi_{n-1}(x), normalized Hermite functions. The three-term
/// recurrence runs on a rescaled mantissa so e^{-x^2/2} never underflows
/// before the oscillatory region is reached.
inline RVector hermite_functions(double x, std::size_t n) {
  RVector v = RVector::Zero(static_cast<Eigen::Index>(n));
  if (n == 0) return v;
  double log_scale = -0.5 * x * x - 0.25 * std::log(std::numbers::pi);
  double prev = 0.0, cur = 1.0;
  constexpr double kBig = 1e150;
  const double log_big = std::log(kBig);
  for (std::size_t k = 0; k < n; ++k) {
    v(static_cast<Eigen::Index>(k)) = cur * std::exp(log_scale);
    const double kk = static_cast<double>(k);
    const double next = std::sqrt(2.0 / (kk + 1.0)) * x * cur - std::sqrt(kk / (kk + 1.0)) * prev;
    prev = cur;
    cur = next;
    if (std::abs(cur) > kBig) {
      cur /= kBig;
      prev /= kBig;
      log_scale += log_big;
    }
  }
  return v;
}

/// Values phi_n(x_j) for n < modes at every node, nodes along rows.
inline Eigen::MatrixXd hermite_table(const RVector& nodes, std::size_t modes) {
  Eigen::MatrixXd t(nodes.size(), static_cast<Eigen::Index>(modes));
  for (Eigen::Index j = 0; j < nodes.size(); ++j) t.row(j) = hermite_functions(nodes(j), modes).transpose();
  return t;
}

struct GeneralizedEigenpair {
  double lambda = 0.0;
  CoefficientVector vector;
  ScaleSpace home = ScaleSpace::polynomial(Basis::hermite, Index(0));
  ScaleSpace target = ScaleSpace::polynomial(Basis::hermite, Index(0));
  double residual = 0.0;          ///< ||(X - lambda) v||_target / ||v||_home at truncation
  double membership_norm = 0.0;   ///< ||v||_home at truncation

  nlohmann::json to_json() const {
    return {{"lambda", lambda},
            {"n", vector.size()},
            {"home", home.label()},
            {"target", target.label()},
            {"residual", residual},
            {"membership_norm", membership_norm}};
  }
};

inline ScaleSpace hermite_chain_space(Index k) { return ScaleSpace::hilbert_scale(Basis::hermite, k, Symbol::parse("n+1")); }

/// chi(lambda) = sum_n phi_n(lambda) e_n truncated to n < N, home H_{-s},
/// residual measured in the most negative space of the chain (H_{-3} by default).
inline GeneralizedEigenpair delta_eigenvector_hermite(double lambda, Index s, std::size_t N, Index target_index = Index(-3)) {
  if (s < Index(1)) throw PreconditionError("delta eigenvector requires s >= 1");
  if (N < 2) throw PreconditionError("delta eigenvector requires N >= 2");
  if (!std::isfinite(lambda)) throw PreconditionError("delta eigenvector requires a finite real lambda");
  const RVector phi = hermite_functions(lambda, N + 1);
  if (phi.head(static_cast<Eigen::Index>(N)).cwiseAbs().maxCoeff() < 1e-290)
    throw PreconditionError("hermite recurrence underflows for every n < N at lambda = " + format_double(lambda) +
                            "; safe range |lambda| <= " + format_double(std::sqrt(2.0 * static_cast<double>(N) + 1.0)));
  GeneralizedEigenpair g;
  g.lambda = lambda;
  g.home = hermite_chain_space(Index(-s.num, s.den));
  g.target = hermite_chain_space(target_index);
  g.vector = CoefficientVector{Basis::hermite, phi.head(static_cast<Eigen::Index>(N)).cast<cplx>()};
  const auto x = hermite_position_operator();
  CVector r = x.truncate(N + 1, N) * g.vector.coeffs;
  r.head(static_cast<Eigen::Index>(N)) -= lambda * g.vector.coeffs;
  g.membership_norm = norm(g.vector, g.home);
  g.residual = norm(CoefficientVector{Basis::hermite, r}, g.target) / g.membership_norm;
  return g;
}

struct MembershipReport {
  double lambda = 0.0;
  Index s;
  double norm = 0.0;          ///< partial-sum norm at the last truncation
  bool converged = false;     ///< relative change of the squared partial sums below tol
  std::size_t n_used = 0;
};

/// ||chi(lambda)||_{H_{-s}} by partial sums at doublings from 1024 up to cap.
inline MembershipReport membership_norm(double lambda, Index s, double tol = 1e-8, std::size_t cap = std::size_t{1} << 20) {
  const auto home = hermite_chain_space(Index(-s.num, s.den));
  const RVector phi = hermite_functions(lambda, cap);
  MembershipReport r{lambda, s, 0.0, false, 0};
  double acc = 0.0, last = -1.0;
  std::size_t done = 0;
  for (std::size_t n = 1024; n <= cap; n *= 2) {
    for (; done < n; ++done) {
      const double w = home.weight_at(done);
      const double v = phi(static_cast<Eigen::Index>(done)) * w;
      acc += v * v;
    }
    r.n_used = n;
    r.norm = std::sqrt(acc);
    if (last >= 0 && std::abs(acc - last) <= tol * acc) {
      r.converged = true;
      break;
    }
    last = acc;
  }
  return r;
}

/// Smallest s in {1/4, 1/2, ..., smax} whose membership partial sums stabilize.
inline std::optional<Index> smallest_membership_index(double lambda, Index smax = Index(3), double tol = 1e-8,
                                                      std::size_t cap = std::size_t{1} << 20) {
  for (std::int64_t q = 1; Index(q, 4) <= smax; ++q)
    if (membership_norm(lambda, Index(q, 4), tol, cap).converged) return Index(q, 4);
  return std::nullopt;
}

struct ExpansionReport {
  std::size_t modes = 0;
  double error = 0.0;           ///< max_n |reconstructed_n - c_n|
  double parseval_error = 0.0;  ///< |int |phi|^2 - sum |c_n|^2|
  bool rapidly_decreasing = true;
  std::string warning;
  CVector reconstructed;

  nlohmann::json to_json() const {
    nlohmann::json j{{"modes", modes}, {"error", error}, {"parseval_error", parseval_error}, {"rapidly_decreasing", rapidly_decreasing}};
    if (!warning.empty()) j["warning"] = warning;
    return j;
  }
};

struct ExpansionConfig {
  std::size_t nodes = 400;
  double a = -20.0;
  double b = 20.0;
  std::size_t modes = 64;  ///< reconstructed coefficients
};

/// Reconstructs c_n = int phi(lambda) phi_n(lambda) d lambda from the samples
/// phi(lambda) = sum_m c_m phi_m(lambda) on a Gauss-Legendre rule.
inline ExpansionReport expansion_check(const CoefficientVector& c, const ExpansionConfig& ec = {}) {
  if (c.basis != Basis::hermite) throw BasisMismatch("expansion check expects hermite coefficients");
  ExpansionReport r;
  const std::size_t len = c.size();
  r.modes = std::max(ec.modes, len);
  const double cmax = len ? c.coeffs.cwiseAbs().maxCoeff() : 0.0;
  for (std::size_t n = 64; n < len; ++n)
    if (std::abs(c.coeffs(static_cast<Eigen::Index>(n))) > 1e-12 * cmax) r.rapidly_decreasing = false;
  if (!r.rapidly_decreasing) r.warning = "coefficients beyond mode 64 are not negligible; no accuracy contract";
  const auto rule = gauss_legendre(ec.nodes, ec.a, ec.b);
  const Eigen::MatrixXd T = hermite_table(rule.nodes, r.modes);
  CVector cc = CVector::Zero(static_cast<Eigen::Index>(r.modes));
  cc.head(static_cast<Eigen::Index>(len)) = c.coeffs;
  const CVector samples = T.cast<cplx>() * cc;
  r.reconstructed = T.transpose().cast<cplx>() * (rule.weights.cast<cplx>().cwiseProduct(samples));
  r.error = (r.reconstructed - cc).cwiseAbs().maxCoeff();
  r.parseval_error = std::abs(rule.weights.dot(samples.cwiseAbs2()) - cc.squaredNorm());
  return r;
}

struct RestrictionReport {
  std::string operator_name;
  std::string space;
  std::size_t truncation = 0;
  std::size_t domain_dimension = 0;  ///< basis images with finite H-norm
  std::size_t rank = 0;
  double hermitian_defect = 0.0;     ///< max |T - T^H|
  double max_imag_eigenvalue = 0.0;
  std::string verdict;

  nlohmann::json to_json() const {
    return {{"operator", operator_name}, {"space", space}, {"truncation", truncation}, {"domain_dimension", domain_dimension},
            {"rank", rank}, {"hermitian_defect", hermitian_defect}, {"max_imag_eigenvalue", max_imag_eigenvalue},
            {"verdict", verdict}};
  }
};

/// X_{0,n}: the part of X with domain {xi in H cap H_n : X xi in H}, read at truncation N.
inline RestrictionReport restricted_operator(const CoefficientOperator& x, const ScaleSpace& hn, std::size_t N = 256) {
  require_same_basis(x.basis(), hn.basis(), "restricted_operator");
  RestrictionReport r;
  r.operator_name = x.name();
  r.space = hn.label();
  r.truncation = N;
  const CMatrix cols = x.truncate(x.range_rows(N), N);
  for (Eigen::Index j = 0; j < cols.cols(); ++j)
    if (std::isfinite(cols.col(j).norm())) ++r.domain_dimension;
  const CMatrix t = x.truncate(N);
  r.hermitian_defect = (t - t.adjoint()).cwiseAbs().maxCoeff();
  const RVector sv = singular_values(t);
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv(k) > 1e-10 * sv(0)) ++r.rank;
  Eigen::ComplexEigenSolver<CMatrix> es(t, false);
  r.max_imag_eigenvalue = es.eigenvalues().imag().cwiseAbs().maxCoeff();
  if (x.name() == "M_x")
    r.verdict = "densely defined, essentially self-adjoint (by model construction)";
  else if (x.is_diagonal())
    r.verdict = r.hermitian_defect == 0.0 ? "diagonal, self-adjoint" : "diagonal, not self-adjoint";
  else if (r.hermitian_defect == 0.0)
    r.verdict = "symmetric restriction";
  else
    r.verdict = "not symmetric";
  return r;
}

}  // namespace rigspec
