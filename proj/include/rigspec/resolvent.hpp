#pragma once

// Per-pair spectral data of X: regular points, defect numbers, resolvents
// R_lambda^{E,F}(X), Neumann continuation, identities, branches and the union
// spectrum over a family.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/LU>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <json.hpp>

#include "rigspec/config.hpp"
#include "rigspec/error.hpp"
#include "rigspec/numeric.hpp"
#include "rigspec/operator.hpp"
#include "rigspec/scale.hpp"

namespace rigspec {

enum class PairStatus { resolvent, regular_defect, not_regular, no_extension, inconclusive };

inline const char* to_string(PairStatus s) {
  switch (s) {
    case PairStatus::resolvent: return "resolvent";
    case PairStatus::regular_defect: return "regular-defect";
    case PairStatus::not_regular: return "not-regular";
    case PairStatus::no_extension: return "no-extension";
    default: return "inconclusive";
  }
}

/// Classification of one block of a finite section: full (bounded below and
/// kernel-free), kernel (a null direction or a vanishing lower bound), or open.
enum class Side { open, full, kernel };

struct SideState {
  Side side = Side::open;
  int kernel = 0;            ///< singular values below defect_eps relative to the largest
  bool count_stable = false;
  Trend co = Trend::open;    ///< smallest retained singular value, inverted
};

/// Status read from the injectivity (tall) and surjectivity (wide) sides.
inline PairStatus status_from_sides(const SideState& tall, const SideState& wide) {
  if (tall.side == Side::kernel) return PairStatus::not_regular;
  if (tall.side == Side::open) return PairStatus::inconclusive;
  if (wide.side == Side::full) return PairStatus::resolvent;
  if (wide.side == Side::kernel) return PairStatus::regular_defect;
  return PairStatus::inconclusive;
}

/// Outcome of the finite-section analysis of X - lambda : E -> F.
struct PairAnalysis {
  PairStatus status = PairStatus::inconclusive;
  double c_low = 0.0;              ///< estimate of the best c_lambda
  double d_high = 0.0;             ///< estimate of the best d_lambda
  std::optional<int> defect;       ///< set for resolvent (0) and stable regular-defect
  bool stabilized = false;         ///< injectivity constant stabilized
  double witness_n = 0.0;
  Trend injectivity = Trend::open;   ///< converged: bounded below; diverged: fails
  Trend surjectivity = Trend::open;
  double singular_value_gap = 0.0;   ///< smallest retained / largest discarded co-singular value
  SideState tall;
  SideState wide;
  bool sectioned = false;            ///< status read from tall and wide sides
};

/// Status the adjoint must record at conj(lambda) on (F^x, E^x): the same
/// sides with their roles exchanged. Diagonal and uncertified analyses are
/// self-dual.
inline PairStatus dual_status(const PairAnalysis& a) {
  return a.sectioned ? status_from_sides(a.wide, a.tall) : a.status;
}

namespace detail {

inline bool singular(double lo, double hi, double eps) { return !(lo > eps * hi); }

/// Diagonal X: s(n) = |a_n - lambda| w_F(n) / w_E(n) on the sampled modes.
/// log_abs[i] = log|a_i - lambda|, offset[i] = lw_F + (-lw_E).
inline PairAnalysis analyze_diagonal(const ModeSamples& samples, std::span<const double> log_abs,
                                     std::span<const double> offset, const RunConfig& cfg) {
  std::vector<double> lv(log_abs.size());
  for (std::size_t i = 0; i < lv.size(); ++i) lv[i] = log_abs[i] + offset[i];
  const auto scan = scan_extrema(samples, std::span<const double>(lv), cfg.truncation.rel_tol, cfg.truncation.growth_threshold);
  PairAnalysis a;
  a.c_low = scan.inf;
  a.d_high = scan.sup;
  a.witness_n = scan.witness_n;
  if (singular(a.c_low, a.d_high, cfg.tolerances.defect_eps)) {
    a.injectivity = Trend::diverged;
  } else {
    a.injectivity = scan.inf_trend;
  }
  a.surjectivity = a.injectivity;
  a.stabilized = a.injectivity == Trend::converged;
  switch (a.injectivity) {
    case Trend::converged:
      a.status = PairStatus::resolvent;
      a.defect = 0;
      break;
    case Trend::diverged: a.status = PairStatus::not_regular; break;
    default: a.status = PairStatus::inconclusive; break;
  }
  return a;
}

/// Banded, rank-sum and dense X. With B the weighted (R x R) section of
/// X - lambda, the tall block B[:R, :N] measures injectivity and the wide
/// block B[:N, :R] measures surjectivity and the defect. Both blocks are read
/// by the same rule, so the analysis of X^dagger at conj(lambda) on the dual
/// pair sees the two sides swapped.
struct SideTracker {
  std::vector<double> min_recip, co_recip;
  std::vector<int> counts;
  double gap = kInf;  ///< smallest retained / largest discarded singular value

  void push(const RVector& sv, double eps) {
    const double thr = eps * sv(0);
    int k = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (!(sv(i) > thr)) ++k;
    if (!counts.empty() && counts.back() != k) co_recip.clear();
    counts.push_back(k);
    const double lo = sv(sv.size() - 1);
    min_recip.push_back(lo > 0 ? 1.0 / lo : kInf);
    const Eigen::Index keep = sv.size() - k;
    const double co = keep > 0 ? sv(keep - 1) : 0.0;
    co_recip.push_back(co > 0 ? 1.0 / co : kInf);
    gap = k > 0 ? (sv(keep) > 0 ? co / sv(keep) : kInf) : kInf;
  }
  bool count_stable() const { return counts.size() >= 2 && counts[counts.size() - 1] == counts[counts.size() - 2]; }

  SideState state(const TruncationConfig& t) const {
    SideState s;
    s.kernel = counts.back();
    s.count_stable = count_stable();
    s.co = classify_growth(co_recip, t.rel_tol, t.growth_threshold);
    const Trend m = s.kernel > 0 ? Trend::diverged : classify_growth(min_recip, t.rel_tol, t.growth_threshold);
    if (m == Trend::diverged)
      s.side = Side::kernel;
    else if (m == Trend::converged && s.count_stable)
      s.side = Side::full;
    return s;
  }
};

inline bool settled(const SideState& s) {
  if (s.side == Side::full) return true;
  return s.side == Side::kernel && s.count_stable && s.co != Trend::open;
}

inline PairAnalysis analyze_sections(const CoefficientOperator& x, cplx lambda, const ScaleSpace& e, const ScaleSpace& f,
                                     const RunConfig& cfg) {
  const auto& t = cfg.truncation;
  const double eps = cfg.tolerances.defect_eps;
  PairAnalysis a;
  SideTracker tall, wide;
  for (std::size_t n : doubling_schedule(t.n0, t.dense_nmax)) {
    const std::size_t r = x.range_rows(n);
    const CMatrix b = weighted_block(x, lambda, e, f, r, r);
    const auto ni = static_cast<Eigen::Index>(n), ri = static_cast<Eigen::Index>(r);
    const RVector st = singular_values_tall(b.topLeftCorner(ri, ni));
    const RVector sw = singular_values_tall(b.topLeftCorner(ni, ri).adjoint());
    a.witness_n = static_cast<double>(n);
    a.d_high = st(0);
    a.c_low = st(st.size() - 1);
    tall.push(st, eps);
    wide.push(sw, eps);
    a.tall = tall.state(t);
    a.wide = wide.state(t);
    if (settled(a.tall) && settled(a.wide)) break;
  }
  const int d = a.wide.kernel;
  a.singular_value_gap = wide.gap;
  a.injectivity = a.tall.side == Side::kernel ? Trend::diverged : (a.tall.side == Side::full ? Trend::converged : Trend::open);
  a.surjectivity = a.wide.side == Side::full ? Trend::converged : a.wide.co;
  a.stabilized = a.tall.side == Side::full;
  a.sectioned = true;
  a.status = status_from_sides(a.tall, a.wide);
  if (a.status == PairStatus::resolvent) a.defect = 0;
  if (a.status == PairStatus::regular_defect && a.wide.count_stable && a.wide.co == Trend::converged) a.defect = d;
  return a;
}

inline std::vector<double> pair_offset(const ModeSamples& s, const ScaleSpace& e, const ScaleSpace& f) {
  std::vector<double> off(s.modes.size());
  for (std::size_t i = 0; i < off.size(); ++i) off[i] = f.log_weight(s.modes[i]) + (-e.log_weight(s.modes[i]));
  return off;
}

inline std::vector<double> log_abs_shift(const ModeSamples& s, std::span<const cplx> a, cplx lambda) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::log(std::abs(a[i] - lambda));
  (void)s;
  return out;
}

inline std::vector<cplx> symbol_samples(const ModeSamples& s, const Symbol& sym) {
  std::vector<cplx> a(s.modes.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = sym(s.modes[i]);
  return a;
}

}  // namespace detail

/// Status of lambda for the pair (E, F) given a continuity certificate.
inline PairAnalysis analyze_pair(const CoefficientOperator& x, cplx lambda, const ScaleSpace& e, const ScaleSpace& f,
                                 const ContinuityCertificate& cert, const RunConfig& cfg = {}) {
  PairAnalysis a;
  if (cert.failed()) {
    a.status = PairStatus::no_extension;
    return a;
  }
  if (!cert.certified()) return a;
  if (x.is_diagonal()) {
    const auto samples = ModeSamples::build(x.basis(), cfg.truncation);
    const auto vals = detail::symbol_samples(samples, x.as_diagonal().symbol);
    const auto la = detail::log_abs_shift(samples, vals, lambda);
    const auto off = detail::pair_offset(samples, e, f);
    return detail::analyze_diagonal(samples, la, off, cfg);
  }
  return detail::analyze_sections(x, lambda, e, f, cfg);
}

inline PairAnalysis analyze_pair(const CoefficientOperator& x, cplx lambda, const ScaleSpace& e, const ScaleSpace& f,
                                 const RunConfig& cfg = {}) {
  return analyze_pair(x, lambda, e, f, certify(x, e, f, cfg), cfg);
}

// ---------------------------------------------------------------- reports

struct RegularPointReport {
  cplx lambda;
  ScaleSpace E;
  ScaleSpace F;
  double c_low = 0.0;
  double d_high = 0.0;
  bool stabilized = false;
  double witness_n = 0.0;
  bool regular = false;
  PairStatus status = PairStatus::inconclusive;

  nlohmann::json to_json() const {
    return {{"lambda", format_complex(lambda)}, {"E", E.label()},         {"F", F.label()},
            {"c_low", c_low},                   {"d_high", d_high},       {"stabilized", stabilized},
            {"witness_n", witness_n},           {"regular", regular},     {"status", to_string(status)}};
  }
};

/// Raised by resolvent_solve when lambda is not in rho_{E,F}(X).
class NotInResolventSet : public PreconditionError {
 public:
  explicit NotInResolventSet(RegularPointReport r)
      : PreconditionError("lambda " + format_complex(r.lambda) + " is not in the resolvent set of the pair " + r.E.label() +
                          " -> " + r.F.label() + " (status " + to_string(r.status) + ")"),
        report_(std::move(r)) {}
  const RegularPointReport& report() const noexcept { return report_; }

 private:
  RegularPointReport report_;
};

inline RegularPointReport regular_point(const CoefficientOperator& x, cplx lambda, const ScaleSpace& e, const ScaleSpace& f,
                                        const RunConfig& cfg = {}) {
  const auto cert = certify(x, e, f, cfg);
  if (!cert.certified())
    throw PreconditionError("regular point analysis needs X in C(E,F); certification for " + e.label() + " -> " + f.label() +
                            " is " + to_string(cert.method));
  const auto a = analyze_pair(x, lambda, e, f, cert, cfg);
  RegularPointReport r{lambda, e, f, a.c_low, a.d_high, a.stabilized, a.witness_n, a.stabilized, a.status};
  return r;
}

struct DefectReport {
  cplx lambda;
  ScaleSpace E;
  ScaleSpace F;
  std::optional<int> defect;  ///< nullopt: unstable
  double singular_value_gap = 0.0;

  std::string defect_text() const { return defect ? std::to_string(*defect) : "unstable"; }
};

inline DefectReport defect_number(const CoefficientOperator& x, cplx lambda, const ScaleSpace& e, const ScaleSpace& f,
                                  const RunConfig& cfg = {}) {
  const auto cert = certify(x, e, f, cfg);
  if (!cert.certified()) throw PreconditionError("defect defined only at regular points: X is not certified in C(E,F)");
  const auto a = analyze_pair(x, lambda, e, f, cert, cfg);
  if (a.injectivity != Trend::converged)
    throw PreconditionError("defect defined only at regular points: " + format_complex(lambda) + " is not regular for " +
                            e.label() + " -> " + f.label());
  return DefectReport{lambda, e, f, a.defect, a.singular_value_gap};
}

// ---------------------------------------------------------------- solves

struct SolveResult {
  CoefficientVector xi;
  double residual_f = 0.0;  ///< ||(X - lambda) xi - eta||_F at the truncation
  double norm_e = 0.0;      ///< ||xi||_E
};

/// (X_N - lambda)^{-1} eta with N = length of eta; no status check.
inline CoefficientVector finite_section_solve(const CoefficientOperator& x, cplx lambda, const CoefficientVector& eta) {
  require_same_basis(x.basis(), eta.basis, "finite_section_solve");
  const std::size_t n = eta.size();
  const auto ni = static_cast<Eigen::Index>(n);
  CVector xi(ni);
  if (x.is_diagonal()) {
    const auto& a = x.as_diagonal().symbol;
    for (std::size_t p = 0; p < n; ++p) xi(static_cast<Eigen::Index>(p)) = eta.coeffs(static_cast<Eigen::Index>(p)) / (a(mode_of(x.basis(), p)) - lambda);
    return {eta.basis, xi};
  }
  if (x.is_banded()) {
    const CMatrix m = x.truncate(n);
    Eigen::SparseMatrix<cplx> s(ni, ni);
    std::vector<Eigen::Triplet<cplx>> trip;
    for (Eigen::Index j = 0; j < ni; ++j)
      for (Eigen::Index i = 0; i < ni; ++i) {
        const cplx v = m(i, j) - (i == j ? lambda : cplx{});
        if (v != cplx{}) trip.emplace_back(i, j, v);
      }
    s.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<cplx>> lu;
    lu.compute(s);
    if (lu.info() != Eigen::Success) throw PreconditionError("finite section of X - lambda is singular");
    xi = lu.solve(eta.coeffs);
    return {eta.basis, xi};
  }
  CMatrix m = x.truncate(n);
  m.diagonal().array() -= lambda;
  xi = Eigen::PartialPivLU<CMatrix>(m).solve(eta.coeffs);
  return {eta.basis, xi};
}

inline double residual_norm(const CoefficientOperator& x, cplx lambda, const CoefficientVector& xi, const CoefficientVector& eta,
                            const ScaleSpace& f) {
  CMatrix m = x.truncate(xi.size());
  m.diagonal().array() -= lambda;
  return norm(CoefficientVector{xi.basis, CVector(m * xi.coeffs - eta.coeffs)}, f);
}

/// R_lambda^{E,F}(X) eta at the truncation of eta (padded to n_work).
inline SolveResult resolvent_solve(const CoefficientOperator& x, cplx lambda, const ScaleSpace& e, const ScaleSpace& f,
                                   const CoefficientVector& eta, const RunConfig& cfg = {}) {
  require_same_basis(x.basis(), eta.basis, "resolvent_solve");
  const auto cert = certify(x, e, f, cfg);
  const auto a = analyze_pair(x, lambda, e, f, cert, cfg);
  if (a.status != PairStatus::resolvent)
    throw NotInResolventSet(RegularPointReport{lambda, e, f, a.c_low, a.d_high, a.stabilized, a.witness_n, a.stabilized, a.status});
  const auto padded = eta.resized(std::max(eta.size(), cfg.truncation.n_work));
  auto xi = finite_section_solve(x, lambda, padded);
  SolveResult r{xi, residual_norm(x, lambda, xi, padded, f), norm(xi, e)};
  return r;
}

// ---------------------------------------------------------------- Neumann continuation

namespace detail {

/// ||W_to M W_from^{-1}|| for an N x N matrix M.
inline double weighted_norm(const CMatrix& m, Basis b, const ScaleSpace& from, const ScaleSpace& to) {
  CMatrix w = m;
  for (Eigen::Index j = 0; j < w.cols(); ++j)
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      const double s = std::exp(to.log_weight(mode_of(b, static_cast<std::size_t>(i)))) *
                       std::exp(-from.log_weight(mode_of(b, static_cast<std::size_t>(j))));
      w(i, j) = s * w(i, j);
    }
  return spectral_norm(w);
}

inline CMatrix section_resolvent(const CoefficientOperator& x, cplx lambda, std::size_t n) {
  CMatrix m = x.truncate(n);
  m.diagonal().array() -= lambda;
  return Eigen::PartialPivLU<CMatrix>(m).inverse();
}

}  // namespace detail

/// Partial sums sum_{k<=K} (lambda - lambda0)^k R0^{k+1} applied to vectors.
struct NeumannContinuation {
  cplx lambda0;
  cplx lambda;
  double radius = 0.0;       ///< delta = 1 / ||R0 restricted to E||_{E,E}
  double r0_fe_norm = 0.0;   ///< ||R0||_{F,E}
  std::size_t terms = 0;     ///< K
  double tail_bound = 0.0;
  std::function<CoefficientVector(const CoefficientVector&)> apply;
};

namespace detail {

/// One application of R0 at the truncation of v.
inline CoefficientVector r0_apply(const CoefficientOperator& x, cplx lambda0, const CoefficientVector& v) {
  return finite_section_solve(x, lambda0, v);
}

/// Horner form: R0 (eta + t R0 (eta + t R0 (... ))) with t = lambda - lambda0.
inline CoefficientVector neumann_sum(const CoefficientOperator& x, cplx lambda0, cplx lambda, const CoefficientVector& eta,
                                     std::size_t k_terms) {
  const cplx t = lambda - lambda0;
  CoefficientVector acc = r0_apply(x, lambda0, eta);
  for (std::size_t k = 0; k < k_terms; ++k) {
    CoefficientVector inner{eta.basis, CVector(eta.coeffs + t * acc.coeffs)};
    acc = r0_apply(x, lambda0, inner);
  }
  return acc;
}

}  // namespace detail

/// Unchecked partial sum with exactly K + 1 terms; used to exhibit divergence
/// outside the radius.
inline CoefficientVector neumann_partial_sum(const CoefficientOperator& x, cplx lambda0, cplx lambda,
                                             const CoefficientVector& eta, std::size_t k_terms) {
  require_same_basis(x.basis(), eta.basis, "neumann_partial_sum");
  return detail::neumann_sum(x, lambda0, lambda, eta, k_terms);
}

inline NeumannContinuation neumann_continue(const CoefficientOperator& x, cplx lambda0, cplx lambda, const ScaleSpace& e,
                                            const ScaleSpace& f, const RunConfig& cfg = {}) {
  const auto& t = cfg.truncation;
  if (!embeds(e, f, t)) throw PreconditionError("Neumann continuation needs E contained in F");
  const auto cert = certify(x, e, f, cfg);
  const auto a = analyze_pair(x, lambda0, e, f, cert, cfg);
  if (a.status != PairStatus::resolvent)
    throw NotInResolventSet(RegularPointReport{lambda0, e, f, a.c_low, a.d_high, a.stabilized, a.witness_n, a.stabilized, a.status});

  double r0_ee = kInf, r0_fe = kInf;
  if (x.is_diagonal()) {
    const auto samples = ModeSamples::build(x.basis(), t);
    const auto& sym = x.as_diagonal().symbol;
    const auto s_ee = scan_extrema(
        samples, [&](double n) { return -std::log(std::abs(sym(n) - lambda0)); }, t.rel_tol, t.growth_threshold);
    const auto s_fe = scan_extrema(
        samples, [&](double n) { return -std::log(std::abs(sym(n) - lambda0)) + (e.log_weight(n) + (-f.log_weight(n))); },
        t.rel_tol, t.growth_threshold);
    if (s_ee.sup_trend == Trend::converged) r0_ee = s_ee.sup;
    if (s_fe.sup_trend == Trend::converged) r0_fe = s_fe.sup;
  } else {
    const CMatrix r0 = detail::section_resolvent(x, lambda0, t.n_work);
    r0_ee = detail::weighted_norm(r0, x.basis(), e, e);
    r0_fe = detail::weighted_norm(r0, x.basis(), f, e);
  }
  if (!std::isfinite(r0_ee) || !std::isfinite(r0_fe)) throw PreconditionError("resolvent norms at lambda0 did not stabilize");

  NeumannContinuation c;
  c.lambda0 = lambda0;
  c.lambda = lambda;
  c.radius = 1.0 / r0_ee;
  c.r0_fe_norm = r0_fe;
  const double dist = std::abs(lambda - lambda0);
  if (!(dist < c.radius))
    throw PreconditionError("outside Neumann radius: |lambda - lambda0| = " + format_double(dist) + " >= delta = " +
                            format_double(c.radius));
  const double q = dist * r0_ee;
  // ||R_{lambda0}^{(k+1)}||_{F,E} <= ||R0|_E||^k ||R0||_{F,E}: tail after K is r0_fe |t|^{K+1} ||R0|_E||^{K+1} / (1 - q)
  std::size_t k = 0;
  double tail = q == 0.0 ? 0.0 : r0_fe * q / (1.0 - q);
  while (tail > cfg.tolerances.series_tol && k < 100000) {
    ++k;
    tail *= q;
  }
  c.terms = k;
  c.tail_bound = tail;
  auto xc = x;
  c.apply = [xc, lambda0, lambda, k](const CoefficientVector& eta) { return detail::neumann_sum(xc, lambda0, lambda, eta, k); };
  return c;
}

// ---------------------------------------------------------------- identities

struct IdentityReport {
  double first_residual = 0.0;   ///< ||R(X) - R(Y) - R(X)(Y - X)R(Y)||_{F,E}
  double first_scale = 0.0;      ///< ||R(X)|| ||X - Y||_{E,F} ||R(Y)||
  double second_residual = 0.0;  ///< ||R_l(X) - R_m(X) - (l - m) R_l(X) R_m(X)||_{F,E}
  double second_scale = 0.0;     ///< ||R_l|| |l - m| ||embedding|| ||R_m||
  bool first_ok = false;
  bool second_ok = false;
};

/// Both resolvent identities at the working truncation. The first is checked in
/// the form R(X) - R(Y) = R(X) (Y - X) R(Y).
inline IdentityReport check_resolvent_identities(const CoefficientOperator& x, const CoefficientOperator& y, cplx lambda, cplx mu,
                                                 const ScaleSpace& e, const ScaleSpace& f, const RunConfig& cfg = {}) {
  require_same_basis(x.basis(), y.basis(), "check_resolvent_identities");
  auto need = [&](const CoefficientOperator& op, cplx z, const char* which) {
    const auto a = analyze_pair(op, z, e, f, cfg);
    if (a.status != PairStatus::resolvent)
      throw PreconditionError(std::string("resolvent identities: ") + which + " = " + format_complex(z) +
                              " is not in the resolvent set of " + op.name() + " for " + e.label() + " -> " + f.label());
  };
  need(x, lambda, "lambda");
  need(y, lambda, "lambda");
  need(x, mu, "mu");
  const std::size_t n = cfg.truncation.n_work;
  const Basis b = x.basis();
  const CMatrix rx = detail::section_resolvent(x, lambda, n);
  const CMatrix ry = detail::section_resolvent(y, lambda, n);
  const CMatrix rxm = detail::section_resolvent(x, mu, n);
  const CMatrix diff = y.truncate(n) - x.truncate(n);

  IdentityReport r;
  const CMatrix e1 = rx - ry - rx * diff * ry;
  r.first_residual = detail::weighted_norm(e1, b, f, e);
  r.first_scale = detail::weighted_norm(rx, b, f, e) * detail::weighted_norm(diff, b, e, f) * detail::weighted_norm(ry, b, f, e);
  const CMatrix e2 = rx - rxm - (lambda - mu) * (rx * rxm);
  const double emb = embedding_norm(e, f, cfg.truncation);
  r.second_residual = detail::weighted_norm(e2, b, f, e);
  r.second_scale = detail::weighted_norm(rx, b, f, e) * std::abs(lambda - mu) * emb * detail::weighted_norm(rxm, b, f, e);
  r.first_ok = r.first_residual <= cfg.tolerances.id_tol * r.first_scale;
  r.second_ok = r.second_residual <= cfg.tolerances.id_tol * r.second_scale;
  return r;
}

// ---------------------------------------------------------------- equivalence

using VectorMap = std::function<CoefficientVector(const CoefficientVector&)>;

struct EquivalenceReport {
  bool equivalent = true;
  double max_relative_difference = 0.0;
  std::size_t probes = 0;
};

/// Compares B and C on the first k basis vectors (truncation n) in the given
/// model norm; without a model space the plain l2 norm is used.
inline EquivalenceReport compare_handles(const VectorMap& b, const VectorMap& c, Basis basis, std::size_t k, std::size_t n,
                                         const ScaleSpace* model, double tol) {
  EquivalenceReport r;
  auto nrm = [&](const CoefficientVector& v) { return model ? norm(v, *model) : v.coeffs.norm(); };
  for (std::size_t p = 0; p < k; ++p) {
    const auto e = CoefficientVector::unit(basis, p, std::max(n, k));
    const auto vb = b(e);
    const auto vc = c(e);
    const std::size_t m = std::max(vb.size(), vc.size());
    const CoefficientVector d{basis, CVector(vb.resized(m).coeffs - vc.resized(m).coeffs)};
    const double rel = nrm(d) / std::max(1.0, nrm(vb));
    r.max_relative_difference = std::max(r.max_relative_difference, rel);
    ++r.probes;
  }
  r.equivalent = r.max_relative_difference <= tol;
  return r;
}

inline bool equivalent(const VectorMap& b, const VectorMap& c, Basis basis, const RunConfig& cfg = {},
                       const ScaleSpace* model = nullptr) {
  return compare_handles(b, c, basis, cfg.equivalence_probes, cfg.truncation.n_work, model, cfg.tolerances.eq_tol).equivalent;
}

// ---------------------------------------------------------------- branches

/// The single-valued branch lambda -> R_lambda^{E,F}(X) on the grid points where
/// (E,F) gives a resolvent.
struct ResolventBranch {
  ScaleSpace E;
  ScaleSpace F;
  std::vector<cplx> grid_points;
  std::vector<PairStatus> statuses;
  std::function<CoefficientVector(cplx, const CoefficientVector&)> solver;

  bool defined_at(cplx z) const {
    for (std::size_t i = 0; i < grid_points.size(); ++i)
      if (grid_points[i] == z && statuses[i] == PairStatus::resolvent) return true;
    return false;
  }

  VectorMap at(cplx z) const {
    if (!defined_at(z)) throw PreconditionError("branch " + E.label() + " -> " + F.label() + " is not defined at " + format_complex(z));
    auto s = solver;
    return [s, z](const CoefficientVector& v) { return s(z, v); };
  }
};

inline ResolventBranch make_branch(const CoefficientOperator& x, const ScaleSpace& e, const ScaleSpace& f,
                                   std::vector<cplx> points, const RunConfig& cfg = {}) {
  ResolventBranch br{e, f, std::move(points), {}, {}};
  const auto cert = certify(x, e, f, cfg);
  for (cplx z : br.grid_points) br.statuses.push_back(analyze_pair(x, z, e, f, cert, cfg).status);
  auto xc = x;
  const std::size_t nw = cfg.truncation.n_work;
  br.solver = [xc, nw](cplx z, const CoefficientVector& v) { return finite_section_solve(xc, z, v.resized(std::max(v.size(), nw))); };
  return br;
}

/// Admissible pairs E contained in F of a family, finest E first.
inline std::vector<std::pair<ScaleSpace, ScaleSpace>> admissible_pairs(const ScaleFamily& fam, const TruncationConfig& t = {}) {
  std::vector<std::pair<ScaleSpace, ScaleSpace>> out;
  for (const auto& e : fam.spaces())
    for (const auto& f : fam.spaces())
      if (embeds(e, f, t)) out.emplace_back(e, f);
  return out;
}

inline std::string pair_label(const ScaleSpace& e, const ScaleSpace& f) { return e.label() + "->" + f.label(); }

struct BranchReport {
  cplx lambda;
  std::vector<std::pair<ScaleSpace, ScaleSpace>> pairs;
  std::vector<PairAnalysis> analyses;
  std::vector<std::size_t> resolvent_pairs;                          ///< indices into pairs
  std::vector<std::tuple<std::size_t, std::size_t, bool>> equivalences;  ///< over resolvent_pairs

  nlohmann::json to_json() const {
    nlohmann::json ps = nlohmann::json::array();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto& a = analyses[i];
      ps.push_back({{"index", i},
                    {"pair", pair_label(pairs[i].first, pairs[i].second)},
                    {"status", to_string(a.status)},
                    {"c_low", a.c_low},
                    {"d_high", a.d_high},
                    {"witness_n", a.witness_n}});
    }
    nlohmann::json eq = nlohmann::json::array();
    for (const auto& [i, j, v] : equivalences) eq.push_back({i, j, v});
    return {{"lambda", format_complex(lambda)}, {"pairs", ps}, {"equivalences", eq}};
  }
};

/// All pairs at one lambda, with pairwise equivalence of the resolvent branches
/// measured in the finest family norm.
inline BranchReport branch_report(const CoefficientOperator& x, const ScaleFamily& fam, cplx lambda, const RunConfig& cfg = {}) {
  BranchReport r;
  r.lambda = lambda;
  r.pairs = admissible_pairs(fam, cfg.truncation);
  std::vector<ResolventBranch> branches;
  for (std::size_t i = 0; i < r.pairs.size(); ++i) {
    const auto& [e, f] = r.pairs[i];
    r.analyses.push_back(analyze_pair(x, lambda, e, f, cfg));
    if (r.analyses.back().status == PairStatus::resolvent) {
      r.resolvent_pairs.push_back(i);
      branches.push_back(make_branch(x, e, f, {lambda}, cfg));
    }
  }
  const ScaleSpace* model = fam.spaces().empty() ? nullptr : &fam.finest();
  for (std::size_t a = 0; a < branches.size(); ++a)
    for (std::size_t b = a + 1; b < branches.size(); ++b)
      r.equivalences.emplace_back(r.resolvent_pairs[a], r.resolvent_pairs[b],
                                  equivalent(branches[a].at(lambda), branches[b].at(lambda), x.basis(), cfg, model));
  return r;
}

// ---------------------------------------------------------------- union spectrum

struct PairInfo {
  ScaleSpace E;
  ScaleSpace F;
  std::string label;
  ContinuityCertificate certificate;
};

struct CellRecord {
  std::size_t lambda_index = 0;
  std::size_t pair_index = 0;
  PairAnalysis analysis;
};

/// lambda in rho_{E,F}(X) recorded vs conj(lambda) in rho_{F^x,E^x}(X^dagger) recorded.
struct DualityRecord {
  std::size_t lambda_index = 0;
  std::size_t pair_index = 0;
  PairStatus original = PairStatus::inconclusive;
  PairStatus dual = PairStatus::inconclusive;
  PairStatus expected_dual = PairStatus::inconclusive;  ///< original sides with roles exchanged
  bool membership_agrees() const { return (original == PairStatus::resolvent) == (dual == PairStatus::resolvent); }
  bool agrees() const { return membership_agrees() && dual == expected_dual; }
};

struct SpectrumMap {
  std::optional<GridSpec> grid;  ///< absent for scans over explicit points
  std::string operator_name;
  std::vector<cplx> lambdas;
  std::vector<PairInfo> pairs;
  std::vector<CellRecord> cells;  ///< lambda-major, then pair
  std::vector<bool> union_resolvent;
  std::vector<bool> conclusive;
  std::vector<DualityRecord> duality;

  const CellRecord& cell(std::size_t li, std::size_t pi) const { return cells[li * pairs.size() + pi]; }

  /// Summary status of a grid point over all pairs.
  PairStatus summary(std::size_t li) const {
    if (union_resolvent[li]) return PairStatus::resolvent;
    bool any_inconclusive = false, any_defect = false, all_noext = true;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto s = cell(li, p).analysis.status;
      any_inconclusive |= s == PairStatus::inconclusive;
      any_defect |= s == PairStatus::regular_defect;
      all_noext &= s == PairStatus::no_extension;
    }
    if (all_noext) return PairStatus::no_extension;
    if (any_inconclusive) return PairStatus::inconclusive;
    return any_defect ? PairStatus::regular_defect : PairStatus::not_regular;
  }

  static constexpr const char* kCsvHeader =
      "re,im,pair,status(resolvent|regular-defect|not-regular|no-extension|inconclusive),c_low,d_high,defect,witness_n";

  void write_csv(std::ostream& os) const {
    os << kCsvHeader << "\r\n";
    for (const auto& c : cells) {
      const cplx z = lambdas[c.lambda_index];
      const auto& a = c.analysis;
      os << format_double(z.real()) << ',' << format_double(z.imag()) << ',' << '"' << pairs[c.pair_index].label << '"' << ','
         << to_string(a.status) << ',' << format_double(a.c_low) << ',' << format_double(a.d_high) << ','
         << (a.defect ? std::to_string(*a.defect) : std::string(a.status == PairStatus::regular_defect ? "unstable" : "")) << ','
         << format_double(a.witness_n) << "\r\n";
    }
  }

  /// x, y, summary status per grid point.
  void write_plot_data(std::ostream& os) const {
    os << "re,im,status\r\n";
    for (std::size_t i = 0; i < lambdas.size(); ++i)
      os << format_double(lambdas[i].real()) << ',' << format_double(lambdas[i].imag()) << ',' << to_string(summary(i)) << "\r\n";
  }

  nlohmann::json to_json() const {
    nlohmann::json ps = nlohmann::json::array();
    for (const auto& p : pairs)
      ps.push_back({{"label", p.label},
                    {"E", p.E.to_json()},
                    {"F", p.F.to_json()},
                    {"certificate",
                     {{"method", to_string(p.certificate.method)},
                      {"norm_bound", format_double(p.certificate.norm_bound)},
                      {"lower_bound", format_double(p.certificate.lower_bound)},
                      {"witness_n", p.certificate.witness_n}}}});
    nlohmann::json pts = nlohmann::json::array();
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
      nlohmann::json cs = nlohmann::json::array();
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto& a = cell(i, p).analysis;
        nlohmann::json jc{{"pair", p},
                          {"status", to_string(a.status)},
                          {"c_low", format_double(a.c_low)},
                          {"d_high", format_double(a.d_high)},
                          {"witness_n", a.witness_n}};
        if (a.defect) jc["defect"] = *a.defect;
        cs.push_back(jc);
      }
      pts.push_back({{"re", lambdas[i].real()},
                     {"im", lambdas[i].imag()},
                     {"union_resolvent", static_cast<bool>(union_resolvent[i])},
                     {"conclusive", static_cast<bool>(conclusive[i])},
                     {"summary", to_string(summary(i))},
                     {"cells", cs}});
    }
    nlohmann::json dual = nlohmann::json::array();
    for (const auto& d : duality)
      dual.push_back({{"lambda", d.lambda_index}, {"pair", d.pair_index}, {"original", to_string(d.original)},
                      {"dual", to_string(d.dual)},
                      {"expected_dual", to_string(d.expected_dual)}, {"agrees", d.agrees()}});
    nlohmann::json jg = nullptr;
    if (grid)
      jg = {{"re0", grid->re0}, {"re1", grid->re1}, {"n_re", grid->n_re}, {"im0", grid->im0}, {"im1", grid->im1}, {"n_im", grid->n_im}};
    return {{"operator", operator_name},
            {"grid", jg},
            {"pairs", ps},
            {"points", pts},
            {"duality", dual}};
  }
};

/// Grid points, real axis fastest.
inline std::vector<cplx> grid_points(const GridSpec& g) {
  g.validate();
  std::vector<cplx> out;
  out.reserve(g.n_re * g.n_im);
  for (std::size_t j = 0; j < g.n_im; ++j) {
    const double im = g.im0 + (g.im1 - g.im0) * static_cast<double>(j) / static_cast<double>(g.n_im - 1);
    for (std::size_t i = 0; i < g.n_re; ++i) {
      const double re = g.re0 + (g.re1 - g.re0) * static_cast<double>(i) / static_cast<double>(g.n_re - 1);
      out.emplace_back(re, im);
    }
  }
  return out;
}

namespace detail {

/// Statuses of one operator over given pairs and points.
class PairScanner {
 public:
  PairScanner(const CoefficientOperator& x, std::vector<PairInfo> pairs, const RunConfig& cfg)
      : x_(x), pairs_(std::move(pairs)), cfg_(cfg) {
    if (x_.is_diagonal()) {
      samples_ = ModeSamples::build(x_.basis(), cfg_.truncation);
      values_ = symbol_samples(samples_, x_.as_diagonal().symbol);
      for (const auto& p : pairs_) offsets_.push_back(pair_offset(samples_, p.E, p.F));
    }
  }

  const std::vector<PairInfo>& pairs() const { return pairs_; }

  std::vector<PairAnalysis> at(cplx z) const {
    std::vector<PairAnalysis> out;
    std::vector<double> la;
    if (x_.is_diagonal()) la = log_abs_shift(samples_, values_, z);
    for (std::size_t p = 0; p < pairs_.size(); ++p) {
      const auto& cert = pairs_[p].certificate;
      if (!cert.certified()) {
        PairAnalysis a;
        a.status = cert.failed() ? PairStatus::no_extension : PairStatus::inconclusive;
        out.push_back(a);
      } else if (x_.is_diagonal()) {
        out.push_back(analyze_diagonal(samples_, la, offsets_[p], cfg_));
      } else {
        out.push_back(analyze_sections(x_, z, pairs_[p].E, pairs_[p].F, cfg_));
      }
    }
    return out;
  }

 private:
  CoefficientOperator x_;
  std::vector<PairInfo> pairs_;
  RunConfig cfg_;
  ModeSamples samples_;
  std::vector<cplx> values_;
  std::vector<std::vector<double>> offsets_;
};

inline std::vector<PairInfo> certified_pairs(const CoefficientOperator& x,
                                             const std::vector<std::pair<ScaleSpace, ScaleSpace>>& pairs, const RunConfig& cfg) {
  std::vector<PairInfo> out;
  NormCache cache;
  for (const auto& [e, f] : pairs) out.push_back({e, f, pair_label(e, f), certify(x, e, f, cfg, &cache)});
  return out;
}

}  // namespace detail

/// Statuses of every admissible pair at every grid point, the union resolvent set
/// and, for families closed under duality, the duality cross-check.
inline SpectrumMap union_spectrum_scan(const CoefficientOperator& x, const ScaleFamily& fam, std::vector<cplx> points,
                                       const RunConfig& cfg = {}) {
  require_same_basis(x.basis(), fam.basis(), "union_spectrum_scan");
  SpectrumMap m;
  m.operator_name = x.name();
  m.lambdas = std::move(points);
  const auto pairs = admissible_pairs(fam, cfg.truncation);
  detail::PairScanner scan(x, detail::certified_pairs(x, pairs, cfg), cfg);
  m.pairs = scan.pairs();

  const bool check_duality = cfg.duality_check && fam.closed_under_duality() && !pairs.empty();
  std::optional<detail::PairScanner> dual_scan;
  if (check_duality) {
    std::vector<std::pair<ScaleSpace, ScaleSpace>> dual_pairs;
    for (const auto& [e, f] : pairs) dual_pairs.emplace_back(f.dual(), e.dual());
    const auto xd = adjoint(x);
    dual_scan.emplace(xd, detail::certified_pairs(xd, dual_pairs, cfg), cfg);
  }

  for (std::size_t li = 0; li < m.lambdas.size(); ++li) {
    const auto row = scan.at(m.lambdas[li]);
    bool any = false, incl = false;
    for (std::size_t p = 0; p < row.size(); ++p) {
      m.cells.push_back({li, p, row[p]});
      any |= row[p].status == PairStatus::resolvent;
      incl |= row[p].status == PairStatus::inconclusive;
    }
    m.union_resolvent.push_back(any);
    m.conclusive.push_back(any || !incl);
    if (dual_scan) {
      const auto drow = dual_scan->at(std::conj(m.lambdas[li]));
      for (std::size_t p = 0; p < row.size(); ++p) m.duality.push_back({li, p, row[p].status, drow[p].status, dual_status(row[p])});
    }
  }
  return m;
}

inline SpectrumMap union_spectrum_scan(const CoefficientOperator& x, const ScaleFamily& fam, const GridSpec& grid,
                                       const RunConfig& cfg = {}) {
  auto m = union_spectrum_scan(x, fam, grid_points(grid), cfg);
  m.grid = grid;
  return m;
}

}  // namespace rigspec
