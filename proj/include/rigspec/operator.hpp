#pragma once

// Operators X in L(D, D^x) given by their coefficient matrices in a fixed basis.

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "rigspec/config.hpp"
#include "rigspec/error.hpp"
#include "rigspec/expr.hpp"
#include "rigspec/numeric.hpp"
#include "rigspec/scale.hpp"

namespace rigspec {

/// Entry generator (row mode, column mode) -> value.
using EntryFn = std::function<cplx(double, double)>;

struct DiagonalRep {
  Symbol symbol;  ///< a_n as a function of the mode number
};

struct BandedRep {
  int bandwidth = 0;  ///< entries vanish for |row - col| > bandwidth
  EntryFn entry;
  std::string text;
};

/// One term <., u> v of a finite-rank sum.
struct RankTerm {
  Symbol functional;  ///< u
  Symbol value;       ///< v
};

struct RankSumRep {
  std::vector<RankTerm> terms;
};

struct DenseRep {
  EntryFn entry;
  std::string text;
};

using OperatorRep = std::variant<DiagonalRep, BandedRep, RankSumRep, DenseRep>;

class CoefficientOperator {
 public:
  CoefficientOperator(Basis b, OperatorRep rep, bool symmetric = false, std::string name = "X")
      : basis_(b), rep_(std::move(rep)), symmetric_(symmetric), name_(std::move(name)) {}

  static CoefficientOperator diagonal(Basis b, Symbol s, bool symmetric = false, std::string name = "diag") {
    return {b, DiagonalRep{std::move(s)}, symmetric, std::move(name)};
  }

  static CoefficientOperator diagonal(Basis b, const std::string& expr, std::string name = "") {
    auto s = Symbol::parse(expr);
    if (name.empty()) name = "diag(" + expr + ")";
    return {b, DiagonalRep{std::move(s)}, false, std::move(name)};
  }

  static CoefficientOperator banded(Basis b, int bandwidth, EntryFn f, std::string text, bool symmetric = false,
                                    std::string name = "banded") {
    return {b, BandedRep{bandwidth, std::move(f), std::move(text)}, symmetric, std::move(name)};
  }

  static CoefficientOperator rank_sum(Basis b, std::vector<RankTerm> terms, bool symmetric = false,
                                      std::string name = "rank-sum") {
    return {b, RankSumRep{std::move(terms)}, symmetric, std::move(name)};
  }

  static CoefficientOperator dense(Basis b, EntryFn f, std::string text, bool symmetric = false,
                                   std::string name = "dense") {
    return {b, DenseRep{std::move(f), std::move(text)}, symmetric, std::move(name)};
  }

  Basis basis() const noexcept { return basis_; }
  const OperatorRep& rep() const noexcept { return rep_; }
  bool symmetric() const noexcept { return symmetric_; }
  const std::string& name() const noexcept { return name_; }
  void set_name(std::string n) { name_ = std::move(n); }

  bool is_diagonal() const { return std::holds_alternative<DiagonalRep>(rep_); }
  bool is_banded() const { return std::holds_alternative<BandedRep>(rep_); }
  bool is_rank_sum() const { return std::holds_alternative<RankSumRep>(rep_); }
  const DiagonalRep& as_diagonal() const { return std::get<DiagonalRep>(rep_); }
  const BandedRep& as_banded() const { return std::get<BandedRep>(rep_); }
  const RankSumRep& as_rank_sum() const { return std::get<RankSumRep>(rep_); }

  /// Bandwidth in mode numbers; -1 when the matrix is not banded.
  int bandwidth() const {
    if (is_diagonal()) return 0;
    if (is_banded()) return as_banded().bandwidth;
    return -1;
  }

  cplx entry_modes(double n, double m) const {
    return std::visit(
        [&](const auto& r) -> cplx {
          using R = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<R, DiagonalRep>) {
            return n == m ? r.symbol(n) : cplx{};
          } else if constexpr (std::is_same_v<R, BandedRep>) {
            if (std::abs(n - m) > r.bandwidth) return cplx{};
            return r.entry(n, m);
          } else if constexpr (std::is_same_v<R, RankSumRep>) {
            cplx acc{};
            for (const auto& t : r.terms) acc += std::conj(t.functional(m)) * t.value(n);
            return acc;
          } else {
            return r.entry(n, m);
          }
        },
        rep_);
  }

  cplx entry(std::size_t row, std::size_t col) const {
    return entry_modes(mode_of(basis_, row), mode_of(basis_, col));
  }

  /// Leading rows x cols block of the coefficient matrix.
  CMatrix truncate(std::size_t rows, std::size_t cols) const {
    CMatrix m = CMatrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    const int b = bandwidth();
    for (std::size_t j = 0; j < cols; ++j) {
      if (b >= 0) {
        // torus positions of neighbouring modes are at most 2b apart
        const std::size_t reach = basis_ == Basis::fourier_torus ? 2 * static_cast<std::size_t>(b) + 1 : static_cast<std::size_t>(b);
        const std::size_t lo = j > reach ? j - reach : 0;
        const std::size_t hi = std::min(rows, j + reach + 1);
        for (std::size_t i = lo; i < hi; ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = entry(i, j);
      } else {
        for (std::size_t i = 0; i < rows; ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = entry(i, j);
      }
    }
    return m;
  }

  CMatrix truncate(std::size_t n) const { return truncate(n, n); }

  /// Rows needed so that the images of the first n basis vectors are kept
  /// (exactly for banded matrices, as a proxy otherwise).
  std::size_t range_rows(std::size_t n) const {
    const int b = bandwidth();
    if (b == 0) return n;
    if (b > 0) return n + (basis_ == Basis::fourier_torus ? 4 : 2) * static_cast<std::size_t>(b);
    return 2 * n;
  }

  nlohmann::json describe() const {
    nlohmann::json j{{"name", name_}, {"basis", to_string(basis_)}, {"symmetric", symmetric_}};
    std::visit(
        [&](const auto& r) {
          using R = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<R, DiagonalRep>) {
            j["rep"] = {{"type", "diagonal"}, {"symbol", r.symbol.text}};
          } else if constexpr (std::is_same_v<R, BandedRep>) {
            j["rep"] = {{"type", "banded"}, {"bandwidth", r.bandwidth}, {"entries", r.text}};
          } else if constexpr (std::is_same_v<R, RankSumRep>) {
            nlohmann::json terms = nlohmann::json::array();
            for (const auto& t : r.terms) terms.push_back({{"functional", t.functional.text}, {"value", t.value.text}});
            j["rep"] = {{"type", "rank-sum"}, {"terms", terms}};
          } else {
            j["rep"] = {{"type", "dense"}, {"entry", r.text}};
          }
        },
        rep_);
    return j;
  }

 private:
  Basis basis_;
  OperatorRep rep_;
  bool symmetric_ = false;
  std::string name_;
};

// ---------------------------------------------------------------- involution

/// X^dagger: the conjugate-transposed coefficient matrix.
inline CoefficientOperator adjoint(const CoefficientOperator& x) {
  if (x.symmetric()) return x;
  const std::string name = x.name() + "^+";
  return std::visit(
      [&](const auto& r) -> CoefficientOperator {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, DiagonalRep>) {
          auto f = r.symbol.fn;
          return CoefficientOperator::diagonal(x.basis(), Symbol{[f](double n) { return std::conj(f(n)); }, "conj(" + r.symbol.text + ")"},
                                               false, name);
        } else if constexpr (std::is_same_v<R, BandedRep>) {
          auto f = r.entry;
          return CoefficientOperator::banded(
              x.basis(), r.bandwidth, [f](double n, double m) { return std::conj(f(m, n)); }, "adjoint(" + r.text + ")", false, name);
        } else if constexpr (std::is_same_v<R, RankSumRep>) {
          std::vector<RankTerm> swapped;
          for (const auto& t : r.terms) swapped.push_back(RankTerm{t.value, t.functional});
          return CoefficientOperator::rank_sum(x.basis(), std::move(swapped), false, name);
        } else {
          auto f = r.entry;
          return CoefficientOperator::dense(
              x.basis(), [f](double n, double m) { return std::conj(f(m, n)); }, "adjoint(" + r.text + ")", false, name);
        }
      },
      x.rep());
}

/// theta_X(xi, eta) = <X xi, eta> = eta^* X_N xi with N the longer truncation.
inline cplx sesq_form(const CoefficientOperator& x, const CoefficientVector& xi, const CoefficientVector& eta) {
  require_same_basis(x.basis(), xi.basis, "sesq_form");
  require_same_basis(xi.basis, eta.basis, "sesq_form");
  const std::size_t n = std::max(xi.size(), eta.size());
  const CVector a = xi.resized(n).coeffs;
  const CVector b = eta.resized(n).coeffs;
  return b.dot(x.truncate(n) * a);  // Eigen's dot conjugates the left operand
}

/// Applies the leading N x N truncation, N = length of v.
inline CoefficientVector apply(const CoefficientOperator& x, const CoefficientVector& v) {
  require_same_basis(x.basis(), v.basis, "apply");
  return {v.basis, x.truncate(v.size()) * v.coeffs};
}

// ---------------------------------------------------------------- infinite vector norms

/// Norm of an infinite coefficient sequence u(mode) in a scale space,
/// computed by partial sums over doubling blocks.
struct SequenceNorm {
  double value = 0.0;
  Trend trend = Trend::open;
  std::size_t terms = 0;
};

/// Memo for sequence norms keyed by (symbol text, space label). Results are
/// identical with or without it.
class NormCache {
 public:
  std::optional<SequenceNorm> find(const std::string& key) const {
    auto it = map_.find(key);
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }
  void put(const std::string& key, SequenceNorm v) { map_[key] = v; }

 private:
  std::map<std::string, SequenceNorm> map_;
};

inline SequenceNorm sequence_norm(const Symbol& u, const ScaleSpace& e, const TruncationConfig& t,
                                  NormCache* cache = nullptr) {
  const std::string key = u.text + "|" + e.label();
  if (cache)
    if (auto hit = cache->find(key)) return *hit;
  SequenceNorm out;
  std::vector<double> path;
  double acc = 0.0;
  std::size_t p = 0;
  bool diverged = false;
  for (std::size_t n : doubling_schedule(t.n0, std::max(t.vector_cap, t.n0))) {
    for (; p < n; ++p) {
      const double mode = mode_of(e.basis(), p);
      const double w = e.weight(mode);
      acc += std::norm(u(mode)) * w * w;
    }
    path.push_back(std::sqrt(acc));
    if (classify_growth(path, 0.0, t.growth_threshold) == Trend::diverged) {
      diverged = true;
      break;
    }
  }
  out.value = path.back();
  out.terms = p;
  if (diverged || !std::isfinite(out.value)) {
    out.trend = Trend::diverged;
    out.value = kInf;
  } else {
    out.trend = classify_growth(path, t.rel_tol, t.growth_threshold);
    if (out.trend != Trend::converged) out.value = kInf;
  }
  if (cache) cache->put(key, out);
  return out;
}

// ---------------------------------------------------------------- continuity

enum class CertMethod { analytic_exact, truncation_stabilized, failed, inconclusive };

inline const char* to_string(CertMethod m) {
  switch (m) {
    case CertMethod::analytic_exact: return "analytic-exact";
    case CertMethod::truncation_stabilized: return "truncation-stabilized";
    case CertMethod::failed: return "failed";
    default: return "inconclusive";
  }
}

/// Evidence that X extends to a bounded map E -> F.
struct ContinuityCertificate {
  std::string operator_name;
  ScaleSpace E;
  ScaleSpace F;
  double norm_bound = kInf;   ///< +inf unless certified
  double lower_bound = 0.0;   ///< truncated SVD value (rank sums) or last estimate
  CertMethod method = CertMethod::inconclusive;
  double witness_n = 0;

  bool certified() const { return method == CertMethod::analytic_exact || method == CertMethod::truncation_stabilized; }
  bool failed() const { return method == CertMethod::failed; }
};

namespace detail {

/// W_F X_N W_E^{-1} on the leading rows x cols block, entries computed as
/// (w_F(i) w_E(j)^{-1}) * (X_ij - shift delta_ij).
inline CMatrix weighted_block(const CoefficientOperator& x, cplx shift, const ScaleSpace& e, const ScaleSpace& f,
                              std::size_t rows, std::size_t cols) {
  CMatrix m = x.truncate(rows, cols);
  const Basis b = x.basis();
  std::vector<double> wf(rows), we_inv(cols);
  for (std::size_t i = 0; i < rows; ++i) wf[i] = std::exp(f.log_weight(mode_of(b, i)));
  for (std::size_t j = 0; j < cols; ++j) we_inv[j] = std::exp(-e.log_weight(mode_of(b, j)));
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i < rows; ++i) {
      auto& v = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (i == j) v = v - shift;
      v = (wf[i] * we_inv[j]) * v;
    }
  return m;
}

}  // namespace detail

inline ContinuityCertificate certify(const CoefficientOperator& x, const ScaleSpace& e, const ScaleSpace& f,
                                     const RunConfig& cfg = {}, NormCache* cache = nullptr) {
  require_same_basis(x.basis(), e.basis(), "certify");
  require_same_basis(e.basis(), f.basis(), "certify");
  const auto& t = cfg.truncation;
  ContinuityCertificate c{x.name(), e, f};

  if (x.is_diagonal()) {
    const auto& a = x.as_diagonal().symbol;
    const auto samples = ModeSamples::build(x.basis(), t);
    auto scan = scan_extrema(
        samples, [&](double n) { return std::log(std::abs(a(n))) + (f.log_weight(n) + (-e.log_weight(n))); }, t.rel_tol,
        t.growth_threshold);
    c.witness_n = scan.witness_n;
    c.lower_bound = scan.sup;
    if (scan.sup_trend == Trend::converged) {
      c.method = CertMethod::analytic_exact;
      c.norm_bound = scan.sup;
    } else {
      c.method = scan.sup_trend == Trend::diverged ? CertMethod::failed : CertMethod::inconclusive;
    }
    return c;
  }

  if (x.is_rank_sum()) {
    const auto& terms = x.as_rank_sum().terms;
    const ScaleSpace e_dual = e.dual();
    double upper = 0.0;
    bool any_diverged = false, any_open = false;
    for (const auto& term : terms) {
      const auto nu = sequence_norm(term.functional, e_dual, t, cache);
      const auto nv = sequence_norm(term.value, f, t, cache);
      any_diverged |= nu.trend == Trend::diverged || nv.trend == Trend::diverged;
      any_open |= nu.trend == Trend::open || nv.trend == Trend::open;
      upper += nu.value * nv.value;
    }
    // lower bound: exact norm of the truncated finite-rank matrix through thin QR factors
    const std::size_t n = t.nmax;
    const auto k = static_cast<Eigen::Index>(terms.size());
    CMatrix U(static_cast<Eigen::Index>(n), k), V(static_cast<Eigen::Index>(n), k);
    for (Eigen::Index s = 0; s < k; ++s)
      for (std::size_t p = 0; p < n; ++p) {
        const double mode = mode_of(x.basis(), p);
        U(static_cast<Eigen::Index>(p), s) = std::exp(-e.log_weight(mode)) * terms[static_cast<std::size_t>(s)].functional(mode);
        V(static_cast<Eigen::Index>(p), s) = std::exp(f.log_weight(mode)) * terms[static_cast<std::size_t>(s)].value(mode);
      }
    if (k > 0) {
      Eigen::HouseholderQR<CMatrix> qu(U), qv(V);
      const CMatrix ru = qu.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
      const CMatrix rv = qv.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
      c.lower_bound = spectral_norm(rv * ru.adjoint());
    }
    c.witness_n = static_cast<double>(t.vector_cap);
    if (any_diverged) {
      c.method = CertMethod::failed;
    } else if (any_open) {
      c.method = CertMethod::inconclusive;
    } else {
      c.method = CertMethod::analytic_exact;
      c.norm_bound = upper;
    }
    return c;
  }

  // banded / dense: largest singular value of the weighted square truncation
  std::vector<double> path;
  Trend trend = Trend::open;
  for (std::size_t n : doubling_schedule(t.n0, t.dense_nmax)) {
    const CMatrix m = detail::weighted_block(x, cplx{}, e, f, n, n);
    path.push_back(spectral_norm(m));
    c.witness_n = static_cast<double>(n);
    trend = classify_growth(path, t.rel_tol, t.growth_threshold);
    if (trend != Trend::open) break;
  }
  c.lower_bound = path.back();
  if (trend == Trend::converged) {
    c.method = CertMethod::truncation_stabilized;
    c.norm_bound = path.back();
  } else {
    c.method = trend == Trend::diverged ? CertMethod::failed : CertMethod::inconclusive;
  }
  return c;
}

// ---------------------------------------------------------------- framework product

namespace detail {

inline double min_mode(Basis b) { return b == Basis::fourier_torus ? -kInf : 0.0; }

/// sum_k X(n,k) Y(k,m) over the modes k reachable through the bands.
inline cplx banded_inner(const CoefficientOperator& x, const CoefficientOperator& y, double n, double m, int bx, int by) {
  const double lo = std::max({n - bx, m - by, min_mode(x.basis())});
  const double hi = std::min(n + bx, m + by);
  cplx acc{};
  for (double k = lo; k <= hi; k += 1.0) acc += x.entry_modes(n, k) * y.entry_modes(k, m);
  return acc;
}

/// Partial sums of sum_k f(k) over positions, doubling up to the cap.
inline cplx series_over_positions(Basis b, const std::function<cplx(double)>& f, std::size_t cap) {
  cplx acc{};
  for (std::size_t p = 0; p < cap; ++p) acc += f(mode_of(b, p));
  return acc;
}

}  // namespace detail

struct ProductResult {
  CoefficientOperator product;
  std::vector<std::array<ScaleSpace, 3>> triples;  ///< admissible (E, F, G)
};

/// X . Y defined through some E, F, G in the family with Y in C(E,F) and X in C(F,G).
///
/// Throws PreconditionError("product undefined in family") when no triple exists.
inline ProductResult framework_product(const CoefficientOperator& x, const CoefficientOperator& y, const ScaleFamily& fam,
                                       const RunConfig& cfg = {}) {
  require_same_basis(x.basis(), y.basis(), "framework_product");
  require_same_basis(x.basis(), fam.basis(), "framework_product");
  if (!fam.closed_under_duality()) throw PreconditionError("framework_product requires a family closed under duality");
  const auto& sp = fam.spaces();
  NormCache cache;
  std::map<std::pair<std::size_t, std::size_t>, bool> x_ok;
  std::vector<std::array<ScaleSpace, 3>> triples;
  for (std::size_t ie = 0; ie < sp.size(); ++ie)
    for (std::size_t jf = 0; jf < sp.size(); ++jf) {
      if (!certify(y, sp[ie], sp[jf], cfg, &cache).certified()) continue;
      for (std::size_t kg = 0; kg < sp.size(); ++kg) {
        auto key = std::make_pair(jf, kg);
        auto it = x_ok.find(key);
        if (it == x_ok.end()) it = x_ok.emplace(key, certify(x, sp[jf], sp[kg], cfg, &cache).certified()).first;
        if (it->second) triples.push_back({sp[ie], sp[jf], sp[kg]});
      }
    }
  if (triples.empty()) throw PreconditionError("product undefined in family: no E, F, G with Y in C(E,F) and X in C(F,G)");

  const Basis b = x.basis();
  const std::string name = x.name() + "." + y.name();
  const int bx = x.bandwidth(), by = y.bandwidth();
  const std::size_t cap = cfg.truncation.vector_cap;

  auto make = [&]() -> CoefficientOperator {
    if (x.is_diagonal() && y.is_diagonal()) {
      auto fx = x.as_diagonal().symbol, fy = y.as_diagonal().symbol;
      return CoefficientOperator::diagonal(
          b, Symbol{[fx, fy](double n) { return fx(n) * fy(n); }, "(" + fx.text + ")*(" + fy.text + ")"}, false, name);
    }
    if (bx >= 0 && by >= 0) {
      auto xc = x, yc = y;
      return CoefficientOperator::banded(
          b, bx + by, [xc, yc, bx, by](double n, double m) { return detail::banded_inner(xc, yc, n, m, bx, by); },
          "product", false, name);
    }
    if (x.is_rank_sum() && by >= 0) {
      // (sum <., u> v) Y = sum <., Y^* u> v
      std::vector<RankTerm> terms;
      auto yc = y;
      for (const auto& t : x.as_rank_sum().terms) {
        auto u = t.functional;
        const double lo = detail::min_mode(b);
        Symbol yu{[yc, u, by, lo](double m) {
                    cplx acc{};
                    for (double k = std::max(m - by, lo); k <= m + by; k += 1.0) acc += std::conj(yc.entry_modes(k, m)) * u(k);
                    return acc;
                  },
                  "adjoint(" + y.name() + ")(" + u.text + ")"};
        terms.push_back({yu, t.value});
      }
      return CoefficientOperator::rank_sum(b, std::move(terms), false, name);
    }
    if (bx >= 0 && y.is_rank_sum()) {
      // X (sum <., u> v) = sum <., u> X v
      std::vector<RankTerm> terms;
      auto xc = x;
      for (const auto& t : y.as_rank_sum().terms) {
        auto v = t.value;
        const double lo = detail::min_mode(b);
        Symbol xv{[xc, v, bx, lo](double n) {
                    cplx acc{};
                    for (double k = std::max(n - bx, lo); k <= n + bx; k += 1.0) acc += xc.entry_modes(n, k) * v(k);
                    return acc;
                  },
                  x.name() + "(" + v.text + ")"};
        terms.push_back({t.functional, xv});
      }
      return CoefficientOperator::rank_sum(b, std::move(terms), false, name);
    }
    if (x.is_rank_sum() && y.is_rank_sum()) {
      // sum_{s,t} <v_t, u_s> <., u_t> v_s
      std::vector<RankTerm> terms;
      for (const auto& ts : x.as_rank_sum().terms)
        for (const auto& tt : y.as_rank_sum().terms) {
          auto vt = tt.value, us = ts.functional;
          const cplx c = detail::series_over_positions(b, [&](double k) { return vt(k) * std::conj(us(k)); }, cap);
          auto vs = ts.value;
          terms.push_back({tt.functional, Symbol{[c, vs](double n) { return c * vs(n); }, format_complex(c) + "*(" + vs.text + ")"}});
        }
      return CoefficientOperator::rank_sum(b, std::move(terms), false, name);
    }
    // general case: inner sums cut at the dense prefix length
    auto xc = x, yc = y;
    const std::size_t inner = cfg.truncation.nmax;
    return CoefficientOperator::dense(
        b,
        [xc, yc, inner, b](double n, double m) {
          return detail::series_over_positions(b, [&](double k) { return xc.entry_modes(n, k) * yc.entry_modes(k, m); }, inner);
        },
        "product", false, name);
  };
  return ProductResult{make(), std::move(triples)};
}

// ---------------------------------------------------------------- spec files

/// Operator spec: {basis, rep: {type, ...}, symmetric, name?}.
///   diagonal:  {"type": "diagonal", "symbol": "n+1"}
///   banded:    {"type": "banded", "diagonals": {"1": "sqrt((n+1)/2)", "-1": "sqrt(n/2)"}}
///              offset d holds the entries (n + d, n) as an expression in the column mode n
///   rank-sum:  {"type": "rank-sum", "terms": [{"functional": "1", "value": "1"}]}
///   dense:     {"type": "dense", "entry": "expression in n (row) and m (column)"}
inline CoefficientOperator operator_from_json(const nlohmann::json& j) {
  try {
    const Basis b = basis_from_string(j.at("basis").get<std::string>());
    const bool sym = j.value("symmetric", false);
    const auto& rep = j.at("rep");
    const auto type = rep.at("type").get<std::string>();
    std::string name = j.value("name", std::string());
    if (type == "diagonal") {
      auto s = Symbol::parse(rep.at("symbol").get<std::string>());
      if (name.empty()) name = "diag(" + s.text + ")";
      return CoefficientOperator::diagonal(b, std::move(s), sym, name);
    }
    if (type == "banded") {
      std::vector<std::pair<int, std::shared_ptr<const Expr>>> diags;
      int bw = 0;
      std::string text;
      for (auto it = rep.at("diagonals").begin(); it != rep.at("diagonals").end(); ++it) {
        const int d = std::stoi(it.key());
        diags.emplace_back(d, std::make_shared<const Expr>(Expr::parse(it.value().get<std::string>(), {"n"})));
        bw = std::max(bw, std::abs(d));
        text += (text.empty() ? "" : "; ") + it.key() + ": " + it.value().get<std::string>();
      }
      auto f = [diags](double n, double m) {
        for (const auto& [d, e] : diags)
          if (n - m == static_cast<double>(d)) return (*e)(m);
        return cplx{};
      };
      return CoefficientOperator::banded(b, bw, f, text, sym, name.empty() ? "banded" : name);
    }
    if (type == "rank-sum") {
      std::vector<RankTerm> terms;
      for (const auto& t : rep.at("terms"))
        terms.push_back({Symbol::parse(t.at("functional").get<std::string>()), Symbol::parse(t.at("value").get<std::string>())});
      return CoefficientOperator::rank_sum(b, std::move(terms), sym, name.empty() ? "rank-sum" : name);
    }
    if (type == "dense") {
      const auto text = rep.at("entry").get<std::string>();
      auto e = std::make_shared<const Expr>(Expr::parse(text, {"n", "m"}));
      return CoefficientOperator::dense(b, [e](double n, double m) { return (*e)(n, m); }, text, sym,
                                        name.empty() ? "dense" : name);
    }
    throw ParseError("unknown operator rep type '" + type + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("operator spec: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw ParseError("operator spec: band offsets must be integers");
  }
}

}  // namespace rigspec
