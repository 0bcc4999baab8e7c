#pragma once

// Scale spaces (interspaces) realised as weighted l2 sequence spaces.
//
// A space is a weight law plus a signed rational index k. Weights are kept in
// log form: log w_k(n) for k > 0 comes from the law, log w_0 = 0 and
// log w_{-k} = -log w_k, so duality is an exact sign flip.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rigspec/config.hpp"
#include "rigspec/error.hpp"
#include "rigspec/expr.hpp"
#include "rigspec/numeric.hpp"

namespace rigspec {

// ---------------------------------------------------------------- bases

enum class Basis { hermite, fourier_torus, interval_l2 };

inline const char* to_string(Basis b) {
  switch (b) {
    case Basis::hermite: return "hermite";
    case Basis::fourier_torus: return "fourier-torus";
    default: return "interval-l2";
  }
}

inline Basis basis_from_string(const std::string& s) {
  if (s == "hermite") return Basis::hermite;
  if (s == "fourier-torus") return Basis::fourier_torus;
  if (s == "interval-l2") return Basis::interval_l2;
  throw ParseError("unknown basis '" + s + "'");
}

/// Physical mode number stored at position `pos`. Torus modes are
/// enumerated 0, 1, -1, 2, -2, ... so every leading block is contiguous.
inline double mode_of(Basis b, std::size_t pos) {
  if (b != Basis::fourier_torus) return static_cast<double>(pos);
  if (pos == 0) return 0.0;
  if (pos % 2 == 1) return static_cast<double>((pos + 1) / 2);
  return -static_cast<double>(pos / 2);
}

inline void require_same_basis(Basis a, Basis b, const char* what) {
  if (a != b) throw BasisMismatch(std::string(what) + ": basis " + to_string(a) + " vs " + to_string(b));
}

// ---------------------------------------------------------------- symbols

/// A pure function of one mode number with a printable description.
struct Symbol {
  std::function<cplx(double)> fn;
  std::string text;

  cplx operator()(double n) const { return fn(n); }

  static Symbol parse(const std::string& expr, const std::string& var = "n") {
    auto e = std::make_shared<const Expr>(Expr::parse(expr, {var}));
    return Symbol{[e](double n) { return (*e)(n); }, expr};
  }

  static Symbol constant(cplx c) {
    return Symbol{[c](double) { return c; }, format_complex(c)};
  }
};

// ---------------------------------------------------------------- rational index

/// Signed rational scale index k = num/den, den > 0, reduced.
struct Index {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Index() = default;
  Index(std::int64_t n) : num(n), den(1) {}  // NOLINT: integers are indices
  Index(std::int64_t n, std::int64_t d) : num(n), den(d) {
    if (d == 0) throw PreconditionError("scale index with zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const auto g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  Index operator-() const { return Index(-num, den); }
  friend bool operator==(const Index&, const Index&) = default;
  friend bool operator<(const Index& a, const Index& b) { return a.num * b.den < b.num * a.den; }
  friend bool operator>(const Index& a, const Index& b) { return b < a; }
  friend bool operator<=(const Index& a, const Index& b) { return !(b < a); }
  friend bool operator>=(const Index& a, const Index& b) { return !(a < b); }

  std::string str() const { return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den); }

  static Index from_json(const nlohmann::json& j) {
    if (j.is_number_integer()) return Index(j.get<std::int64_t>());
    if (j.is_number()) {
      const double x = j.get<double>();
      for (std::int64_t d = 1; d <= 1000; ++d) {
        const double n = std::round(x * static_cast<double>(d));
        if (std::abs(n / static_cast<double>(d) - x) < 1e-12) return Index(static_cast<std::int64_t>(n), d);
      }
      throw ParseError("scale index is not a rational with denominator <= 1000");
    }
    if (j.is_string()) {
      const auto s = j.get<std::string>();
      const auto slash = s.find('/');
      try {
        if (slash == std::string::npos) return Index(std::stoll(s));
        return Index(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
      } catch (const std::logic_error&) {
        throw ParseError("malformed scale index '" + s + "'");
      }
    }
    throw ParseError("scale index must be a number or \"p/q\" string");
  }

  nlohmann::json to_json() const {
    if (den == 1) return num;
    return str();
  }
};

// ---------------------------------------------------------------- spaces

enum class WeightLaw {
  hilbert_scale,     ///< (1 + a_n^{2k})^{1/2} for a generator a_n >= 1; w_0 = 1
  sobolev_torus,     ///< (1 + n^2)^{k/2}
  polynomial,        ///< (1 + |n|)^k, the s_k sequence model
  exponential_root,  ///< exp(k sqrt|n|), surrogate for the extreme spaces
  envelope,          ///< pointwise max (or min) of member weights
};

class ScaleSpace {
 public:
  static ScaleSpace hilbert_scale(Basis b, Index k, Symbol generator) {
    ScaleSpace s(b, WeightLaw::hilbert_scale, k);
    s.generator_ = std::make_shared<const Symbol>(std::move(generator));
    s.label_ = "H_" + k.str() + "[" + s.generator_->text + "]";
    return s;
  }

  static ScaleSpace sobolev_torus(Index k) {
    ScaleSpace s(Basis::fourier_torus, WeightLaw::sobolev_torus, k);
    s.label_ = "W^{" + k.str() + ",2}";
    return s;
  }

  static ScaleSpace polynomial(Basis b, Index m) {
    ScaleSpace s(b, WeightLaw::polynomial, m);
    s.label_ = "s_" + m.str();
    return s;
  }

  static ScaleSpace exponential_root(Basis b, Index k) {
    ScaleSpace s(b, WeightLaw::exponential_root, k);
    s.label_ = "e^{" + k.str() + "sqrt(n)}";
    return s;
  }

  /// Intersection E ∩ F with the projective norm, weight max(w_E, w_F).
  static ScaleSpace intersection(const ScaleSpace& e, const ScaleSpace& f) {
    require_same_basis(e.basis_, f.basis_, "intersection");
    if (e.comparable(f)) return e.index_ >= f.index_ ? e : f;
    return envelope_of(e, f, true);
  }

  /// Sum E + F with the inductive norm, weight min(w_E, w_F).
  static ScaleSpace sum(const ScaleSpace& e, const ScaleSpace& f) {
    require_same_basis(e.basis_, f.basis_, "sum");
    if (e.comparable(f)) return e.index_ <= f.index_ ? e : f;
    return envelope_of(e, f, false);
  }

  Basis basis() const noexcept { return basis_; }
  WeightLaw law() const noexcept { return law_; }
  const Index& index() const noexcept { return index_; }
  const std::string& label() const noexcept { return label_; }
  const Symbol* generator() const noexcept { return generator_.get(); }

  double log_weight(double mode) const {
    if (law_ == WeightLaw::envelope) {
      double best = upper_ ? -kInf : kInf;
      for (const auto& m : *members_) {
        const double lw = m.log_weight(mode);
        best = upper_ ? std::max(best, lw) : std::min(best, lw);
      }
      return best;
    }
    if (index_.num == 0) return 0.0;
    if (index_.num < 0) return -positive_log_weight(mode, -index_.value());
    return positive_log_weight(mode, index_.value());
  }

  double weight(double mode) const { return std::exp(log_weight(mode)); }
  double weight_at(std::size_t pos) const { return weight(mode_of(basis_, pos)); }

  ScaleSpace dual() const {
    ScaleSpace d = *this;
    if (law_ == WeightLaw::envelope) {
      auto ms = std::make_shared<std::vector<ScaleSpace>>();
      for (const auto& m : *members_) ms->push_back(m.dual());
      d.members_ = ms;
      d.upper_ = !upper_;
      d.label_ = "(" + label_ + ")^x";
      return d;
    }
    d.index_ = -index_;
    d.label_ = relabel(d.index_);
    return d;
  }

  friend bool operator==(const ScaleSpace& a, const ScaleSpace& b) {
    if (a.basis_ != b.basis_ || a.law_ != b.law_) return false;
    if (a.law_ == WeightLaw::envelope) return a.upper_ == b.upper_ && *a.members_ == *b.members_;
    if (a.index_ != b.index_) return false;
    if (a.law_ == WeightLaw::hilbert_scale) return a.generator_->text == b.generator_->text;
    return true;
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"basis", to_string(basis_)}, {"label", label_}};
    switch (law_) {
      case WeightLaw::hilbert_scale: j["law"] = "hilbert-scale"; j["generator"] = generator_->text; break;
      case WeightLaw::sobolev_torus: j["law"] = "sobolev-torus"; break;
      case WeightLaw::polynomial: j["law"] = "polynomial"; break;
      case WeightLaw::exponential_root: j["law"] = "exponential-root"; break;
      case WeightLaw::envelope: j["law"] = upper_ ? "intersection" : "sum"; break;
    }
    if (law_ != WeightLaw::envelope) j["index"] = index_.to_json();
    return j;
  }

 private:
  ScaleSpace(Basis b, WeightLaw law, Index k) : basis_(b), law_(law), index_(k) {}

  static ScaleSpace envelope_of(const ScaleSpace& e, const ScaleSpace& f, bool upper) {
    ScaleSpace s(e.basis_, WeightLaw::envelope, Index(0));
    s.members_ = std::make_shared<const std::vector<ScaleSpace>>(std::vector<ScaleSpace>{e, f});
    s.upper_ = upper;
    s.label_ = e.label_ + (upper ? " ∩ " : " + ") + f.label_;
    return s;
  }

  bool comparable(const ScaleSpace& o) const {
    if (law_ == WeightLaw::envelope || o.law_ == WeightLaw::envelope || law_ != o.law_) return false;
    if (law_ == WeightLaw::hilbert_scale) return generator_->text == o.generator_->text;
    return true;
  }

  std::string relabel(const Index& k) const {
    switch (law_) {
      case WeightLaw::hilbert_scale: return "H_" + k.str() + "[" + generator_->text + "]";
      case WeightLaw::sobolev_torus: return "W^{" + k.str() + ",2}";
      case WeightLaw::polynomial: return "s_" + k.str();
      case WeightLaw::exponential_root: return "e^{" + k.str() + "sqrt(n)}";
      default: return label_;
    }
  }

  double positive_log_weight(double mode, double k) const {
    const double n = std::abs(mode);
    switch (law_) {
      case WeightLaw::hilbert_scale: {
        const double a = std::abs((*generator_)(mode));
        const double t = 2.0 * k * std::log(a);
        // 0.5 * log(1 + e^t), stable for large t
        return t > 30.0 ? 0.5 * (t + std::log1p(std::exp(-t))) : 0.5 * std::log1p(std::exp(t));
      }
      case WeightLaw::sobolev_torus: return 0.5 * k * std::log1p(n * n);
      case WeightLaw::polynomial: return k * std::log1p(n);
      case WeightLaw::exponential_root: return k * std::sqrt(n);
      default: return 0.0;
    }
  }

  Basis basis_;
  WeightLaw law_;
  Index index_;
  std::shared_ptr<const Symbol> generator_;
  std::shared_ptr<const std::vector<ScaleSpace>> members_;
  bool upper_ = true;
  std::string label_;
};

inline ScaleSpace dual_space(const ScaleSpace& e) { return e.dual(); }

// ---------------------------------------------------------------- vectors

/// Leading N coefficients of an infinite sequence; entries past N are zero.
struct CoefficientVector {
  Basis basis = Basis::hermite;
  CVector coeffs;

  CoefficientVector() = default;
  CoefficientVector(Basis b, CVector c) : basis(b), coeffs(std::move(c)) {}

  std::size_t size() const { return static_cast<std::size_t>(coeffs.size()); }

  static CoefficientVector unit(Basis b, std::size_t pos, std::size_t n) {
    CVector c = CVector::Zero(static_cast<Eigen::Index>(std::max(n, pos + 1)));
    c(static_cast<Eigen::Index>(pos)) = 1.0;
    return {b, c};
  }

  /// Zero-padded (or cut) copy of length n.
  CoefficientVector resized(std::size_t n) const {
    CVector c = CVector::Zero(static_cast<Eigen::Index>(n));
    const auto m = static_cast<Eigen::Index>(std::min(n, size()));
    c.head(m) = coeffs.head(m);
    return {basis, c};
  }
};

/// Diagonal of weights w_E at positions 0..n-1.
inline RVector weight_vector(const ScaleSpace& e, std::size_t n) {
  RVector w(static_cast<Eigen::Index>(n));
  for (std::size_t p = 0; p < n; ++p) w(static_cast<Eigen::Index>(p)) = e.weight_at(p);
  return w;
}

inline double norm(const CoefficientVector& v, const ScaleSpace& e) {
  require_same_basis(v.basis, e.basis(), "norm");
  double acc = 0.0;
  for (std::size_t p = 0; p < v.size(); ++p) {
    const double w = e.weight_at(p);
    acc += std::norm(v.coeffs(static_cast<Eigen::Index>(p))) * w * w;
  }
  return std::sqrt(acc);
}

// ---------------------------------------------------------------- mode sampling

/// Sampled mode positions for sup/inf scans over the whole sequence: a dense
/// prefix [0, nmax) followed by geometric tail positions nmax*2^t and
/// nmax*2^t + 1 (the latter covers the negative torus mode).
struct ModeSamples {
  Basis basis = Basis::hermite;
  std::vector<double> modes;
  std::vector<std::size_t> checkpoint_end;  ///< samples consumed at each checkpoint
  std::vector<double> checkpoint_n;         ///< truncation represented by each checkpoint

  static ModeSamples build(Basis b, const TruncationConfig& t) {
    ModeSamples s;
    s.basis = b;
    s.modes.reserve(t.nmax + 2 * static_cast<std::size_t>(t.tail_doublings));
    for (std::size_t p = 0; p < t.nmax; ++p) s.modes.push_back(mode_of(b, p));
    for (std::size_t n : doubling_schedule(t.n0, t.nmax)) {
      s.checkpoint_end.push_back(n);
      s.checkpoint_n.push_back(static_cast<double>(n));
    }
    double p = static_cast<double>(t.nmax);
    for (int k = 0; k < t.tail_doublings; ++k) {
      p *= 2.0;
      s.modes.push_back(tail_mode(b, p));
      s.modes.push_back(tail_mode(b, p + 1.0));
      s.checkpoint_end.push_back(s.modes.size());
      s.checkpoint_n.push_back(p + 2.0);
    }
    return s;
  }

 private:
  static double tail_mode(Basis b, double pos) {
    if (b != Basis::fourier_torus) return pos;
    const double q = std::floor(pos / 2.0);
    return std::fmod(pos, 2.0) == 1.0 ? q + 1.0 : -q;
  }
};

/// Sup and inf of exp(f) over sampled modes with trends along checkpoints.
struct ExtremaScan {
  double sup = 0.0;
  double inf = kInf;
  Trend sup_trend = Trend::open;
  Trend inf_trend = Trend::open;  ///< diverged means inf -> 0 (reciprocal grows)
  double witness_n = 0.0;
  std::vector<double> sup_path;
  std::vector<double> inf_path;
};

inline ExtremaScan scan_extrema(const ModeSamples& s, std::span<const double> log_values, double rel_tol,
                                double growth) {
  ExtremaScan r;
  double lmax = -kInf, lmin = kInf;
  std::size_t i = 0;
  std::vector<double> recip;
  for (std::size_t c = 0; c < s.checkpoint_end.size(); ++c) {
    for (; i < s.checkpoint_end[c]; ++i) {
      const double v = log_values[i];
      if (std::isnan(v)) continue;
      lmax = std::max(lmax, v);
      lmin = std::min(lmin, v);
    }
    r.sup_path.push_back(std::exp(lmax));
    r.inf_path.push_back(std::exp(lmin));
    recip.push_back(std::exp(-lmin));
  }
  r.sup = r.sup_path.back();
  r.inf = r.inf_path.back();
  r.witness_n = s.checkpoint_n.back();
  r.sup_trend = classify_growth(r.sup_path, rel_tol, growth);
  r.inf_trend = r.inf == 0.0 ? Trend::diverged : classify_growth(recip, rel_tol, growth);
  return r;
}

template <class LogF>
ExtremaScan scan_extrema(const ModeSamples& s, LogF&& f, double rel_tol, double growth) {
  std::vector<double> lv(s.modes.size());
  for (std::size_t i = 0; i < lv.size(); ++i) lv[i] = f(s.modes[i]);
  return scan_extrema(s, std::span<const double>(lv), rel_tol, growth);
}

/// sup_n w_F(n)/w_E(n); +inf when E does not embed in F (or cannot be shown to).
inline double embedding_norm(const ScaleSpace& e, const ScaleSpace& f, const TruncationConfig& t = {}) {
  require_same_basis(e.basis(), f.basis(), "embedding_norm");
  if (e == f) return 1.0;
  const auto samples = ModeSamples::build(e.basis(), t);
  auto scan = scan_extrema(
      samples, [&](double n) { return f.log_weight(n) + (-e.log_weight(n)); }, t.rel_tol, t.growth_threshold);
  if (scan.sup_trend != Trend::converged) return kInf;
  return scan.sup;
}

inline bool embeds(const ScaleSpace& e, const ScaleSpace& f, const TruncationConfig& t = {}) {
  return std::isfinite(embedding_norm(e, f, t));
}

// ---------------------------------------------------------------- families

/// Family of interspaces on one basis, ordered from finest to coarsest.
class ScaleFamily {
 public:
  ScaleFamily() = default;
  ScaleFamily(Basis b, std::vector<ScaleSpace> spaces, nlohmann::json generator_spec = {})
      : basis_(b), spaces_(std::move(spaces)), generator_spec_(std::move(generator_spec)) {
    for (const auto& s : spaces_) require_same_basis(b, s.basis(), "ScaleFamily");
    std::stable_sort(spaces_.begin(), spaces_.end(),
                     [](const ScaleSpace& a, const ScaleSpace& c) { return a.index() > c.index(); });
  }

  static ScaleFamily hilbert_chain(Basis b, const std::string& generator, std::vector<Index> ks) {
    auto sym = Symbol::parse(generator);
    std::vector<ScaleSpace> sp;
    for (auto k : ks) sp.push_back(ScaleSpace::hilbert_scale(b, k, sym));
    return ScaleFamily(b, std::move(sp), {{"type", "diagonal"}, {"symbol", generator}});
  }

  static ScaleFamily hilbert_chain(Basis b, const std::string& generator, int kmin, int kmax) {
    return hilbert_chain(b, generator, integer_range(kmin, kmax));
  }

  static ScaleFamily sobolev_chain(int kmax) {
    std::vector<ScaleSpace> sp;
    for (auto k : integer_range(-kmax, kmax)) sp.push_back(ScaleSpace::sobolev_torus(k));
    return ScaleFamily(Basis::fourier_torus, std::move(sp), {{"type", "sobolev-torus"}});
  }

  static ScaleFamily polynomial_chain(Basis b, int mmax) {
    std::vector<ScaleSpace> sp;
    for (auto m : integer_range(-mmax, mmax)) sp.push_back(ScaleSpace::polynomial(b, m));
    return ScaleFamily(b, std::move(sp), {{"type", "polynomial"}});
  }

  Basis basis() const noexcept { return basis_; }
  const std::vector<ScaleSpace>& spaces() const noexcept { return spaces_; }
  std::size_t size() const noexcept { return spaces_.size(); }
  bool empty() const noexcept { return spaces_.empty(); }

  bool closed_under_duality() const {
    return std::all_of(spaces_.begin(), spaces_.end(), [&](const ScaleSpace& s) { return contains(s.dual()); });
  }

  bool contains(const ScaleSpace& s) const {
    return std::any_of(spaces_.begin(), spaces_.end(), [&](const ScaleSpace& t) { return t == s; });
  }

  /// Finest space of the family (the model of the smallest space D).
  const ScaleSpace& finest() const {
    if (spaces_.empty()) throw PreconditionError("empty scale family");
    return spaces_.front();
  }

  /// Coarsest space of the family (the model of D^x).
  const ScaleSpace& coarsest() const {
    if (spaces_.empty()) throw PreconditionError("empty scale family");
    return spaces_.back();
  }

  ScaleFamily with(std::vector<ScaleSpace> extra) const {
    auto sp = spaces_;
    for (auto& e : extra)
      if (!contains(e)) sp.push_back(std::move(e));
    auto f = ScaleFamily(basis_, std::move(sp), generator_spec_);
    return f;
  }

  nlohmann::json to_json() const {
    nlohmann::json idx = nlohmann::json::array();
    bool plain = !generator_spec_.is_null();
    for (const auto& s : spaces_) {
      if (s.law() == WeightLaw::envelope) plain = false;
      idx.push_back(s.index().to_json());
    }
    nlohmann::json j{{"basis", to_string(basis_)}, {"closed_under_duality", closed_under_duality()}};
    if (plain) {
      j["indices"] = idx;
      j["generator"] = generator_spec_;
    } else {
      nlohmann::json sp = nlohmann::json::array();
      for (const auto& s : spaces_) sp.push_back(s.to_json());
      j["spaces"] = sp;
    }
    return j;
  }

  static ScaleFamily from_json(const nlohmann::json& j) {
    try {
      const Basis b = basis_from_string(j.at("basis").get<std::string>());
      std::vector<Index> ks;
      for (const auto& k : j.at("indices")) ks.push_back(Index::from_json(k));
      const auto& g = j.at("generator");
      const auto type = g.at("type").get<std::string>();
      std::vector<ScaleSpace> sp;
      if (type == "diagonal") {
        return hilbert_chain(b, g.at("symbol").get<std::string>(), ks);
      } else if (type == "sobolev-torus") {
        if (b != Basis::fourier_torus) throw ParseError("sobolev-torus generator requires basis fourier-torus");
        for (auto k : ks) sp.push_back(ScaleSpace::sobolev_torus(k));
      } else if (type == "polynomial") {
        for (auto k : ks) sp.push_back(ScaleSpace::polynomial(b, k));
      } else if (type == "exponential-root") {
        for (auto k : ks) sp.push_back(ScaleSpace::exponential_root(b, k));
      } else {
        throw ParseError("unknown family generator type '" + type + "'");
      }
      return ScaleFamily(b, std::move(sp), g);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("family spec: ") + e.what());
    }
  }

 private:
  static std::vector<Index> integer_range(int lo, int hi) {
    std::vector<Index> v;
    for (int k = lo; k <= hi; ++k) v.emplace_back(k);
    return v;
  }

  Basis basis_ = Basis::hermite;
  std::vector<ScaleSpace> spaces_;
  nlohmann::json generator_spec_;
};

}  // namespace rigspec
