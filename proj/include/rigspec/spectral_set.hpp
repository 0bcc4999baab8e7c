#pragma once

// Analytic spectrum descriptors with a decidable membership predicate.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rigspec/numeric.hpp"
#include "rigspec/scale.hpp"

namespace rigspec {

/// Closed real interval [lo, hi]; either end may be infinite.
struct RealInterval {
  double lo = 0.0;
  double hi = 0.0;
};

/// A closed subset of C built from real intervals, isolated points, the
/// closure of a symbol sequence {a_n}, or the whole plane.
struct SpectralSet {
  std::string description;
  bool whole_plane = false;
  std::vector<RealInterval> intervals;
  std::vector<cplx> points;
  std::optional<Symbol> sequence;   ///< a_n, n >= 0 (hermite) or n in Z (torus modes)
  Basis sequence_basis = Basis::hermite;
  std::size_t sequence_terms = 4096;

  static SpectralSet plane(std::string desc = "all of C") {
    SpectralSet s;
    s.description = std::move(desc);
    s.whole_plane = true;
    return s;
  }

  double distance(cplx z) const {
    if (whole_plane) return 0.0;
    double d = kInf;
    for (const auto& iv : intervals) {
      const double x = std::clamp(z.real(), iv.lo, iv.hi);
      d = std::min(d, std::abs(z - cplx(x, 0.0)));
    }
    for (const auto& p : points) d = std::min(d, std::abs(z - p));
    if (sequence) {
      for (std::size_t k = 0; k < sequence_terms; ++k) d = std::min(d, std::abs(z - (*sequence)(mode_of(sequence_basis, k))));
    }
    return d;
  }

  bool contains(cplx z, double tol) const { return distance(z) <= tol; }

  nlohmann::json to_json() const {
    nlohmann::json iv = nlohmann::json::array();
    for (const auto& i : intervals) iv.push_back({format_double(i.lo), format_double(i.hi)});
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : points) pts.push_back(format_complex(p));
    nlohmann::json j{{"description", description}, {"whole_plane", whole_plane}, {"intervals", iv}, {"points", pts}};
    if (sequence) j["sequence"] = {{"symbol", sequence->text}, {"terms", sequence_terms}};
    return j;
  }
};

}  // namespace rigspec
