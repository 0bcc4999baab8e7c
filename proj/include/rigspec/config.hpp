#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include <json.hpp>

#include "rigspec/error.hpp"

namespace rigspec {

/// Truncation schedule shared by every finite-section computation.
struct TruncationConfig {
  std::size_t n0 = 32;             ///< first truncation of a doubling schedule
  std::size_t nmax = 4096;         ///< dense prefix of analytic (diagonal, vector) scans
  std::size_t dense_nmax = 512;    ///< cap for SVD-based finite sections
  std::size_t n_work = 256;        ///< working truncation for solves and identity checks
  double rel_tol = 1e-3;           ///< stabilization tolerance between doublings
  double growth_threshold = 1.5;   ///< divergence when an estimate grows this much over three doublings
  int tail_doublings = 30;         ///< geometric tail samples past nmax (positions up to nmax * 2^k)
  std::size_t vector_cap = std::size_t{1} << 20;  ///< partial-sum cap for infinite vector norms
};

struct ToleranceConfig {
  double solve_tol = 1e-10;
  double series_tol = 1e-10;
  double id_tol = 1e-11;
  double eq_tol = 1e-10;
  double ge_tol = 1e-6;
  double defect_eps = 1e-8;
  double quad_tol = 1e-8;
  double eigen_tol = 1e-10;  ///< |e^{i lambda} - alpha| below this marks a momentum eigenvalue
};

struct GridSpec {
  double re0 = -1.0, re1 = 1.0;
  double im0 = -1.0, im1 = 1.0;
  std::size_t n_re = 21, n_im = 21;

  void validate() const {
    if (n_re < 2 || n_im < 2) throw PreconditionError("grid needs at least two points per axis");
  }
};

struct RunConfig {
  TruncationConfig truncation;
  ToleranceConfig tolerances;
  GridSpec grid;
  std::string output_dir = ".";
  std::uint64_t seed = 20240611;
  std::size_t equivalence_probes = 64;
  bool duality_check = true;

  void validate() const {
    const auto& t = truncation;
    if (t.n0 == 0 || t.n0 > t.nmax) throw PreconditionError("truncation requires 0 < n0 <= nmax");
    if (t.dense_nmax < t.n0) throw PreconditionError("truncation requires n0 <= dense_nmax");
    if (!(t.rel_tol > 0) || !(t.growth_threshold > 1.0)) throw PreconditionError("rel_tol > 0 and growth_threshold > 1 required");
    const auto& q = tolerances;
    for (double v : {q.solve_tol, q.series_tol, q.id_tol, q.eq_tol, q.ge_tol, q.defect_eps, q.quad_tol, q.eigen_tol})
      if (!(v > 0)) throw PreconditionError("all tolerances must be positive");
    grid.validate();
  }
};

inline void to_json(nlohmann::json& j, const RunConfig& c) {
  j = nlohmann::json{
      {"truncation",
       {{"n0", c.truncation.n0},
        {"nmax", c.truncation.nmax},
        {"dense_nmax", c.truncation.dense_nmax},
        {"n_work", c.truncation.n_work},
        {"rel_tol", c.truncation.rel_tol},
        {"growth_threshold", c.truncation.growth_threshold},
        {"tail_doublings", c.truncation.tail_doublings},
        {"vector_cap", c.truncation.vector_cap}}},
      {"tolerances",
       {{"solve_tol", c.tolerances.solve_tol},
        {"series_tol", c.tolerances.series_tol},
        {"id_tol", c.tolerances.id_tol},
        {"eq_tol", c.tolerances.eq_tol},
        {"ge_tol", c.tolerances.ge_tol},
        {"defect_eps", c.tolerances.defect_eps},
        {"quad_tol", c.tolerances.quad_tol},
        {"eigen_tol", c.tolerances.eigen_tol}}},
      {"grid",
       {{"re0", c.grid.re0},
        {"re1", c.grid.re1},
        {"n_re", c.grid.n_re},
        {"im0", c.grid.im0},
        {"im1", c.grid.im1},
        {"n_im", c.grid.n_im}}},
      {"output_dir", c.output_dir},
      {"seed", c.seed},
      {"equivalence_probes", c.equivalence_probes},
      {"duality_check", c.duality_check}};
}

/// Reads a RunConfig; absent keys keep their defaults.
inline RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    auto get = [](const nlohmann::json& obj, const char* key, auto& field) {
      if (obj.contains(key)) field = obj.at(key).get<std::decay_t<decltype(field)>>();
    };
    if (j.contains("truncation")) {
      const auto& t = j.at("truncation");
      get(t, "n0", c.truncation.n0);
      get(t, "nmax", c.truncation.nmax);
      get(t, "dense_nmax", c.truncation.dense_nmax);
      get(t, "n_work", c.truncation.n_work);
      get(t, "rel_tol", c.truncation.rel_tol);
      get(t, "growth_threshold", c.truncation.growth_threshold);
      get(t, "tail_doublings", c.truncation.tail_doublings);
      get(t, "vector_cap", c.truncation.vector_cap);
    }
    if (j.contains("tolerances")) {
      const auto& q = j.at("tolerances");
      get(q, "solve_tol", c.tolerances.solve_tol);
      get(q, "series_tol", c.tolerances.series_tol);
      get(q, "id_tol", c.tolerances.id_tol);
      get(q, "eq_tol", c.tolerances.eq_tol);
      get(q, "ge_tol", c.tolerances.ge_tol);
      get(q, "defect_eps", c.tolerances.defect_eps);
      get(q, "quad_tol", c.tolerances.quad_tol);
      get(q, "eigen_tol", c.tolerances.eigen_tol);
    }
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      get(g, "re0", c.grid.re0);
      get(g, "re1", c.grid.re1);
      get(g, "n_re", c.grid.n_re);
      get(g, "im0", c.grid.im0);
      get(g, "im1", c.grid.im1);
      get(g, "n_im", c.grid.n_im);
    }
    get(j, "output_dir", c.output_dir);
    get(j, "seed", c.seed);
    get(j, "equivalence_probes", c.equivalence_probes);
    get(j, "duality_check", c.duality_check);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("run config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace rigspec
