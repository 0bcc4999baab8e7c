// rigspec: batch driver for scans, branch reports and the model checks.
//
// exit codes: 0 ok, 1 tolerance failure (with --check), 2 parse error, 3 precondition violation

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rigspec/rigspec.hpp"

using namespace rigspec;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct ToleranceFailure : Error {
  using Error::Error;
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PreconditionError("cannot write '" + path + "'");
  out << text;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

double parse_real(const std::string& s) {
  const cplx z = parse_complex(s);
  if (z.imag() != 0.0) throw ParseError("expected a real number, got '" + s + "'");
  return z.real();
}

std::size_t parse_count(const std::string& s) {
  const double v = parse_real(s);
  if (!(v >= 0) || v != std::floor(v)) throw ParseError("expected a nonnegative integer, got '" + s + "'");
  return static_cast<std::size_t>(v);
}

/// "lo:hi:n"
std::tuple<double, double, std::size_t> parse_axis(const std::string& s) {
  const auto p = split(s, ':');
  if (p.size() != 3) throw ParseError("axis must read lo:hi:n, got '" + s + "'");
  return {parse_real(p[0]), parse_real(p[1]), parse_count(p[2])};
}

/// "re0:re1:nRe,im0:im1:nIm"
GridSpec parse_grid(const std::string& s) {
  const auto p = split(s, ',');
  if (p.size() != 2) throw ParseError("grid must read re0:re1:nRe,im0:im1:nIm");
  GridSpec g;
  std::tie(g.re0, g.re1, g.n_re) = parse_axis(p[0]);
  std::tie(g.im0, g.im1, g.n_im) = parse_axis(p[1]);
  g.validate();
  return g;
}

std::vector<double> axis_points(double lo, double hi, std::size_t n) {
  if (n == 1) return {lo};
  std::vector<double> v;
  for (std::size_t k = 0; k < n; ++k) v.push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1));
  return v;
}

/// Angle in radians, or a unimodular complex literal containing i.
cplx parse_alpha(const std::string& s) {
  if (s.find('i') != std::string::npos) return parse_complex(s);
  return std::polar(1.0, parse_real(s));
}

Index parse_index(const std::string& s) { return Index::from_json(json(s)); }

struct Model {
  CoefficientOperator op = CoefficientOperator::diagonal(Basis::hermite, Symbol::constant(0.0), true, "0");
  ScaleFamily family;
  json source;
};

Model load_model(const std::string& op_path, const std::string& fam_path, const std::string& gallery) {
  Model m;
  if (!gallery.empty()) {
    if (!op_path.empty() || !fam_path.empty()) throw ParseError("--gallery excludes --operator and --family");
    auto g = gallery_entry(gallery);
    m.op = g.op;
    m.family = g.family;
    m.source = {{"gallery", gallery}};
    return m;
  }
  if (op_path.empty() || fam_path.empty()) throw ParseError("need --operator and --family, or --gallery");
  const json oj = read_json_file(op_path), fj = read_json_file(fam_path);
  m.op = operator_from_json(oj);
  m.family = ScaleFamily::from_json(fj);
  require_same_basis(m.op.basis(), m.family.basis(), "operator and family");
  m.source = {{"operator", oj}, {"family", fj}};
  return m;
}

const ScaleSpace& space_with_index(const ScaleFamily& fam, const Index& k) {
  for (const auto& s : fam.spaces())
    if (s.index() == k) return s;
  throw PreconditionError("family has no space with index " + k.str());
}

json envelope(const std::string& command, const json& parameters, const RunConfig& cfg, json result) {
  return {{"command", command}, {"version", kVersion}, {"parameters", parameters}, {"config", cfg}, {"result", std::move(result)}};
}

void finish(json& report, std::optional<bool> ok, bool check, const std::string& out) {
  report["within_tolerance"] = ok ? json(*ok) : json(nullptr);
  write_text(out, report.dump(2) + "\n");
  if (check && ok && !*ok) throw ToleranceFailure(report.at("command").get<std::string>() + ": contract tolerance exceeded");
}

CVector probe_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  CVector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    const double re = u(rng), im = u(rng);
    v(k) = cplx(re, im) / (1.0 + static_cast<double>(k));
  }
  return v;
}

/// Hermite coefficients from a comma list of complex literals, or by projecting
/// an expression in x onto phi_n.
CoefficientVector parse_phi(const std::string& s, const ExpansionConfig& ec, json& how) {
  std::vector<cplx> c;
  try {
    for (const auto& t : split(s, ',')) c.push_back(parse_complex(t));
  } catch (const ParseError&) {
    c.clear();
  }
  if (!c.empty()) {
    how = "coefficients";
    CVector v(static_cast<Eigen::Index>(c.size()));
    for (std::size_t k = 0; k < c.size(); ++k) v(static_cast<Eigen::Index>(k)) = c[k];
    return {Basis::hermite, v};
  }
  how = "expression";
  const auto e = Expr::parse(s, {"x"});
  const auto rule = gauss_legendre(2 * ec.nodes, ec.a, ec.b);
  const Eigen::MatrixXd t = hermite_table(rule.nodes, ec.modes);
  CVector f(rule.nodes.size());
  for (Eigen::Index j = 0; j < f.size(); ++j) f(j) = e(rule.nodes(j));
  return {Basis::hermite, CVector(t.transpose().cast<cplx>() * rule.weights.cast<cplx>().cwiseProduct(f))};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral data of coefficient operators on Hilbert scales"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string config_path, out;
  bool plot_data = false, check = false;
  app.add_option("--config", config_path, "RunConfig JSON");
  app.add_flag("--check", check, "exit 1 when a contract tolerance is exceeded");

  std::string op_path, fam_path, gallery, grid_text, lambda_text, lambda0_text, pair_text;

  auto* scan = app.add_subcommand("scan", "union spectrum scan over all admissible pairs");
  scan->add_option("--operator", op_path);
  scan->add_option("--family", fam_path);
  scan->add_option("--gallery", gallery, "use a gallery entry's operator and family");
  scan->add_option("--grid", grid_text, "re0:re1:nRe,im0:im1:nIm");
  scan->add_option("--out", out, "output directory")->required();
  scan->add_flag("--plot-data", plot_data, "also write re,im,status per grid point");

  auto* branches = app.add_subcommand("branches", "resolvent branches at one lambda with pairwise equivalence");
  branches->add_option("--operator", op_path);
  branches->add_option("--family", fam_path);
  branches->add_option("--gallery", gallery);
  branches->add_option("--lambda", lambda_text)->required();
  branches->add_option("--out", out);

  auto* neumann = app.add_subcommand("neumann", "Neumann continuation from lambda0 against a direct solve");
  neumann->add_option("--operator", op_path);
  neumann->add_option("--family", fam_path);
  neumann->add_option("--gallery", gallery);
  neumann->add_option("--pair", pair_text, "scale indices kE,kF of the pair")->required();
  neumann->add_option("--lambda0", lambda0_text)->required();
  neumann->add_option("--lambda", lambda_text)->required();
  neumann->add_option("--out", out);

  std::string alpha_text, beta_text, g_text = "1", csv_path;
  std::size_t nodes = 128;
  auto* krein = app.add_subcommand("krein", "difference of two momentum resolvents against the closed form");
  krein->add_option("--alpha", alpha_text, "angle in radians or unimodular a+bi")->required();
  krein->add_option("--beta", beta_text)->required();
  krein->add_option("--lambda", lambda_text)->required();
  krein->add_option("--g", g_text, "expression in x")->capture_default_str();
  krein->add_option("--nodes", nodes)->capture_default_str();
  krein->add_option("--csv", csv_path, "node values of both sides");
  krein->add_option("--out", out);

  std::string alphas_text;
  auto* cover = app.add_subcommand("momentum-cover", "which extensions S_alpha have lambda in their resolvent set");
  cover->add_option("--alphas", alphas_text, "comma list of angles or unimodular literals")->required();
  cover->add_option("--grid", grid_text, "re0:re1:n or re0:re1:nRe,im0:im1:nIm")->required();
  cover->add_option("--out", out);

  double delta_alpha = 0.0, delta_y = 0.0;
  DeltaMesh mesh;
  auto* delta = app.add_subcommand("delta-bound", "bound state of -d^2/dx^2 + alpha delta(x - y)");
  delta->add_option("--alpha", delta_alpha)->required();
  delta->add_option("--y", delta_y)->capture_default_str();
  delta->add_option("--L", mesh.half_width)->capture_default_str();
  delta->add_option("--h0", mesh.h0)->capture_default_str();
  delta->add_option("--levels", mesh.levels)->capture_default_str();
  delta->add_option("--out", out);

  std::string lgrid_text = "-2:2:5", s_text = "1";
  std::size_t ge_n = 1024;
  auto* geneig = app.add_subcommand("geneig", "generalized eigenvectors of the Hermite position operator");
  geneig->add_option("--lambda-grid", lgrid_text, "lo:hi:n")->capture_default_str();
  geneig->add_option("--s", s_text, "home space index s >= 1, H_{-s}")->capture_default_str();
  geneig->add_option("--n", ge_n, "truncation")->capture_default_str();
  geneig->add_option("--out", out);

  std::string phi_text;
  ExpansionConfig ec;
  auto* expansion = app.add_subcommand("expansion", "reconstruct Hermite coefficients through the generalized eigenvectors");
  expansion->add_option("--phi", phi_text, "comma list of coefficients, or an expression in x")->required();
  expansion->add_option("--nodes", ec.nodes)->capture_default_str();
  expansion->add_option("--a", ec.a)->capture_default_str();
  expansion->add_option("--b", ec.b)->capture_default_str();
  expansion->add_option("--modes", ec.modes)->capture_default_str();
  expansion->add_option("--out", out);

  std::string show_name;
  auto* gal = app.add_subcommand("gallery", "operator gallery");
  gal->require_subcommand(1);
  auto* gal_list = gal->add_subcommand("list", "entry names");
  auto* gal_show = gal->add_subcommand("show", "entry descriptor");
  gal_show->add_option("name", show_name)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = run_config_from_json(read_json_file(config_path));
    cfg.validate();

    if (*scan) {
      if (!grid_text.empty()) cfg.grid = parse_grid(grid_text);
      const auto m = load_model(op_path, fam_path, gallery);
      const auto map = union_spectrum_scan(m.op, m.family, cfg.grid, cfg);
      std::filesystem::create_directories(out);
      const std::filesystem::path dir(out);
      std::ostringstream csv;
      map.write_csv(csv);
      write_text((dir / "spectrum.csv").string(), csv.str());
      if (plot_data) {
        std::ostringstream pd;
        map.write_plot_data(pd);
        write_text((dir / "plot.csv").string(), pd.str());
      }
      std::size_t resolvent = 0, inconclusive = 0, dual_mismatch = 0;
      for (std::size_t i = 0; i < map.lambdas.size(); ++i) {
        resolvent += map.union_resolvent[i];
        inconclusive += !map.conclusive[i];
      }
      for (const auto& d : map.duality) dual_mismatch += !d.agrees();
      json rep = envelope("scan", {{"source", m.source}, {"plot_data", plot_data}}, cfg, map.to_json());
      rep["summary"] = {{"points", map.lambdas.size()},
                        {"pairs", map.pairs.size()},
                        {"union_resolvent_points", resolvent},
                        {"inconclusive_points", inconclusive},
                        {"duality_mismatches", dual_mismatch}};
      write_text((dir / "spectrum.json").string(), rep.dump(2) + "\n");
      std::cout << rep["summary"].dump() << "\n";
      return 0;
    }

    if (*branches) {
      const auto m = load_model(op_path, fam_path, gallery);
      const cplx lambda = parse_complex(lambda_text);
      auto rep = envelope("branches", {{"source", m.source}, {"lambda", format_complex(lambda)}}, cfg,
                          branch_report(m.op, m.family, lambda, cfg).to_json());
      finish(rep, std::nullopt, check, out);
      return 0;
    }

    if (*neumann) {
      const auto m = load_model(op_path, fam_path, gallery);
      const auto ks = split(pair_text, ',');
      if (ks.size() != 2) throw ParseError("--pair must read kE,kF");
      const auto& e = space_with_index(m.family, parse_index(ks[0]));
      const auto& f = space_with_index(m.family, parse_index(ks[1]));
      const cplx l0 = parse_complex(lambda0_text), l = parse_complex(lambda_text);
      const auto cont = neumann_continue(m.op, l0, l, e, f, cfg);
      const CoefficientVector eta{m.op.basis(), probe_vector(cfg.truncation.n_work, cfg.seed)};
      const auto series = cont.apply(eta);
      const auto direct = resolvent_solve(m.op, l, e, f, eta, cfg);
      const auto n = static_cast<Eigen::Index>(std::min(series.size(), direct.xi.size()));
      const double err = (series.coeffs.head(n) - direct.xi.coeffs.head(n)).cwiseAbs().maxCoeff();
      json res{{"pair", pair_label(e, f)},
               {"radius", cont.radius},
               {"distance", std::abs(l - l0)},
               {"terms", cont.terms},
               {"tail_bound", cont.tail_bound},
               {"r0_fe_norm", cont.r0_fe_norm},
               {"max_coefficient_error", err},
               {"direct_residual", direct.residual_f},
               {"contract", "max coefficient error <= 1e-8"}};
      auto rep = envelope("neumann",
                          {{"source", m.source}, {"pair", pair_text}, {"lambda0", format_complex(l0)},
                           {"lambda", format_complex(l)}, {"probe_length", cfg.truncation.n_work}},
                          cfg, res);
      finish(rep, err <= 1e-8, check, out);
      return 0;
    }

    if (*krein) {
      auto quad = std::make_shared<const IntervalQuadrature>(nodes);
      const auto a = MomentumExtension(parse_alpha(alpha_text), quad), b = MomentumExtension(parse_alpha(beta_text), quad);
      const cplx lambda = parse_complex(lambda_text);
      const auto g_expr = Expr::parse(g_text, {"x"});
      const CVector g = quad->sample([&](double x) { return g_expr(x); });
      const auto r = krein_difference_check(a, b, lambda, g, cfg.tolerances);
      const double bound = (a.alpha() == b.alpha() ? 1e-14 : 1e-10) * std::max(r.g_sup, 1.0);
      if (!csv_path.empty()) {
        std::ostringstream os;
        os << "x,re_difference,im_difference,re_formula,im_formula\r\n";
        for (Eigen::Index k = 0; k < g.size(); ++k)
          os << format_double(quad->nodes()(k)) << ',' << format_double(r.difference(k).real()) << ','
             << format_double(r.difference(k).imag()) << ',' << format_double(r.formula(k).real()) << ','
             << format_double(r.formula(k).imag()) << "\r\n";
        write_text(csv_path, os.str());
      }
      json res{{"residual", r.residual}, {"g_sup", r.g_sup}, {"bound", bound}};
      auto rep = envelope("krein",
                          {{"alpha", format_complex(a.alpha())}, {"beta", format_complex(b.alpha())},
                           {"lambda", format_complex(lambda)}, {"g", g_text}, {"nodes", nodes}},
                          cfg, res);
      finish(rep, r.residual <= bound, check, out);
      return 0;
    }

    if (*cover) {
      std::vector<cplx> alphas;
      for (const auto& t : split(alphas_text, ',')) alphas.push_back(parse_alpha(t));
      const auto axes = split(grid_text, ',');
      if (axes.empty() || axes.size() > 2) throw ParseError("grid must read re0:re1:n or re0:re1:nRe,im0:im1:nIm");
      const auto [r0, r1, nr] = parse_axis(axes[0]);
      double i0 = 0.0, i1 = 0.0;
      std::size_t ni = 1;
      if (axes.size() == 2) std::tie(i0, i1, ni) = parse_axis(axes[1]);
      if (nr < 2 || ni < 1) throw PreconditionError("momentum-cover grid needs at least two real points");
      std::vector<cplx> lambdas;
      for (double im : axis_points(i0, i1, ni))
        for (double re : axis_points(r0, r1, nr)) lambdas.emplace_back(re, im);
      const auto rows = momentum_union_resolvent(alphas, lambdas, cfg.tolerances);
      std::ostringstream os;
      os << "# alphas:";
      for (cplx a : alphas) os << ' ' << format_complex(a);
      os << "\r\nre,im,covered,covering(alpha indices)\r\n";
      for (const auto& row : rows) {
        std::string idx;
        for (auto k : row.covering) idx += (idx.empty() ? "" : ";") + std::to_string(k);
        os << format_double(row.lambda.real()) << ',' << format_double(row.lambda.imag()) << ',' << (row.covered() ? "true" : "false")
           << ',' << idx << "\r\n";
      }
      write_text(out, os.str());
      return 0;
    }

    if (*delta) {
      const DeltaInteraction d{delta_alpha, delta_y};
      const auto r = bound_state_check(d, mesh);
      const double exact = *d.bound_state();
      const double rel = std::abs(r.estimate - exact) / std::abs(exact);
      json res = r.to_json();
      res["spectrum"] = d.spectrum().to_json();
      res["exact"] = exact;
      res["relative_error"] = rel;
      auto rep = envelope("delta-bound",
                          {{"alpha", delta_alpha}, {"y", delta_y}, {"L", mesh.half_width}, {"h0", mesh.h0}, {"levels", mesh.levels}},
                          cfg, res);
      finish(rep, rel <= 0.01, check, out);
      return 0;
    }

    if (*geneig) {
      const auto [lo, hi, n] = parse_axis(lgrid_text);
      if (n < 1) throw PreconditionError("lambda grid needs at least one point");
      const Index s = parse_index(s_text);
      std::ostringstream os;
      os << "# home H_-" << s.str() << "[n+1], target H_-3[n+1], N = " << ge_n << ", ge_tol = " << format_double(cfg.tolerances.ge_tol)
         << "\r\nlambda,residual,membership_norm,membership_converged,membership_n\r\n";
      bool ok = true;
      for (double lambda : axis_points(lo, hi, n)) {
        const auto g = delta_eigenvector_hermite(lambda, s, ge_n);
        const auto mr = membership_norm(lambda, s, 1e-8, cfg.truncation.vector_cap);
        if (std::abs(lambda) <= 3.0 && g.residual > cfg.tolerances.ge_tol) ok = false;
        os << format_double(lambda) << ',' << format_double(g.residual) << ',' << format_double(mr.norm) << ','
           << (mr.converged ? "true" : "false") << ',' << mr.n_used << "\r\n";
      }
      write_text(out, os.str());
      if (check && !ok) throw ToleranceFailure("geneig: residual above ge_tol for |lambda| <= 3");
      return 0;
    }

    if (*expansion) {
      json how;
      const auto c = parse_phi(phi_text, ec, how);
      const auto r = expansion_check(c, ec);
      json res = r.to_json();
      res["input"] = how;
      res["input_modes"] = c.size();
      std::optional<bool> ok;
      if (r.rapidly_decreasing) ok = r.error <= 1e-6 && r.parseval_error <= 1e-6;
      auto rep = envelope("expansion", {{"phi", phi_text}, {"nodes", ec.nodes}, {"a", ec.a}, {"b", ec.b}, {"modes", ec.modes}}, cfg, res);
      finish(rep, ok, check, out);
      return 0;
    }

    if (*gal_list) {
      for (const auto& n : gallery_names()) std::cout << n << "\n";
      return 0;
    }
    if (*gal_show) {
      std::cout << gallery_entry(show_name).to_json().dump(2) << "\n";
      return 0;
    }
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const ToleranceFailure& e) {
    std::cerr << "tolerance failure: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "precondition violated: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
