#include "screenopt/app.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "screenopt/diagnostics.hpp"
#include "screenopt/error.hpp"
#include "screenopt/io.hpp"
#include "screenopt/perturbation.hpp"

namespace screenopt {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::Config, std::string("wrong type for key '") + key + "'");
  }
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
      throw Error(ErrorCode::Config, "unknown key '" + key + "' in " + where);
  }
}

ProblemKind parse_problem(const std::string& s) {
  if (s == "classical-1d") return ProblemKind::Classical1D;
  if (s == "classical-2d") return ProblemKind::Classical2D;
  if (s == "extended") return ProblemKind::Extended;
  throw Error(ErrorCode::Config, "problem must be classical-1d, classical-2d or extended");
}

Pairing parse_pairing(const std::string& s) {
  if (s == "full") return Pairing::Full;
  if (s == "k-nearest") return Pairing::KNearest;
  throw Error(ErrorCode::Config, "pairing must be full or k-nearest");
}

Grid theta_grid(const RunConfig& cfg) { return Grid::build(cfg.domain, cfg.n); }

Grid extended_grid(const RunConfig& cfg, double kappa, int n_alpha) {
  return Grid::build(cfg.domain, AversionDomain{kappa}, cfg.n, n_alpha);
}

Density read_csv_density(const DensityConfig& d) {
  std::ifstream in(d.path);
  if (!in) throw Error(ErrorCode::Io, "cannot open density file " + d.path.string());
  Density out = read_density_csv(in, d.joint);
  out.normalize();
  return out;
}

// Joint density on types x aversions, when the configuration defines one.
std::optional<Density> joint_density(const RunConfig& cfg) {
  const DensityConfig& d = cfg.density;
  if (d.kind == "fig1") return fig1_joint_density(d.a, extended_grid(cfg, 1.0, cfg.n_alpha)).density;
  if (d.kind == "csv" && d.joint) return read_csv_density(d);
  if (cfg.problem != ProblemKind::Extended) return std::nullopt;
  const Grid g = extended_grid(cfg, cfg.kappa, cfg.n_alpha);
  if (d.kind == "uniform") return uniform_density(g);
  return exponential_density(g, d.rate);
}

struct Artifacts {
  std::filesystem::path dir;

  void write(const std::string& name, const std::string& text) const { write_text_file(dir / name, text); }
  template <class Fn>
  void write_with(const std::string& name, Fn&& fn) const {
    std::ostringstream out;
    fn(out);
    write(name, out.str());
  }
};

Certificate1D certificate_1d(const RunConfig& cfg, const Density& h, const SurplusField& solved_classical) {
  const Density f = marginalize(h);
  const SurplusField vbar = cfg.certificate.vbar == "solved" ? solved_classical : closed_form_1d(f).field;
  Certificate1D c;
  c.spec.a = cfg.density.kind == "fig1" ? fig1_joint_density(cfg.density.a, h.grid()).a : cfg.certificate.a;
  c.spec.kappa = h.grid().kappa();
  c.spec.e = {1.0};
  const FirstVariation1D fv = first_variation_1d(vbar, h, c.spec);
  c.jprime0 = fv.value;
  c.jprime0_kink_zero = fv.value_kink_zero;
  c.fd_epsilon = cfg.certificate.epsilon;
  c.fd_slope = finite_difference_slope(vbar, h, c.spec, c.fd_epsilon, cfg.cost);
  c.spec.epsilon = c.fd_epsilon;
  return c;
}

std::optional<Certificate2D> certificate_2d(const RunConfig& cfg, const Density& f, const SurplusField& vbar,
                                            double objective, std::ostream& log) {
  const CertificateConfig& cc = cfg.certificate;
  PerturbationSpec spec;
  spec.a = cc.a;
  spec.kappa = cc.kappa;
  spec.e = cc.e;
  spec.s_lo = cc.s_lo;
  spec.s_hi = cc.s_hi;
  spec.validate(2);
  const std::vector<double> e = spec.direction(2);

  RectangleSearch rs;
  rs.objective_scale = objective;
  rs.a = spec.a;
  rs.s_lo = spec.s_lo;
  rs.s_hi = spec.s_hi;
  const std::optional<Rectangle> K = find_profitable_rectangle(vbar, e, rs);
  if (!K) {
    log << "no profitable rectangle found\n";
    return std::nullopt;
  }
  spec.K = *K;
  Certificate2D c;
  c.variation = first_variation_2d(vbar, spec);

  const Grid ext = Grid::build(cfg.domain, AversionDomain{spec.kappa}, cfg.n, cc.n_alpha);
  const CertificateDensity h = certificate_density(ext, f, *K, e, spec.a, spec.s_lo, spec.s_hi);
  c.weight = h.weight;
  spec.epsilon = cc.epsilon;
  const SurplusField w = lift(vbar, ext, spec);
  c.lift_gain = assemble_extended(h.density, cfg.cost).evaluate(w) - assemble_classical(f, cfg.cost).evaluate(vbar);
  spec.e = e;
  c.spec = spec;
  return c;
}

}  // namespace

RunConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::Config, "configuration must be a JSON object");
  reject_unknown(j,
                 {"version", "problem", "domain", "grid", "density", "cost", "solver", "outputs", "certificate",
                  "out_dir", "description"},
                 "configuration");

  RunConfig cfg;
  if (!j.contains("version")) throw Error(ErrorCode::Config, "missing 'version'");
  cfg.version = get_or(j, "version", 0);
  if (cfg.version != 1) throw Error(ErrorCode::Config, "unsupported configuration version");
  cfg.problem = parse_problem(get_or<std::string>(j, "problem", ""));

  const json dom = j.value("domain", json::object());
  reject_unknown(dom, {"lo", "hi", "kappa"}, "domain");
  cfg.domain.lo = get_or(dom, "lo", std::vector<double>{});
  cfg.domain.hi = get_or(dom, "hi", std::vector<double>{});
  cfg.kappa = get_or(dom, "kappa", 1.0);
  cfg.domain.validate();
  AversionDomain{cfg.kappa}.validate();

  const json grid = j.value("grid", json::object());
  reject_unknown(grid, {"n", "n_alpha"}, "grid");
  cfg.n = get_or(grid, "n", std::vector<int>{});
  cfg.n_alpha = get_or(grid, "n_alpha", 0);
  if (cfg.n.size() != cfg.domain.dim()) throw Error(ErrorCode::Config, "grid.n needs one entry per domain axis");
  for (int n : cfg.n)
    if (n < 2) throw Error(ErrorCode::InvalidResolution, "each axis needs at least 2 nodes");

  const std::size_t dim = cfg.domain.dim();
  if (cfg.problem == ProblemKind::Classical1D && dim != 1)
    throw Error(ErrorCode::Config, "classical-1d needs a 1D domain");
  if (cfg.problem == ProblemKind::Classical2D && dim != 2)
    throw Error(ErrorCode::Config, "classical-2d needs a 2D domain");

  const json den = j.value("density", json::object());
  reject_unknown(den, {"kind", "rate", "a", "path", "joint"}, "density");
  cfg.density.kind = get_or<std::string>(den, "kind", "uniform");
  cfg.density.rate = get_or(den, "rate", 1.0);
  cfg.density.a = get_or(den, "a", 0.5);
  cfg.density.joint = get_or(den, "joint", false);
  const std::string& kind = cfg.density.kind;
  if (kind == "fig1") {
    if (!(cfg.density.a > 0.0 && cfg.density.a < 1.0)) throw Error(ErrorCode::Config, "fig1 needs a in (0,1)");
    if (dim != 1) throw Error(ErrorCode::Config, "fig1 needs a 1D domain");
  } else if (kind == "csv") {
    if (!den.contains("path")) throw Error(ErrorCode::Config, "csv density needs a path");
    cfg.density.path = base_dir / get_or<std::string>(den, "path", "");
    if (!std::filesystem::exists(cfg.density.path))
      throw Error(ErrorCode::Config, "density file does not exist: " + cfg.density.path.string());
  } else if (kind == "exponential") {
    if (!(cfg.density.rate >= 0.0) || !std::isfinite(cfg.density.rate))
      throw Error(ErrorCode::Config, "exponential rate must be finite and nonnegative");
  } else if (kind != "uniform") {
    throw Error(ErrorCode::Config, "density kind must be uniform, exponential, fig1 or csv");
  }
  const bool needs_alpha = cfg.problem == ProblemKind::Extended || kind == "fig1";
  if (needs_alpha && cfg.n_alpha < 2) throw Error(ErrorCode::InvalidResolution, "grid.n_alpha needs at least 2 nodes");
  if (cfg.problem == ProblemKind::Extended && kind == "csv" && !cfg.density.joint)
    throw Error(ErrorCode::Config, "extended problems need a joint csv density");

  const json cost = j.value("cost", json::object());
  reject_unknown(cost, {"lambda"}, "cost");
  cfg.cost.lambda = get_or(cost, "lambda", 0.0);
  cfg.cost.validate();

  const json sol = j.value("solver", json::object());
  reject_unknown(sol, {"max_iters", "tolerance", "feasibility_tol", "step_fraction", "pairing", "k", "max_cut_rounds"},
                 "solver");
  cfg.solver.max_iters = get_or(sol, "max_iters", cfg.solver.max_iters);
  cfg.solver.tolerance = get_or(sol, "tolerance", cfg.solver.tolerance);
  cfg.solver.feasibility_tol = get_or(sol, "feasibility_tol", cfg.solver.feasibility_tol);
  cfg.solver.step_fraction = get_or(sol, "step_fraction", cfg.solver.step_fraction);
  cfg.solver.pairing = parse_pairing(get_or<std::string>(sol, "pairing", "full"));
  cfg.solver.k = get_or(sol, "k", cfg.solver.k);
  cfg.solver.max_cut_rounds = get_or(sol, "max_cut_rounds", cfg.solver.max_cut_rounds);
  try {
    cfg.solver.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, e.what());
  }

  const json outs = j.value("outputs", json::object());
  reject_unknown(outs, {"field", "contracts", "segmentation", "certificates"}, "outputs");
  cfg.outputs.field = get_or(outs, "field", true);
  cfg.outputs.contracts = get_or(outs, "contracts", true);
  cfg.outputs.segmentation = get_or(outs, "segmentation", true);
  cfg.certificate.enabled = get_or(outs, "certificates", false);

  const json cert = j.value("certificate", json::object());
  reject_unknown(cert, {"a", "kappa", "epsilon", "e", "s_lo", "s_hi", "n_alpha", "vbar"}, "certificate");
  CertificateConfig& cc = cfg.certificate;
  cc.a = get_or(cert, "a", kind == "fig1" ? cfg.density.a : 0.5);
  cc.kappa = get_or(cert, "kappa", cfg.kappa);
  cc.epsilon = get_or(cert, "epsilon", dim == 1 ? 1e-3 : 1e-2);
  cc.e = get_or(cert, "e", std::vector<double>{});
  cc.s_lo = get_or(cert, "s_lo", -0.5 * cc.a);
  cc.s_hi = get_or(cert, "s_hi", 0.0);
  cc.n_alpha = get_or(cert, "n_alpha", 5);
  cc.vbar = get_or<std::string>(cert, "vbar", "closed-form");
  if (cc.vbar != "closed-form" && cc.vbar != "solved")
    throw Error(ErrorCode::Config, "certificate.vbar must be closed-form or solved");
  if (cc.enabled) {
    if (!(cc.epsilon > 0.0)) throw Error(ErrorCode::Config, "certificate.epsilon must be positive");
    if (cc.n_alpha < 2) throw Error(ErrorCode::InvalidResolution, "certificate.n_alpha needs at least 2 nodes");
    if (dim > 2) throw Error(ErrorCode::Config, "certificates exist for 1D and 2D types only");
    if (dim == 1 && kind != "fig1" && !(kind == "csv" && cfg.density.joint) && cfg.problem != ProblemKind::Extended)
      throw Error(ErrorCode::Config, "the 1D certificate needs a joint density");
    PerturbationSpec probe;
    probe.a = cc.a;
    probe.kappa = cc.kappa;
    probe.e = cc.e;
    probe.s_lo = cc.s_lo;
    probe.s_hi = cc.s_hi;
    try {
      probe.validate(dim);
    } catch (const Error& e) {
      throw Error(ErrorCode::Config, e.what());
    }
  }

  cfg.out_dir = get_or<std::string>(j, "out_dir", "out");
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot open configuration " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  RunConfig cfg = parse_config(text.str(), path.parent_path());
  // Building the density surfaces alignment and file problems at check time.
  build_density(cfg);
  return cfg;
}

Density build_density(const RunConfig& cfg) {
  const DensityConfig& d = cfg.density;
  if (cfg.problem == ProblemKind::Extended) return *joint_density(cfg);
  if (d.kind == "fig1" || (d.kind == "csv" && d.joint)) return marginalize(*joint_density(cfg));
  if (d.kind == "csv") return read_csv_density(d);
  const Grid g = theta_grid(cfg);
  return d.kind == "uniform" ? uniform_density(g) : exponential_density(g, d.rate);
}

RunOutcome run(const RunConfig& cfg, std::ostream& log) {
  std::filesystem::create_directories(cfg.out_dir);
  const Artifacts out{cfg.out_dir};
  const Density density = build_density(cfg);

  const SolveResult main = solve(assemble(density, cfg.cost), cfg.solver);
  log << "objective " << main.report.objective << " after " << main.report.iterations << " iterations in "
      << main.report.seconds << " s" << (main.report.converged ? "" : " (not converged)") << '\n';
  out.write("report.json", report_json(main.report));
  if (cfg.outputs.field) out.write_with("field.csv", [&](std::ostream& o) { write_field_csv(o, main.field); });
  if (cfg.outputs.contracts) {
    const ContractMenu menu = extract_contracts(main.field);
    out.write_with("contracts.csv", [&](std::ostream& o) { write_contracts_csv(o, menu); });
  }

  ordered_json diag;
  const bool bunching = !main.field.extended() && main.field.grid().dim() == 2;
  const SegmentationMap seg = bunching ? bunching_map(main.field) : exclusion_region(main.field);
  diag["excluded_fraction"] = seg.excluded_fraction;
  diag["bunched_fraction"] = seg.bunched_fraction;
  diag["screened_fraction"] = seg.screened_fraction;
  if (cfg.outputs.segmentation)
    out.write_with("segmentation.csv", [&](std::ostream& o) { write_segmentation_csv(o, seg); });

  // Classical companion solve: needed by the extended diagnostics and the 1D certificate.
  std::optional<SolveResult> classical;
  const std::optional<Density> joint = joint_density(cfg);
  if (cfg.problem == ProblemKind::Extended) {
    classical = solve(assemble_classical(marginalize(density), cfg.cost), cfg.solver);
    const IndependenceReport ind =
        independence_check(density, main.field, main.report.objective, classical->report.objective);
    const MinYReport my = min_y_property(main.field);
    diag["classical_objective"] = classical->report.objective;
    diag["product_density"] = ind.product;
    diag["max_q"] = ind.max_q;
    diag["independence_passed"] = ind.passed;
    diag["min_participating_q"] = my.min_q;
    diag["min_y_passed"] = my.passed;
  }
  out.write("diagnostics.json", diag.dump(2) + "\n");

  if (cfg.certificate.enabled) {
    if (cfg.domain.dim() == 1) {
      const SurplusField& solved = classical ? classical->field : main.field;
      out.write("certificate.json", certificate_json(certificate_1d(cfg, *joint, solved)));
    } else {
      const Density f = cfg.problem == ProblemKind::Extended ? marginalize(density) : density;
      const SolveResult& base = classical ? *classical : main;
      if (const auto c = certificate_2d(cfg, f, base.field, base.report.objective, log))
        out.write("certificate.json", certificate_json(*c));
    }
  }
  return RunOutcome{main.report.converged ? 0 : 2, main.report};
}

ComparisonReport compare(const std::filesystem::path& a, const std::filesystem::path& b) {
  auto load = [](const std::filesystem::path& dir) {
    std::ifstream rin(dir / "report.json");
    if (!rin) throw Error(ErrorCode::Io, "missing report.json in " + dir.string());
    std::ifstream fin(dir / "field.csv");
    if (!fin) throw Error(ErrorCode::Io, "missing field.csv in " + dir.string());
    return std::pair{read_report_json(rin), read_field_csv(fin)};
  };
  const auto [ra, fa] = load(a);
  const auto [rb, fb] = load(b);
  const Grid& ga = fa.grid();
  const Grid& gb = fb.grid();
  if (!(ga.theta_grid() == gb.theta_grid())) throw Error(ErrorCode::GridMismatch, "runs use different type grids");
  if (ga.extended() && gb.extended() && !(ga == gb))
    throw Error(ErrorCode::GridMismatch, "runs use different aversion grids");

  ComparisonReport r;
  r.objective_a = ra.objective;
  r.objective_b = rb.objective;
  r.objective_delta = rb.objective - ra.objective;
  for (std::size_t i = 0; i < fa.size(); ++i) r.max_q_a = std::max(r.max_q_a, std::abs(fa.q(i)));
  for (std::size_t i = 0; i < fb.size(); ++i) r.max_q_b = std::max(r.max_q_b, std::abs(fb.q(i)));

  // Node of a grid matching theta node t, taken on the alpha = 0 layer when extended.
  auto node = [](const Grid& g, std::size_t t) {
    return g.extended() ? t * static_cast<std::size_t>(g.count(g.dim() - 1)) + g.count(g.dim() - 1) - 1 : t;
  };
  const bool same = ga == gb;
  const std::size_t n = same ? ga.size() : ga.theta_grid().size();
  const std::size_t d = ga.theta_dim();
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t i = same ? t : node(ga, t), j = same ? t : node(gb, t);
    r.linf_v = std::max(r.linf_v, std::abs(fa.v(i) - fb.v(j)));
    for (std::size_t k = 0; k < d; ++k) r.linf_p = std::max(r.linf_p, std::abs(fa.p(i, k) - fb.p(j, k)));
    r.linf_q = std::max(r.linf_q, std::abs(fa.q(i) - fb.q(j)));
  }
  r.compared_nodes = n;
  return r;
}

std::string comparison_json(const ComparisonReport& r) {
  ordered_json j;
  j["objective_a"] = r.objective_a;
  j["objective_b"] = r.objective_b;
  j["objective_delta"] = r.objective_delta;
  j["max_q_a"] = r.max_q_a;
  j["max_q_b"] = r.max_q_b;
  j["linf_v"] = r.linf_v;
  j["linf_p"] = r.linf_p;
  j["linf_q"] = r.linf_q;
  j["compared_nodes"] = r.compared_nodes;
  return j.dump(2) + "\n";
}

}  // namespace screenopt
