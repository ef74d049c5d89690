#include "selfdual/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "selfdual/asd.hpp"
#include "selfdual/errors.hpp"

namespace selfdual {

namespace {

using Json = nlohmann::ordered_json;

// Outcome of a command before output is written.
struct Outcome {
  int code = kExitSuccess;
  Json report;
};

Interval interval_from(const std::string& key, const std::string& text) {
  std::istringstream is(text);
  Interval iv;
  std::string extra;
  if (!(is >> iv.lo >> iv.hi) || (is >> extra))
    throw ConfigError("[grid] " + key + " must be two numbers 'lo hi', got '" + text + "'");
  if (!(iv.hi > iv.lo)) throw ConfigError("[grid] " + key + " must satisfy lo < hi");
  return iv;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  f << text;
}

std::string coords_header(const Grid& g) { return g.dim() == 1 ? "x" : "x,y"; }

std::string coords(const Grid& g, int i) {
  std::string s = format_double(g.coord(i, 0));
  if (g.dim() == 2) s += "," + format_double(g.coord(i, 1));
  return s;
}

std::string solution_csv(const Grid& g, const Vec& v) {
  std::string s = coords_header(g) + ",value\n";
  for (int i = 0; i < g.size(); ++i) s += coords(g, i) + "," + format_double(v[i]) + "\n";
  return s;
}

std::string trajectory_csv(const Trajectory& tr) {
  std::string s = "k,t,node,value\n";
  for (int k = 0; k <= tr.steps(); ++k) {
    const std::string head = std::to_string(k) + "," + format_double(k * tr.dt) + ",";
    for (Eigen::Index i = 0; i < tr.u[k].size(); ++i)
      s += head + std::to_string(i) + "," + format_double(tr.u[k][i]) + "\n";
  }
  return s;
}

// Reads the value column of a solution CSV with the same layout.
Vec read_oracle(const std::string& path, const Grid& g) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open oracle file '" + path + "'");
  std::string line;
  std::getline(in, line);
  if (line != coords_header(g) + ",value") throw ConfigError("oracle file '" + path + "' has an unexpected header");
  Vec v(g.size());
  int i = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (i >= g.size()) throw ConfigError("oracle file '" + path + "' has more rows than the grid has nodes");
    const std::size_t comma = line.rfind(',');
    v[i++] = std::stod(line.substr(comma + 1));
  }
  if (i != g.size()) throw ConfigError("oracle file '" + path + "' has fewer rows than the grid has nodes");
  return v;
}

Variant stationary_variant_from(const std::string& s) {
  if (s == "pure_transport") return Variant::PureTransport;
  if (s == "viscous_transport") return Variant::ViscousTransport;
  throw ConfigError("[problem] variant must be pure_transport or viscous_transport, got '" + s + "'");
}

EvolutionVariant evolution_variant_from(const std::string& s) {
  if (s == "diffusive") return EvolutionVariant::Diffusive;
  if (s == "pure_transport") return EvolutionVariant::PureTransport;
  throw ConfigError("[problem] variant must be diffusive or pure_transport, got '" + s + "'");
}

Scheme scheme_from(const std::string& s) {
  if (s == "spacetime") return Scheme::Spacetime;
  if (s == "prox") return Scheme::Prox;
  throw ConfigError("[solver] scheme must be spacetime or prox, got '" + s + "'");
}

Outcome check_skew(Config& c, std::uint64_t seed, std::ostream& out) {
  const Grid g = grid_from_config(c);
  const VectorFieldSpec a = vectorfield_from_config(c, g.dim());
  const int pairs = c.get_int("skew", "pairs", 200);
  const bool broken = c.get_bool("skew", "inconsistent_divergence", false);
  if (pairs < 1) throw ConfigError("[skew] pairs must be >= 1");
  const SkewOperator op = build_transport(g, a, broken);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < pairs; ++k) {
    Vec u(g.size()), v(g.size());
    for (int i = 0; i < g.size(); ++i) u[i] = d(rng);
    for (int i = 0; i < g.size(); ++i) v[i] = d(rng);
    worst = std::max(worst, green_residual(op, u, v));
  }
  const double bound = 1e-12;
  const bool ok = worst <= bound;
  char buf[160];
  std::snprintf(buf, sizeof buf, "max green residual %.3e over %d pairs (bound %.0e): %s\n", worst, pairs, bound,
                ok ? "ok" : "violated");
  out << buf;
  Outcome o;
  o.code = ok ? kExitSuccess : kExitPropertyViolated;
  o.report["max_green_residual"] = worst;
  o.report["pairs"] = pairs;
  o.report["bound"] = bound;
  o.report["passed"] = ok;
  return o;
}

Outcome verify_asd(Config& c, std::ostream& out) {
  const std::string kind = c.get("asd", "kind", "basic");
  const int dofs = c.get_int("asd", "dofs", 1);
  if (dofs < 1 || dofs > 3) throw ConfigError("[asd] dofs must be 1, 2 or 3 for brute-force verification");
  const double p = c.get_double("potential", "p", 2.0);
  const double alpha = c.get_double("potential", "alpha", 1.0);
  // A constant linear term; it makes phi non-even, which the broken-sign control needs.
  const double f = c.get_double("coefficients", "f", 0.0);
  AsdVerifyOptions vo;
  vo.radius = c.get_double("asd", "radius", vo.radius);
  vo.samples = c.get_int("asd", "samples", vo.samples);
  vo.probe_radius = c.get_double("asd", "probe_radius", vo.probe_radius);
  vo.probe_samples = c.get_int("asd", "probe_samples", vo.probe_samples);
  const double bound = c.get_double("asd", "bound", 1e-3);

  auto phi_on = [&](const Vec& w) {
    return FieldFunctional(w, std::vector<Potential>(w.size(), Potential::power(alpha, p) + Potential::linear(f)));
  };
  const Vec ones = Vec::Ones(dofs);
  Lagrangian L;
  if (kind == "basic") {
    L = make_basic(phi_on(ones));
  } else if (kind == "broken_sign") {
    L = make_broken_sign(phi_on(ones));
  } else if (kind == "regularized") {
    L = regularize(make_basic(phi_on(ones)), c.get_double("asd", "lambda", 0.5));
  } else if (kind == "composed_antisym") {
    SpMat A(dofs, dofs);
    if (dofs >= 2) {
      const double s = c.get_double("asd", "skew", 1.0);
      A.insert(0, 1) = s;
      A.insert(1, 0) = -s;
    }
    L = compose_antisym(phi_on(ones), A);
  } else if (kind == "composed_boundary") {
    if (dofs < 2) throw ConfigError("[asd] composed_boundary needs dofs >= 2");
    const Grid g = build_grid(1, {Interval{0.0, 1.0}, Interval{}}, {dofs, 1});
    VectorFieldSpec a;
    a.components.push_back(parse_field_expression("1", 1));
    L = compose_skew_boundary(make_basic(phi_on(g.weights())), build_transport(g, a));
  } else {
    throw ConfigError("[asd] kind must be basic, broken_sign, regularized, composed_antisym or composed_boundary, got '" +
                      kind + "'");
  }
  const AsdVerifyResult r = asd_verify(L, dofs, vo);
  const bool ok = r.max_residual <= bound;
  char buf[200];
  std::snprintf(buf, sizeof buf, "%s on %d dof(s), %d samples per axis: residual %.3e (bound %.1e): %s\n",
                kind.c_str(), dofs, vo.samples, r.max_residual, bound, ok ? "ok" : "violated");
  out << buf;
  Outcome o;
  o.code = ok ? kExitSuccess : kExitPropertyViolated;
  o.report["kind"] = kind;
  o.report["dofs"] = dofs;
  o.report["samples"] = vo.samples;
  o.report["max_residual"] = r.max_residual;
  o.report["evaluations"] = r.evaluations;
  o.report["bound"] = bound;
  o.report["passed"] = ok;
  return o;
}

Outcome solve_stationary_cmd(Config& c, std::ostream& out, std::map<std::string, std::string>& files) {
  const StationaryProblem pr = stationary_from_config(c);
  StationaryOptions so;
  so.tol = c.get_double("solver", "tol", so.tol);
  so.max_iter = c.get_int("solver", "max_iter", so.max_iter);
  so.grad_tol = c.get_double("solver", "grad_tol", so.grad_tol);
  const StationaryResult r = solve_stationary(pr, so);
  const Certificate& cert = r.certificate;
  char buf[320];
  std::snprintf(buf, sizeof buf,
                "I = %.3e (fenchel gap %.3e, inflow trace %.3e), pde residual %.3e, %d iterations, converged: %s\n",
                cert.I_total, cert.fenchel_gap, cert.inflow_trace_sq, cert.pde_residual_linf, cert.iterations,
                cert.converged ? "yes" : "no");
  out << buf;
  Outcome o;
  o.code = cert.converged ? kExitSuccess : kExitSolveFailure;
  o.report["I_total"] = cert.I_total;
  o.report["fenchel_gap"] = cert.fenchel_gap;
  o.report["inflow_trace_sq"] = cert.inflow_trace_sq;
  o.report["pde_residual_linf"] = cert.pde_residual_linf;
  o.report["iterations"] = cert.iterations;
  o.report["converged"] = cert.converged;
  files["solution.csv"] = solution_csv(pr.grid, r.v);

  if (c.has("oracle", "file")) {
    std::filesystem::path path = c.get("oracle", "file");
    if (path.is_relative() && !c.base_dir().empty()) path = std::filesystem::path(c.base_dir()) / path;
    const double tol = c.get_double("oracle", "tol", 1e-8);
    const double err = (r.v - read_oracle(path.string(), pr.grid)).lpNorm<Eigen::Infinity>();
    const bool ok = err <= tol;
    std::snprintf(buf, sizeof buf, "oracle max difference %.3e (tol %.1e): %s\n", err, tol, ok ? "ok" : "violated");
    out << buf;
    if (!ok && o.code == kExitSuccess) o.code = kExitPropertyViolated;
  }
  return o;
}

Outcome solve_evolution_cmd(Config& c, std::ostream& out, std::map<std::string, std::string>& files) {
  const EvolutionProblem pr = evolution_from_config(c);
  const Scheme scheme = scheme_from(c.get("solver", "scheme", "prox"));
  EvolutionOptions eo;
  eo.tol = c.get_double("solver", "tol", eo.tol);
  eo.max_iter = c.get_int("solver", "max_iter", eo.max_iter);
  const Expression alt = parse_field_expression(c.get("problem", "initial_alt", "0"), pr.grid.dim());

  const EvolutionModel model(pr);
  const Vec u0 = initial_field(model, pr.initial);
  const Vec u1 = initial_field(model, alt);
  Outcome o;
  o.report["scheme"] = scheme_name(scheme);
  o.report["N"] = pr.steps;
  o.report["dt"] = pr.T / pr.steps;
  o.report["omega"] = pr.omega;
  Trajectory tr;
  char buf[200];
  if (scheme == Scheme::Spacetime) {
    const SpacetimeResult r = solve_spacetime(model, u0, pr.T, pr.steps, eo);
    tr = r.trajectory;
    o.report["I_total"] = r.I_total;
    std::snprintf(buf, sizeof buf, "spacetime: I = %.3e after %d iterations\n", r.I_total, r.iterations);
  } else {
    const ProxResult r = solve_prox_stepping(model, u0, pr.T, pr.steps, eo);
    tr = r.trajectory;
    o.report["max_step_certificate"] = r.max_step_certificate;
    std::snprintf(buf, sizeof buf, "prox: %d steps, max step certificate %.3e\n", pr.steps, r.max_step_certificate);
  }
  out << buf;
  const Trajectory other = solve_evolution(model, u1, pr.T, pr.steps, scheme, eo);
  const Vec& w = model.grid().weights();
  Json ratios = Json::array();
  double worst = 0.0;
  for (int k = 0; k < pr.steps; ++k) {
    const double d0 = weighted_norm(w, tr.u[k] - other.u[k]);
    const double d1 = weighted_norm(w, tr.u[k + 1] - other.u[k + 1]);
    const double q = d0 > 0.0 ? d1 / d0 : 0.0;
    ratios.push_back(q);
    worst = std::max(worst, q);
  }
  o.report["contraction_ratios"] = ratios;
  std::snprintf(buf, sizeof buf, "max contraction ratio %.6f (e^{-omega dt/2} = %.6f)\n", worst,
                std::exp(-pr.omega * (pr.T / pr.steps) / 2.0));
  out << buf;
  files["trajectory.csv"] = trajectory_csv(tr);
  return o;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Grid grid_from_config(Config& c) {
  const int dim = c.get_int("grid", "dim", 1);
  if (dim != 1 && dim != 2) throw ConfigError("[grid] dim must be 1 or 2");
  const Interval x = interval_from("x", c.get("grid", "x", "0 1"));
  const int nx = c.get_int("grid", "nx");
  if (dim == 1) {
    if (c.has("grid", "y") || c.has("grid", "ny")) throw ConfigError("[grid] y and ny apply to 2-D grids only");
    return build_grid(1, {x, Interval{}}, {nx, 1});
  }
  const Interval y = interval_from("y", c.get("grid", "y", "0 1"));
  const int ny = c.get_int("grid", "ny", nx);
  return build_grid(2, {x, y}, {nx, ny});
}

VectorFieldSpec vectorfield_from_config(Config& c, int dim) {
  VectorFieldSpec a;
  a.components.push_back(parse_field_expression(c.get("vectorfield", "ax"), dim));
  if (dim == 2) a.components.push_back(parse_field_expression(c.get("vectorfield", "ay"), dim));
  else if (c.has("vectorfield", "ay")) throw ConfigError("[vectorfield] ay applies to 2-D grids only");
  return a;
}

StationaryProblem stationary_from_config(Config& c) {
  StationaryProblem pr;
  pr.grid = grid_from_config(c);
  const int dim = pr.grid.dim();
  pr.a = vectorfield_from_config(c, dim);
  pr.a0 = parse_field_expression(c.get("coefficients", "a0", "0"), dim);
  pr.f = parse_field_expression(c.get("coefficients", "f", "0"), dim);
  pr.tau = parse_field_expression(c.get("coefficients", "tau", "0"), dim);
  pr.p = c.get_double("potential", "p", 2.0);
  pr.m = c.get_double("potential", "m", 2.0);
  pr.alpha = c.get_double("potential", "alpha", 1.0);
  pr.variant = stationary_variant_from(c.get("problem", "variant", "pure_transport"));
  return pr;
}

EvolutionProblem evolution_from_config(Config& c) {
  EvolutionProblem pr;
  pr.grid = grid_from_config(c);
  const int dim = pr.grid.dim();
  pr.a = vectorfield_from_config(c, dim);
  pr.a0 = parse_field_expression(c.get("coefficients", "a0", "0"), dim);
  if (c.has("coefficients", "f") || c.has("coefficients", "tau"))
    throw ConfigError("[coefficients] f and tau apply to stationary problems only");
  pr.p = c.get_double("potential", "p", 2.0);
  pr.alpha = c.get_double("potential", "alpha", 1.0);
  if (c.has("potential", "m")) throw ConfigError("[potential] m applies to stationary problems only");
  pr.variant = evolution_variant_from(c.get("problem", "variant", "diffusive"));
  pr.omega = c.get_double("problem", "omega", 0.0);
  pr.T = c.get_double("problem", "T");
  pr.steps = c.get_int("problem", "steps");
  pr.initial = parse_field_expression(c.get("problem", "initial"), dim);
  return pr;
}

Vec initial_field(const EvolutionModel& model, const Expression& e) {
  Vec u = e.evaluate(model.grid());
  if (model.variant() == EvolutionVariant::Diffusive && u.allFinite()) {
    const double floor = 1e-12 * u.cwiseAbs().maxCoeff();
    for (int i = 0; i < u.size(); ++i)
      if (model.phi().is_fixed(i) && std::abs(u[i]) <= floor) u[i] = 0.0;
  }
  return u;
}

int run_command(const std::string& command, const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  Outcome o;
  std::map<std::string, std::string> files;
  Config c;
  try {
    if (opts.config_path.empty()) throw ConfigError("--config is required");
    c = Config::load(opts.config_path);
    if (c.empty()) throw ConfigError(opts.config_path + ": config is empty");
    if (command == "check-skew")
      o = check_skew(c, opts.seed, out);
    else if (command == "verify-asd")
      o = verify_asd(c, out);
    else if (command == "solve-stationary")
      o = solve_stationary_cmd(c, out, files);
    else if (command == "solve-evolution")
      o = solve_evolution_cmd(c, out, files);
    else
      throw ConfigError("unknown command '" + command + "'");
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const PreconditionError& e) {
    err << "precondition violated: " << e.what() << "\n";
    return kExitPrecondition;
  } catch (const SolveError& e) {
    err << "solve failed: " << e.what() << "\n";
    return kExitSolveFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitSolveFailure;
  }

  if (!opts.out_dir.empty()) {
    try {
      const std::filesystem::path dir(opts.out_dir);
      std::filesystem::create_directories(dir);
      for (const auto& [name, text] : files) write_file(dir / name, text);
      write_file(dir / "report.json", o.report.dump(2) + "\n");
      write_file(dir / "manifest.cfg",
                 "# command = " + command + "\n# seed = " + std::to_string(opts.seed) + "\n\n" + c.manifest());
    } catch (const std::exception& e) {
      err << "cannot write outputs: " << e.what() << "\n";
      return kExitSolveFailure;
    }
  }
  return o.code;
}

}  // namespace selfdual
