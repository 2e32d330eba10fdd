#include "threespheres/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "threespheres/bound_verifier.hpp"
#include "threespheres/errors.hpp"
#include "threespheres/field_io.hpp"
#include "threespheres/inequality.hpp"
#include "threespheres/plaplace.hpp"
#include "threespheres/radial_barrier.hpp"

namespace threespheres::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_double(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw ConfigError("--" + key + ": expected a number, got '" + text + "'");
  }
  return v;
}

long long parse_int(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw ConfigError("--" + key + ": expected an integer, got '" + text + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  return parts;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::string config_key(const std::string& flag) {
  std::string key = flag;
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

// Options of one subcommand. Flags are captured as text and converted on
// lookup; a flag that was given wins over the same key in the config file.
class Options {
 public:
  explicit Options(CLI::App& app) : app_(app) {}

  void add(const std::string& name, const std::string& help) {
    app_.add_option("--" + name, text_[name], help);
  }
  void set_config(json cfg) { cfg_ = std::move(cfg); }

  bool given(const std::string& name) const {
    return app_.count("--" + name) > 0 || cfg_.contains(config_key(name));
  }

  double number(const std::string& name, std::optional<double> fallback = std::nullopt) const {
    if (flagged(name)) return parse_double(name, text_.at(name));
    if (const json* j = config(name)) {
      if (!j->is_number()) throw ConfigError(config_key(name) + ": expected a number");
      return j->get<double>();
    }
    return require(name, fallback);
  }

  int integer(const std::string& name, std::optional<int> fallback = std::nullopt) const {
    long long v = 0;
    if (flagged(name)) {
      v = parse_int(name, text_.at(name));
    } else if (const json* j = config(name)) {
      if (!j->is_number_integer()) throw ConfigError(config_key(name) + ": expected an integer");
      v = j->get<long long>();
    } else {
      return require(name, fallback);
    }
    if (v < -1000000000LL || v > 1000000000LL) throw ConfigError(name + ": integer out of range");
    return static_cast<int>(v);
  }

  std::string string(const std::string& name,
                     std::optional<std::string> fallback = std::nullopt) const {
    if (flagged(name)) return text_.at(name);
    if (const json* j = config(name)) {
      if (!j->is_string()) throw ConfigError(config_key(name) + ": expected a string");
      return j->get<std::string>();
    }
    return require(name, fallback);
  }

  std::vector<double> numbers(const std::string& name,
                              std::optional<std::vector<double>> fallback = std::nullopt) const {
    if (flagged(name)) {
      std::vector<double> out;
      for (const std::string& part : split(text_.at(name), ',')) {
        out.push_back(parse_double(name, trim(part)));
      }
      return out;
    }
    if (const json* j = config(name)) {
      if (!j->is_array()) throw ConfigError(config_key(name) + ": expected an array");
      std::vector<double> out;
      for (const json& e : *j) {
        if (!e.is_number()) throw ConfigError(config_key(name) + ": expected numbers");
        out.push_back(e.get<double>());
      }
      return out;
    }
    return require(name, fallback);
  }

 private:
  bool flagged(const std::string& name) const { return app_.count("--" + name) > 0; }

  const json* config(const std::string& name) const {
    const auto it = cfg_.find(config_key(name));
    return it == cfg_.end() ? nullptr : &*it;
  }

  template <class T>
  static T require(const std::string& name, const std::optional<T>& fallback) {
    if (!fallback) throw ConfigError("missing required parameter --" + name);
    return *fallback;
  }

  CLI::App& app_;
  std::map<std::string, std::string> text_;
  json cfg_ = json::object();
};

struct Context {
  fs::path out_dir = ".";
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;

  fs::path resolve(const std::string& path) const {
    const fs::path p(path);
    return p.is_absolute() ? p : out_dir / p;
  }
};

// Writes `text` to the configured output file, or to the context stream
// when no file was requested.
void emit(const Context& ctx, const std::string& path, const std::string& text) {
  if (path.empty()) {
    *ctx.out << text;
    return;
  }
  const fs::path target = ctx.resolve(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  std::ofstream f(target, std::ios::binary);
  if (!f) throw ConfigError("cannot open output file " + target.string());
  f << text;
}

KAnnulus annulus_from(const Options& o) {
  std::optional<double> slab;
  if (o.given("slab-halfwidth")) slab = o.number("slab-halfwidth");
  return KAnnulus::make(o.integer("n", 2), o.integer("k", 2), o.number("alpha", 1.0),
                        o.number("beta", 2.0), slab);
}

// ---------------------------------------------------------------- barrier

int cmd_barrier(const Options& o, const Context& ctx) {
  BarrierSpec spec{o.integer("n", 2), o.integer("k", 2), o.number("p", 2.0), o.number("r", 1.0),
                   o.number("R", 2.0)};
  spec.validate();
  if (spec.k > spec.n) throw ConfigError("barrier: k must not exceed n");
  const int samples = o.integer("samples", 11);
  if (samples < 2) throw ConfigError("barrier: --samples must be >= 2");
  const double t_end = o.number("t-max", spec.R);
  if (!(t_end >= spec.R) || !std::isfinite(t_end)) {
    throw ConfigError("barrier: --t-max must be finite and >= R");
  }
  const Extension ext = t_end > spec.R ? Extension::continuation : Extension::none;

  std::ostringstream csv;
  csv << "t,u0\n";
  for (int i = 0; i < samples; ++i) {
    const double t =
        i == samples - 1 ? t_end : spec.r + (t_end - spec.r) * i / (samples - 1);
    csv << fmt(t) << ',' << fmt(barrier_u0(spec, t, ext)) << '\n';
  }
  emit(ctx, o.string("output", ""), csv.str());
  return kExitPass;
}

// ------------------------------------------------------------------ solve

BoundaryData boundary_from(const std::string& selector, const KAnnulus& annulus, double p) {
  const auto barrier_spec = [&] {
    if (!(annulus.alpha() > 0.0)) {
      throw ConfigError("boundary '" + selector + "' needs alpha > 0");
    }
    return BarrierSpec{annulus.n(), annulus.k(), p, annulus.alpha(), annulus.beta()};
  };
  if (selector == "barrier") return barrier_boundary(barrier_spec());
  const std::string constant = "constant:";
  if (selector.rfind(constant, 0) == 0) {
    return constant_boundary(parse_double("boundary", selector.substr(constant.size())));
  }
  const std::string perturbed = "perturbed-barrier:";
  if (selector.rfind(perturbed, 0) == 0) {
    const auto parts = split(selector.substr(perturbed.size()), ',');
    if (parts.size() < 2 || parts.size() > 3) {
      throw ConfigError("boundary: expected perturbed-barrier:amplitude,mode[,phase]");
    }
    const double amplitude = parse_double("boundary", trim(parts[0]));
    const long long mode = parse_int("boundary", trim(parts[1]));
    const double phase = parts.size() == 3 ? parse_double("boundary", trim(parts[2])) : 0.0;
    if (mode < 0 || mode > 1000) throw ConfigError("boundary: mode must lie in [0, 1000]");
    return perturbed_barrier_boundary(barrier_spec(), amplitude, static_cast<int>(mode), phase,
                                      0.5 * (annulus.alpha() + annulus.beta()));
  }
  throw ConfigError("boundary: unknown selector '" + selector +
                    "' (barrier | constant:c | perturbed-barrier:amplitude,mode)");
}

json report_json(const SolveReport& r, const std::vector<double>& schedule) {
  json stages = json::array();
  for (std::size_t s = 0; s < r.stage_energies.size(); ++s) {
    const auto& e = r.stage_energies[s];
    stages.push_back({{"epsilon", s < schedule.size() ? schedule[s] : 0.0},
                      {"accepted_steps", e.empty() ? 0 : e.size() - 1},
                      {"final_energy", e.empty() ? 0.0 : e.back()}});
  }
  return {{"energy", r.energy},
          {"iterations", r.iterations},
          {"gradient_norm", r.gradient_norm},
          {"initial_gradient_norm", r.initial_gradient_norm},
          {"weak_residual", r.weak_residual},
          {"converged", r.converged},
          {"stop_reason", r.stop_reason},
          {"stages", stages}};
}

int cmd_solve(const Options& o, const Context& ctx) {
  PLaplaceProblem problem;
  problem.annulus = annulus_from(o);
  problem.p = o.number("p", 2.0);
  if (!(problem.p > 1.0) || problem.p > kPMax) throw ConfigError("solve: p must lie in (1, 10]");
  problem.cells = o.integer("cells", 64);
  problem.epsilon_schedule = o.numbers("epsilon-schedule", problem.epsilon_schedule);
  problem.tolerance = o.number("tolerance", problem.tolerance);
  problem.max_iterations = o.integer("max-iterations", problem.max_iterations);
  const std::string method = o.string("method", "newton");
  if (method == "newton") {
    problem.method = Minimizer::newton;
  } else if (method == "descent") {
    problem.method = Minimizer::descent;
  } else {
    throw ConfigError("solve: --method must be newton or descent");
  }
  const std::string selector = o.string("boundary", "barrier");
  problem.boundary = boundary_from(selector, problem.annulus, problem.p);
  problem.validate();

  const std::string output = o.string("output", "field.bin");
  const SolveResult result = solve_dirichlet(problem);
  const json report = report_json(result.report, problem.epsilon_schedule);

  const fs::path field_path = ctx.resolve(output);
  if (field_path.has_parent_path()) fs::create_directories(field_path.parent_path());
  write_field(field_path, result.field,
              {{"annulus", annulus_to_json(problem.annulus)},
               {"p", problem.p},
               {"boundary", selector},
               {"solve_report", report}});
  fs::path report_path = field_path;
  report_path += ".report.json";
  std::ofstream(report_path) << report.dump(2) << '\n';
  *ctx.out << report.dump(2) << '\n';
  return result.report.converged ? kExitPass : kExitVerdictFail;
}

// ----------------------------------------------------------------- verify

std::vector<double> t_list_from(const Options& o, double r, double R) {
  std::vector<double> ts;
  if (o.given("t")) {
    ts = o.numbers("t");
  } else {
    const int count = o.integer("t-count", 20);
    if (count < 1) throw ConfigError("verify: --t-count must be >= 1");
    for (int i = 1; i <= count; ++i) ts.push_back(r + (R - r) * i / (count + 1));
  }
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  for (double t : ts) {
    if (!(t > r && t < R)) throw ConfigError("verify: every t must satisfy r < t < R");
  }
  return ts;
}

json conditions_json(const GridField& field, const KAnnulus& annulus, const BoundReport& rep,
                     const std::vector<double>& ts, int density, std::ostringstream& profile_csv) {
  const BarrierSpec spec{annulus.n(), annulus.k(), rep.p, rep.r, rep.R};
  const GridField v = normalize(field, rep.Mr, rep.MR);
  const std::vector<Point> grad = central_gradient(v);

  WeightProfile profile;
  std::vector<VolumeSample> volumes;
  for (double t : ts) {
    profile.t.push_back(t);
    profile.H.push_back(H_of_t(v, grad, spec, annulus, t, density));
    volumes.push_back({t, weighted_volume_integral(v, grad, spec, annulus, rep.r, t)});
  }
  json out = {{"H", profile.H}};
  if (ts.size() < 2) {
    out["note"] = "fewer than two radii; growth diagnostics skipped";
    profile_csv << "t,H\n" << fmt(ts[0]) << ',' << fmt(profile.H[0]) << '\n';
    return out;
  }

  const DivergenceDiagnostic star4 = condition_star4(profile);
  const GrowthDiagnostic star4b = condition_star4b(volumes, profile);
  const ExtremalProfile eta = extremal_eta(profile);
  out["condition_4"] = {{"partial_integrals", star4.partial},
                        {"fitted_exponent", star4.fitted_exponent},
                        {"fit_r2", star4.fit_r2},
                        {"verdict", star4.verdict},
                        {"exact", star4.exact},
                        {"note", star4.note}};
  out["condition_6"] = {{"S", star4b.S},
                        {"Q", star4b.Q},
                        {"fitted_slope", star4b.fitted_slope},
                        {"verdict", star4b.verdict},
                        {"exact", star4b.exact}};
  out["hoelder"] = {{"slack", star4b.hest_slack}, {"holds", star4b.hest_holds}};
  out["extremal"] = {{"eta", eta.eta},
                     {"capacity", eta.capacity},
                     {"degenerate", eta.degenerate},
                     {"energy", profile_energy(profile, eta.eta)}};

  profile_csv << "t,H,partial_integral,eta,Q\n";
  for (std::size_t i = 0; i < ts.size(); ++i) {
    profile_csv << fmt(ts[i]) << ',' << fmt(profile.H[i]) << ',' << fmt(star4.partial[i]) << ','
                << fmt(eta.eta[i]) << ',' << fmt(star4b.Q[i]) << '\n';
  }
  return out;
}

int cmd_verify(const Options& o, const Context& ctx) {
  const LoadedField loaded = read_field(o.string("field"));
  if (!loaded.sidecar.contains("annulus")) {
    throw ConfigError("verify: field sidecar has no annulus record");
  }
  const KAnnulus annulus = annulus_from_json(loaded.sidecar.at("annulus"));
  std::optional<double> sidecar_p;
  if (loaded.sidecar.contains("p") && loaded.sidecar.at("p").is_number()) {
    sidecar_p = loaded.sidecar.at("p").get<double>();
  }

  BoundCheckConfig config;
  config.p = o.number("p", sidecar_p);
  config.r = o.number("r", annulus.alpha());
  config.R = o.number("R", annulus.beta());
  config.density = o.integer("density", config.density);
  config.tolerance = o.number("tolerance", config.tolerance);
  if (config.density < 4) throw ConfigError("verify: --density must be >= 4");
  BarrierSpec{annulus.n(), annulus.k(), config.p, config.r, config.R}.validate();
  config.t_list = t_list_from(o, config.r, config.R);

  const BoundReport rep = three_spheres_check(loaded.field, annulus, config);
  std::ostringstream profile_csv;
  const json conditions =
      conditions_json(loaded.field, annulus, rep, config.t_list, config.density, profile_csv);
  const bool hoelder_ok =
      !conditions.contains("hoelder") || conditions["hoelder"]["holds"].get<bool>();

  json entries = json::array();
  std::ostringstream csv;
  csv << "t,M,bound,margin\n";
  for (const BoundEntry& e : rep.entries) {
    entries.push_back({{"t", e.t},
                       {"M", e.M},
                       {"bound", e.bound},
                       {"margin", e.margin},
                       {"normalized_margin", e.normalized_margin}});
    csv << fmt(e.t) << ',' << fmt(e.M) << ',' << fmt(e.bound) << ',' << fmt(e.margin) << '\n';
  }
  const json doc = {{"r", rep.r},
                    {"R", rep.R},
                    {"M_r", rep.Mr},
                    {"M_R", rep.MR},
                    {"p", rep.p},
                    {"n", rep.n},
                    {"k", rep.k},
                    {"truncated", rep.truncated},
                    {"slab_halfwidth", rep.slab_halfwidth},
                    {"density", rep.density},
                    {"tolerance", rep.tolerance},
                    {"entries", entries},
                    {"worst_normalized_margin", rep.worst_margin()},
                    {"pass", rep.pass},
                    {"note", rep.note},
                    {"conditions", conditions}};

  const std::string prefix = o.string("output", "verify");
  emit(ctx, prefix + ".json", doc.dump(2) + "\n");
  emit(ctx, prefix + ".csv", csv.str());
  emit(ctx, prefix + "_profile.csv", profile_csv.str());
  *ctx.out << doc.dump(2) << '\n';
  return rep.pass && hoelder_ok ? kExitPass : kExitVerdictFail;
}

// -------------------------------------------------------- inequality-scan

struct Worst {
  std::string name;
  double margin = std::numeric_limits<double>::infinity();
  double a = 0.0, b = 0.0, p = 0.0;
  long long samples = 0;
  long long violations = 0;

  void record(double m, double a_, double b_, double p_) {
    ++samples;
    if (m < -1e-12) ++violations;
    if (m < margin) {
      margin = m;
      a = a_;
      b = b_;
      p = p_;
    }
  }
};

int cmd_inequality_scan(const Options& o, const Context& ctx) {
  const long long samples = o.integer("samples", 100000);
  const double p_min = o.number("p-min", 1.01);
  const double p_max = o.number("p-max", 10.0);
  const double a_min = o.number("a-min", 1e-3);
  const double a_max = o.number("a-max", 1e3);
  const int seed = o.integer("seed", 0);
  if (samples < 1) throw ConfigError("inequality-scan: --samples must be >= 1");
  if (!(p_min > 1.0 && p_max >= p_min && p_max <= kPMax)) {
    throw ConfigError("inequality-scan: need 1 < p-min <= p-max <= 10");
  }
  if (!(a_min > 0.0 && a_max > a_min)) {
    throw ConfigError("inequality-scan: need 0 < a-min < a-max");
  }

  Worst eq9_lower{"eq9_lower"}, eq9_upper{"eq9_upper"};
  Worst eq10_lower{"eq10_lower"}, eq10_upper{"eq10_upper"};
  Worst eq11_lower{"eq11_lower"}, eq11_upper{"eq11_upper"};
  Worst env_lower{"ip_envelope_lower"}, env_upper{"ip_envelope_upper"};

  std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
  std::uniform_real_distribution<double> log_ab(std::log(a_min), std::log(a_max));
  std::uniform_real_distribution<double> pick_p(p_min, p_max);
  std::bernoulli_distribution opposite(0.5);
  for (long long i = 0; i < samples; ++i) {
    const double a = std::exp(log_ab(rng));
    const double b = std::exp(log_ab(rng));
    const double p = pick_p(rng);
    const bool opp = opposite(rng);
    if (a == b) continue;
    const SampleVerdict s = verify_sample(a, b, p);
    eq9_lower.record(s.lower9, a, b, p);
    eq9_upper.record(s.upper9, a, b, p);
    if (s.high_branch) {
      eq10_lower.record(s.lower10, a, b, p);
      eq10_upper.record(s.upper10, a, b, p);
    } else {
      eq11_lower.record(s.lower10, a, b, p);
      eq11_upper.record(s.upper10, a, b, p);
    }
    const double I = I_p_collinear_closed_form(a, b, opp, p);
    const auto [lo, hi] = I_p_bounds(a, b, p);
    env_lower.record(I / lo - 1.0, a, b, p);
    env_upper.record(1.0 - I / hi, a, b, p);
  }

  std::ostringstream csv;
  csv << "inequality,samples,worst_margin,a,b,p,violations\n";
  long long violations = 0;
  for (const Worst* w : {&eq9_lower, &eq9_upper, &eq10_lower, &eq10_upper, &eq11_lower,
                         &eq11_upper, &env_lower, &env_upper}) {
    violations += w->violations;
    if (w->samples == 0) {
      csv << w->name << ",0,,,,,0\n";
      continue;
    }
    csv << w->name << ',' << w->samples << ',' << fmt(w->margin) << ',' << fmt(w->a) << ','
        << fmt(w->b) << ',' << fmt(w->p) << ',' << w->violations << '\n';
  }
  emit(ctx, o.string("output", ""), csv.str());
  return violations == 0 ? kExitPass : kExitVerdictFail;
}

// --------------------------------------------------------------- hadamard

std::complex<double> parse_coefficient(const std::string& token) {
  const auto parts = split(token, ':');
  if (parts.empty() || parts.size() > 2) {
    throw ConfigError("hadamard: coefficient '" + token + "' is not re or re:im");
  }
  const double re = parse_double("coeffs", trim(parts[0]));
  const double im = parts.size() == 2 ? parse_double("coeffs", trim(parts[1])) : 0.0;
  return {re, im};
}

std::vector<std::complex<double>> coefficients_from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("hadamard: cannot open " + path);
  std::vector<std::complex<double>> out;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    const auto cols = split(line, ',');
    if (first) {
      first = false;
      // A leading non-numeric row is a header.
      char* end = nullptr;
      const std::string c0 = trim(cols[0]);
      std::strtod(c0.c_str(), &end);
      if (end == c0.c_str()) continue;
    }
    if (cols.size() > 2) throw ConfigError("hadamard: CSV rows must be re[,im]");
    const double re = parse_double("coeffs-csv", trim(cols[0]));
    const double im = cols.size() == 2 ? parse_double("coeffs-csv", trim(cols[1])) : 0.0;
    out.emplace_back(re, im);
  }
  return out;
}

int cmd_hadamard(const Options& o, const Context& ctx) {
  LaurentSeries f;
  f.lowest_power = o.integer("lowest-power", 0);
  if (o.given("coeffs") == o.given("coeffs-csv")) {
    throw ConfigError("hadamard: give exactly one of --coeffs and --coeffs-csv");
  }
  if (o.given("coeffs")) {
    for (const std::string& tok : split(o.string("coeffs"), ',')) {
      f.coefficients.push_back(parse_coefficient(trim(tok)));
    }
  } else {
    f.coefficients = coefficients_from_csv(o.string("coeffs-csv"));
  }
  if (f.coefficients.empty()) throw ConfigError("hadamard: no coefficients");
  const double r1 = o.number("r1", 0.5), r2 = o.number("r2", 1.0), r3 = o.number("r3", 2.0);
  const int density = o.integer("density", 4096);
  const double slack_tol = o.number("slack-tolerance", 1e-10);

  const HadamardVerdict v = hadamard_classical_check(f, r1, r2, r3, density, slack_tol);
  const json doc = {{"r", {r1, r2, r3}},
                    {"M", {v.M1, v.M2, v.M3}},
                    {"lhs", v.lhs},
                    {"rhs", v.rhs},
                    {"slack", v.slack},
                    {"convexity_gap", v.convexity_gap},
                    {"density", density},
                    {"pass", v.pass}};
  emit(ctx, o.string("output", ""), doc.dump(2) + "\n");
  return v.pass ? kExitPass : kExitVerdictFail;
}

// ------------------------------------------------------------------ study

int cmd_study(const Options& o, const Context& ctx) {
  const KAnnulus annulus = annulus_from(o);
  const double p = o.number("p", 2.0);
  if (!(annulus.alpha() > 0.0)) throw ConfigError("study: alpha must be positive");
  const BarrierSpec spec{annulus.n(), annulus.k(), p, annulus.alpha(), annulus.beta()};
  spec.validate();
  std::vector<int> cells;
  for (double c : o.numbers("cells", std::vector<double>{32, 64, 128, 256})) {
    if (c != std::floor(c) || c < 8 || c > 4096) {
      throw ConfigError("study: --cells entries must be integers in [8, 4096]");
    }
    cells.push_back(static_cast<int>(c));
  }
  if (!std::is_sorted(cells.begin(), cells.end()) ||
      std::adjacent_find(cells.begin(), cells.end()) != cells.end()) {
    throw ConfigError("study: --cells must be strictly increasing");
  }
  const double tolerance = o.number("tolerance", 1e-10);
  const RadialProfile oracle = solve_radial_ode(spec.r, spec.R, spec.k, p, 0.0, 1.0);

  std::ostringstream csv;
  csv << "cells,h,max_error,rms_error,order,iterations,converged\n";
  bool ok = true;
  double prev_err = 0.0;
  int prev_cells = 0;
  for (int c : cells) {
    PLaplaceProblem problem;
    problem.annulus = annulus;
    problem.p = p;
    problem.cells = c;
    problem.tolerance = tolerance;
    problem.boundary = barrier_boundary(spec);
    const SolveResult res = solve_dirichlet(problem);

    double max_err = 0.0, sq = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < res.field.values.size(); ++i) {
      if (res.field.mask[i] != NodeKind::interior) continue;
      const double t = d_k(res.field.grid.position(i), annulus.n(), annulus.k());
      const double e = std::abs(res.field.values[i] - oracle(t));
      max_err = std::max(max_err, e);
      sq += e * e;
      ++count;
    }
    const double rms = count ? std::sqrt(sq / count) : 0.0;
    std::string order;
    if (prev_cells > 0) {
      order = fmt(std::log(prev_err / max_err) / std::log(static_cast<double>(c) / prev_cells));
      ok = ok && max_err < prev_err;
    }
    ok = ok && res.report.converged;
    csv << c << ',' << fmt(res.field.grid.spacing[0]) << ',' << fmt(max_err) << ',' << fmt(rms)
        << ',' << order << ',' << res.report.iterations << ','
        << (res.report.converged ? "true" : "false") << '\n';
    prev_err = max_err;
    prev_cells = c;
  }
  emit(ctx, o.string("output", ""), csv.str());
  return ok ? kExitPass : kExitVerdictFail;
}

// ---------------------------------------------------------------- driver

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
  }
  if (!cfg.is_object()) throw ConfigError("config file must hold a JSON object");
  return cfg;
}

int error_exit(std::ostream& out, int code, const std::string& kind, const std::string& msg) {
  out << json{{"error", kind}, {"message", msg}, {"exit_code", code}}.dump() << '\n';
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Three-spheres toolkit for p-harmonic functions on k-annuli", "threespheres"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::string out_dir_flag;
  int threads = 1;
  app.add_option("--config", config_path, "JSON config file; flags override its keys");
  app.add_option("--out-dir", out_dir_flag, "Directory for output files");
  app.add_option("--threads", threads, "Parallelism cap (computations run on one thread)");

  struct Sub {
    CLI::App* app;
    std::unique_ptr<Options> opts;
    int (*fn)(const Options&, const Context&);
  };
  std::vector<Sub> subs;
  const auto make = [&](const std::string& name, const std::string& help,
                        int (*fn)(const Options&, const Context&),
                        std::vector<std::pair<std::string, std::string>> flags) {
    CLI::App* sub = app.add_subcommand(name, help);
    auto opts = std::make_unique<Options>(*sub);
    for (const auto& [flag, text] : flags) opts->add(flag, text);
    subs.push_back({sub, std::move(opts), fn});
  };

  const std::vector<std::pair<std::string, std::string>> annulus_flags = {
      {"n", "Dimension (2..4)"},
      {"k", "Symmetry index (1..n)"},
      {"alpha", "Inner radius"},
      {"beta", "Outer radius"},
      {"slab-halfwidth", "Half-width of the free directions when k < n"}};
  auto with_annulus = [&](std::vector<std::pair<std::string, std::string>> extra) {
    extra.insert(extra.begin(), annulus_flags.begin(), annulus_flags.end());
    return extra;
  };

  make("barrier", "Tabulate the radial barrier u0 as CSV (t,u0)", cmd_barrier,
       {{"n", "Dimension"},
        {"k", "Symmetry index"},
        {"p", "Exponent in (1, 10]"},
        {"r", "Inner radius"},
        {"R", "Outer radius"},
        {"samples", "Number of rows (>= 2)"},
        {"t-max", "Last t; values past R use the continued closed form"},
        {"output", "CSV file (default: stdout)"}});
  make("solve", "Solve the Dirichlet problem and write the field", cmd_solve,
       with_annulus({{"p", "Exponent in (1, 10]"},
                     {"cells", "Cells per axis (>= 8)"},
                     {"boundary", "barrier | constant:c | perturbed-barrier:amplitude,mode[,phase]"},
                     {"epsilon-schedule", "Comma-separated decreasing regularizations"},
                     {"tolerance", "Relative gradient tolerance"},
                     {"max-iterations", "Iteration cap"},
                     {"method", "newton | descent"},
                     {"output", "Field file (sidecar and report written next to it)"}}));
  make("verify", "Check the three-spheres bound and growth diagnostics on a field", cmd_verify,
       {{"field", "Field binary written by solve"},
        {"p", "Exponent (default: from the sidecar)"},
        {"r", "Inner radius (default: annulus alpha)"},
        {"R", "Outer radius (default: annulus beta)"},
        {"t", "Comma-separated radii strictly between r and R"},
        {"t-count", "Number of equally spaced radii when --t is absent"},
        {"density", "Sphere sampling density"},
        {"tolerance", "Allowed negative normalized margin"},
        {"output", "Output prefix for .json, .csv and _profile.csv"}});
  make("inequality-scan", "Random sampling of the difference-quotient inequalities",
       cmd_inequality_scan,
       {{"samples", "Number of (a, b, p) samples"},
        {"p-min", "Smallest exponent"},
        {"p-max", "Largest exponent"},
        {"a-min", "Smallest magnitude (log-uniform)"},
        {"a-max", "Largest magnitude"},
        {"seed", "RNG seed"},
        {"output", "CSV file (default: stdout)"}});
  make("hadamard", "Classical three-circles check for a Laurent polynomial", cmd_hadamard,
       {{"coeffs", "Comma-separated coefficients, each re or re:im"},
        {"coeffs-csv", "CSV file with rows re[,im]"},
        {"lowest-power", "Power of the first coefficient"},
        {"r1", "Inner radius"},
        {"r2", "Middle radius"},
        {"r3", "Outer radius"},
        {"density", "Angular samples per circle"},
        {"slack-tolerance", "Relative tolerance on the log-form slack"},
        {"output", "JSON file (default: stdout)"}});
  make("study", "Grid-refinement convergence table against the radial oracle", cmd_study,
       with_annulus({{"p", "Exponent in (1, 10]"},
                     {"cells", "Comma-separated increasing cell counts"},
                     {"tolerance", "Relative gradient tolerance"},
                     {"output", "CSV file (default: stdout)"}}));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitPass;
  } catch (const CLI::ParseError& e) {
    return error_exit(out, kExitInvalidConfig, "invalid-arguments", e.what());
  }

  try {
    if (threads < 1) throw ConfigError("--threads must be >= 1");
    json cfg = json::object();
    if (!config_path.empty()) cfg = load_config(config_path);

    Context ctx;
    ctx.out = &out;
    ctx.err = &err;
    if (!out_dir_flag.empty()) {
      ctx.out_dir = out_dir_flag;
    } else if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') {
      ctx.out_dir = env;
    } else if (cfg.contains("out_dir")) {
      if (!cfg["out_dir"].is_string()) throw ConfigError("out_dir: expected a string");
      ctx.out_dir = cfg["out_dir"].get<std::string>();
    }

    for (Sub& s : subs) {
      if (!s.app->parsed()) continue;
      // A section named after the subcommand takes precedence over top-level keys.
      json section = cfg;
      if (cfg.contains(s.app->get_name()) && cfg[s.app->get_name()].is_object()) {
        for (const auto& [key, value] : cfg[s.app->get_name()].items()) section[key] = value;
      }
      s.opts->set_config(std::move(section));
      return s.fn(*s.opts, ctx);
    }
    return error_exit(out, kExitInvalidConfig, "invalid-arguments", "no subcommand given");
  } catch (const DegeneracyError& e) {
    return error_exit(out, kExitVerdictFail, "degenerate", e.what());
  } catch (const ConfigError& e) {
    return error_exit(out, kExitInvalidConfig, "invalid-config", e.what());
  } catch (const DomainError& e) {
    return error_exit(out, kExitInvalidConfig, "invalid-config", e.what());
  } catch (const nlohmann::json::exception& e) {
    return error_exit(out, kExitInvalidConfig, "invalid-config", e.what());
  } catch (const fs::filesystem_error& e) {
    return error_exit(out, kExitInvalidConfig, "io", e.what());
  } catch (const std::exception& e) {
    err << "threespheres: " << e.what() << '\n';
    return error_exit(out, kExitInvalidConfig, "failure", e.what());
  }
}

int main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace threespheres::cli
