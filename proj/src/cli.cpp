#include "nelson/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "nelson/parallel.hpp"

namespace nelson::cli {

namespace fs = std::filesystem;
using io::Json;

std::string to_string(Command c) {
  switch (c) {
    case Command::Coeffs: return "coeffs";
    case Command::SelfEnergy: return "selfenergy";
    case Command::Binding: return "binding";
    case Command::Vev: return "vev";
    case Command::Lemmas: return "lemmas";
    case Command::Sweep: return "sweep";
  }
  return "?";
}

Command command_from_string(const std::string& s) {
  for (Command c : {Command::Coeffs, Command::SelfEnergy, Command::Binding, Command::Vev, Command::Lemmas,
                    Command::Sweep}) {
    if (to_string(c) == s) return c;
  }
  throw ValidationError("unknown command \"" + s + "\"");
}

namespace {

bool grid_based(Command c) { return c != Command::Coeffs && c != Command::Binding; }

double parse_number(const std::string& text, const std::string& what) {
  const std::string t = text;
  if (t == "inf" || t == "infinity" || t == "+inf") return kInf;
  char* end = nullptr;
  const double x = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size()) throw ValidationError(what + ": cannot parse \"" + text + "\"");
  return x;
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    out.push_back(parse_number(item.substr(b, e - b + 1), what));
  }
  return out;
}

Json list_to_json(const std::optional<std::vector<double>>& v) {
  if (!v) return nullptr;
  Json a = Json::array();
  for (double x : *v) a.push_back(io::lambda_to_json(x));
  return a;
}

std::optional<std::vector<double>> list_from_json(const Json& j) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_array()) throw ValidationError("sweep lists must be arrays");
  std::vector<double> v;
  for (const auto& x : j) v.push_back(io::lambda_from_json(x));
  return v;
}

template <class T>
T get_as(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

}  // namespace

ModelParams RunConfig::params_for(double e, double lambda) const {
  ModelParams p = params;
  p.e = e;
  p.lambda = lambda;
  if (derived_ir_shift) p.ir_shift = std::pow(e, 7);
  return p;
}

void RunConfig::validate() const {
  params.validate();
  if (grid.n_radial < 1) throw ValidationError("--n-radial must be at least 1");
  if (grid.n_angular < 2) throw ValidationError("--n-angular must be at least 2");
  if (budgets.mc < 10'000) throw ValidationError("--budget must be at least 10000");
  if (budgets.grid_points < 2) throw ValidationError("--grid-points must be at least 2");
  if (!(budgets.tol > 0.0)) throw ValidationError("--tol must be positive");
  if (vev_method != "grid" && vev_method != "mc" && vev_method != "matrix") {
    throw ValidationError("--method must be grid, mc or matrix");
  }
  if (command == Command::Vev && !vev_string && !wick::builtin_vevs().count(vev_name)) {
    throw ValidationError("unknown builtin string \"" + vev_name + "\" (a4, b1, b2, b3)");
  }
  if (command == Command::Lemmas && grid.n_max < 3) throw ValidationError("lemmas need --n-max >= 3");
  if ((command == Command::SelfEnergy || command == Command::Sweep) && grid.n_max < 3) {
    throw ValidationError("the trial state needs --n-max >= 3");
  }
  if (grid_based(command)) {
    auto check = [](double lambda) {
      if (!std::isfinite(lambda)) {
        throw ValidationError("--lambda inf is only accepted by coeffs and binding");
      }
    };
    if (command == Command::Sweep) {
      for (double l : sweep_lambda.value_or(std::vector<double>{params.lambda})) {
        check(l);
        params_for(params.e, l).validate();
      }
      for (double e : sweep_e.value_or(std::vector<double>{params.e})) params_for(e, params.lambda).validate();
    } else {
      check(params.lambda);
    }
  }
}

Json RunConfig::to_json() const {
  Json j;
  j["command"] = to_string(command);
  j["params"] = {{"e", params.e},
                 {"z", params.z},
                 {"lambda", io::lambda_to_json(params.lambda)},
                 {"ir_shift", derived_ir_shift ? Json("e7") : Json(params.ir_shift)}};
  j["grid"] = {{"n_radial", grid.n_radial}, {"n_angular", grid.n_angular}, {"n_max", grid.n_max}};
  j["budgets"] = {{"mc", budgets.mc},
                  {"grid_points", budgets.grid_points},
                  {"tol", budgets.tol},
                  {"gram_draws", budgets.gram_draws}};
  j["seed"] = seed;
  j["out_path"] = out_path ? Json(*out_path) : Json(nullptr);
  j["cache_dir"] = cache_dir ? Json(*cache_dir) : Json(nullptr);
  j["vev"] = {{"name", vev_name}, {"string", vev_string ? Json(*vev_string) : Json(nullptr)}, {"method", vev_method}};
  j["sweep"] = {{"e", list_to_json(sweep_e)}, {"lambda", list_to_json(sweep_lambda)}};
  return j;
}

RunConfig RunConfig::from_json(const Json& j) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  RunConfig c;
  c.seed = nelson::default_seed(7);
  try {
    if (j.contains("command")) c.command = command_from_string(j.at("command").get<std::string>());
    if (j.contains("params")) {
      const Json& p = j.at("params");
      c.params.e = get_as(p, "e", c.params.e);
      c.params.z = get_as(p, "z", c.params.z);
      if (p.contains("lambda")) c.params.lambda = io::lambda_from_json(p.at("lambda"));
      if (p.contains("ir_shift")) {
        const Json& s = p.at("ir_shift");
        if (s.is_string()) {
          if (s.get<std::string>() != "e7") throw ValidationError("ir_shift: expected a number or \"e7\"");
          c.derived_ir_shift = true;
        } else {
          c.params.ir_shift = s.get<double>();
        }
      }
    }
    if (j.contains("grid")) {
      const Json& g = j.at("grid");
      c.grid.n_radial = get_as(g, "n_radial", c.grid.n_radial);
      c.grid.n_angular = get_as(g, "n_angular", c.grid.n_angular);
      c.grid.n_max = get_as(g, "n_max", c.grid.n_max);
    }
    if (j.contains("budgets")) {
      const Json& b = j.at("budgets");
      c.budgets.mc = get_as(b, "mc", c.budgets.mc);
      c.budgets.grid_points = get_as(b, "grid_points", c.budgets.grid_points);
      c.budgets.tol = get_as(b, "tol", c.budgets.tol);
      c.budgets.gram_draws = get_as(b, "gram_draws", c.budgets.gram_draws);
    }
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("out_path") && !j.at("out_path").is_null()) c.out_path = j.at("out_path").get<std::string>();
    if (j.contains("cache_dir") && !j.at("cache_dir").is_null()) c.cache_dir = j.at("cache_dir").get<std::string>();
    if (j.contains("vev")) {
      const Json& v = j.at("vev");
      c.vev_name = get_as(v, "name", c.vev_name);
      if (v.contains("string") && !v.at("string").is_null()) c.vev_string = v.at("string").get<std::string>();
      c.vev_method = get_as(v, "method", c.vev_method);
    }
    if (j.contains("sweep")) {
      const Json& s = j.at("sweep");
      if (s.contains("e")) c.sweep_e = list_from_json(s.at("e"));
      if (s.contains("lambda")) c.sweep_lambda = list_from_json(s.at("lambda"));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError(std::string("config: ") + ex.what());
  }
  return c;
}

quad::QuadResult matrix_path_estimate(const wick::OpString& s, const ModelParams& params, const BasisSpec& spec) {
  auto value_on = [&](std::size_t nr, std::size_t na) {
    const FockBasis basis(build_mode_grid(nr, na, params), spec.n_max);
    return std::pair{wick::matrix_vev(s, FockOperators(basis, params)), basis.dim()};
  };
  const auto [value, dim] = value_on(spec.n_radial, spec.n_angular);
  const bool coarsen = spec.n_radial >= 2 && spec.n_angular >= 3;
  const auto other = coarsen ? value_on(spec.n_radial - 1, spec.n_angular - 1)
                             : value_on(spec.n_radial + 1, spec.n_angular + 1);
  quad::QuadResult r;
  r.value = value;
  r.error = std::abs(value - other.first);
  r.n_evals = dim;
  r.method = quad::Method::Matrix;
  return r;
}

namespace {

// Results keyed by a description of everything that determines them.
class Cache {
 public:
  Cache(const std::optional<std::string>& dir, std::ostream& err) : err_(err) {
    if (dir) {
      dir_ = fs::path(*dir);
      std::error_code ec;
      fs::create_directories(*dir_, ec);
      if (ec) throw ValidationError("cannot create cache directory " + *dir + ": " + ec.message());
    }
  }

  Json get(const std::string& key, const std::function<Json()>& compute) {
    if (!dir_) return compute();
    const fs::path file = *dir_ / (hash_name(key) + ".json");
    if (fs::exists(file)) {
      try {
        std::ifstream in(file);
        const Json entry = Json::parse(in);
        if (entry.at("key").get<std::string>() == key) return entry.at("value");
        err_ << "warning: cache entry " << file.string() << " belongs to another key; recomputing\n";
      } catch (const std::exception&) {
        err_ << "warning: cache entry " << file.string() << " is corrupt; recomputing\n";
      }
    }
    Json value = compute();
    Json entry;
    entry["schema"] = io::kSchema;
    entry["key"] = key;
    entry["value"] = value;
    const fs::path tmp = file.string() + ".tmp";
    {
      std::ofstream out(tmp);
      out << io::dump(entry) << '\n';
    }
    std::error_code ec;
    fs::rename(tmp, file, ec);
    if (ec) err_ << "warning: cannot write cache entry " << file.string() << '\n';
    return value;
  }

 private:
  static std::string hash_name(const std::string& key) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : key) {
      h ^= ch;
      h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

  std::optional<fs::path> dir_;
  std::ostream& err_;
};

std::string key_of(std::initializer_list<std::string> parts) {
  std::string k;
  for (const auto& p : parts) {
    if (!k.empty()) k += '|';
    k += p;
  }
  return k;
}

std::string num(double x) { return io::format_double(x); }

struct Vevs {
  quad::QuadResult a4, b1, b2, b3;
};

Vevs continuum_vevs(const RunConfig& cfg, const ModelParams& p, Cache& cache) {
  const auto strings = wick::builtin_vevs();
  auto lam = num(p.lambda), eps = num(p.ir_shift);
  Vevs v;
  v.a4 = io::quad_result_from_json(cache.get(
      key_of({"a4", "grid3d", "points=" + std::to_string(cfg.budgets.grid_points), "lambda=" + lam, "eps=" + eps}),
      [&] {
        return io::to_json(quad::integrate_grid3d(
            quad::reduce_two_photon(wick::vev_integrand(strings.at("a4"), p), p), cfg.budgets.grid_points));
      }));
  auto mc = [&](const char* name) {
    return io::quad_result_from_json(cache.get(key_of({name, "mc", "budget=" + std::to_string(cfg.budgets.mc),
                                                       "seed=" + std::to_string(cfg.seed), "lambda=" + lam,
                                                       "eps=" + eps}),
                                               [&] {
                                                 return io::to_json(quad::integrate_mc(
                                                     wick::vev_integrand(strings.at(name), p), cfg.budgets.mc,
                                                     cfg.seed, p));
                                               }));
  };
  v.b1 = mc("b1");
  v.b2 = mc("b2");
  v.b3 = mc("b3");
  return v;
}

MatrixCoefficients matrix_coefficients(const RunConfig& cfg, const ModelParams& p, Cache& cache) {
  const Json j = cache.get(
      key_of({"matrix", "n_radial=" + std::to_string(cfg.grid.n_radial),
              "n_angular=" + std::to_string(cfg.grid.n_angular), "n_max=" + std::to_string(cfg.grid.n_max),
              "lambda=" + num(p.lambda), "eps=" + num(p.ir_shift)}),
      [&] {
        const FockBasis basis(build_mode_grid(cfg.grid.n_radial, cfg.grid.n_angular, p), cfg.grid.n_max);
        return io::to_json(matrix_path_coefficients(FockOperators(basis, p)));
      });
  return {j.at("a4").get<double>(), j.at("b1").get<double>(), j.at("b2").get<double>(), j.at("b3").get<double>()};
}

EnergyReport energy_report(const RunConfig& cfg, const ModelParams& p, Cache& cache) {
  const Vevs v = continuum_vevs(cfg, p, cache);
  SelfEnergyOptions o;
  o.grid_points = cfg.budgets.grid_points;
  o.mc_budget = cfg.budgets.mc;
  o.seed = cfg.seed;
  o.basis = cfg.grid;
  o.a4 = v.a4;
  o.b1 = v.b1;
  o.b2 = v.b2;
  o.b3 = v.b3;
  o.matrix = matrix_coefficients(cfg, p, cache);
  return self_energy_expansion(p, o);
}

Json hydrogen_or_null(const ModelParams& p) {
  if (p.z > 0.0 && p.e > 0.0) return io::to_json(hydrogen_ground(p));
  return nullptr;
}

Json run_coeffs(const RunConfig& cfg) {
  const ModelParams& p = cfg.params;
  Json j = io::to_json(coupling_constants(p, cfg.budgets.tol));
  j["closed_form"] = {{"c_II", c_II_closed_form(p.lambda)},
                      {"c_I_at_infinity", 1.0 / (8.0 * kPi)},
                      {"phi_norm_sq", p.finite_cutoff() ? Json(phi_norm_sq_closed_form(p.lambda)) : Json(nullptr)}};
  return j;
}

Json run_binding(const RunConfig& cfg) {
  Json j = io::to_json(binding_expansion(cfg.params));
  j["hydrogen"] = hydrogen_or_null(cfg.params);
  return j;
}

Json run_selfenergy(const RunConfig& cfg, Cache& cache) {
  Json j = io::to_json(energy_report(cfg, cfg.params, cache));
  j["hydrogen"] = hydrogen_or_null(cfg.params);
  return j;
}

Json run_vev(const RunConfig& cfg, Cache& cache) {
  const ModelParams& p = cfg.params;
  const wick::OpString s = cfg.vev_string ? wick::OpString::parse(*cfg.vev_string) : wick::builtin_vevs().at(cfg.vev_name);
  s.validate_vev();
  const auto diagrams = wick::expand_vev(s);
  const auto expr = wick::vev_integrand(s, p);
  std::string key;
  std::function<Json()> compute;
  const std::string common = "lambda=" + num(p.lambda) + "|eps=" + num(p.ir_shift);
  if (cfg.vev_method == "grid") {
    if (expr.n_vars != 2) {
      throw ValidationError("--method grid needs a two-photon string; use mc or matrix");
    }
    key = key_of({s.to_string(), "grid3d", "points=" + std::to_string(cfg.budgets.grid_points), common});
    compute = [&] { return io::to_json(quad::integrate_grid3d(quad::reduce_two_photon(expr, p), cfg.budgets.grid_points)); };
  } else if (cfg.vev_method == "mc") {
    key = key_of({s.to_string(), "mc", "budget=" + std::to_string(cfg.budgets.mc), "seed=" + std::to_string(cfg.seed),
                  common});
    compute = [&] { return io::to_json(quad::integrate_mc(expr, cfg.budgets.mc, cfg.seed, p)); };
  } else {
    key = key_of({s.to_string(), "matrix", "n_radial=" + std::to_string(cfg.grid.n_radial),
                  "n_angular=" + std::to_string(cfg.grid.n_angular), "n_max=" + std::to_string(cfg.grid.n_max), common});
    compute = [&] { return io::to_json(matrix_path_estimate(s, p, cfg.grid)); };
  }
  Json j;
  j["string"] = s.to_string();
  Json d = Json::array();
  for (const auto& dia : diagrams) d.push_back(io::to_json(dia));
  j["diagrams"] = d;
  j["quad"] = cache.get(key, compute);
  return j;
}

Json run_lemmas(const RunConfig& cfg, bool& failed) {
  const ModelParams& p = cfg.params;
  const FockBasis basis(build_mode_grid(cfg.grid.n_radial, cfg.grid.n_angular, p), cfg.grid.n_max);
  LemmaSuiteOptions o;
  o.gram_draws = cfg.budgets.gram_draws;
  o.seed = cfg.seed;
  o.grid_level = "m=" + std::to_string(basis.grid().size()) + ",n_max=" + std::to_string(cfg.grid.n_max);
  const auto reports = lemma_suite(basis, p, o);
  Json arr = Json::array();
  failed = false;
  for (const auto& r : reports) {
    arr.push_back(io::to_json(r));
    if (!r.passed(1e-8)) failed = true;
  }
  Json j;
  j["basis_dim"] = basis.dim();
  j["reports"] = arr;
  j["resolvent_identity_residual"] = basis.dim() <= 4001 ? Json(verify_resolvent_identity(basis, p)) : Json(nullptr);
  j["c_eps"] = (p.e > 0.0 && p.e < 1.0) ? io::to_json(bound_c_eps(p.e, p.lambda)) : Json(nullptr);
  return j;
}

std::string csv_field(std::optional<double> x) { return x && std::isfinite(*x) ? io::format_double(*x) : ""; }

std::string run_sweep(const RunConfig& cfg, Cache& cache) {
  const auto es = cfg.sweep_e.value_or(std::vector<double>{cfg.params.e});
  const auto lambdas = cfg.sweep_lambda.value_or(std::vector<double>{cfg.params.lambda});
  std::ostringstream out;
  out << kSweepHeader << '\n';
  for (double lambda : lambdas) {
    std::vector<EnergyReport> rows;
    std::vector<double> couplings, residuals;
    for (double e : es) {
      const ModelParams p = cfg.params_for(e, lambda);
      rows.push_back(energy_report(cfg, p, cache));
      const auto& r = rows.back();
      couplings.push_back(e);
      residuals.push_back(std::abs(*r.E0_lanczos - r.matrix->expansion(e)));
    }
    const double slope = loglog_slope(couplings, residuals);
    for (const auto& r : rows) {
      std::vector<std::string> f = {
          csv_field(r.e), csv_field(r.z), csv_field(r.lambda), std::to_string(cfg.grid.n_radial),
          std::to_string(cfg.grid.n_angular), std::to_string(cfg.grid.n_max), csv_field(r.E_at),
          csv_field(r.a4->value), csv_field(r.a4->error), csv_field(r.b1->value), csv_field(r.b1->error),
          csv_field(r.b2->value), csv_field(r.b2->error), csv_field(r.b3->value), csv_field(r.b3->error),
          csv_field(r.E0_expansion), csv_field(r.E0_lanczos), csv_field(r.E0_trial), csv_field(r.E_bin_expansion),
          csv_field(slope), std::to_string(cfg.seed)};
      for (std::size_t i = 0; i < f.size(); ++i) out << (i ? "," : "") << f[i];
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace

int execute(const RunConfig& config, std::string& artifact, std::ostream& err) {
  config.validate();
  Cache cache(config.cache_dir, err);
  if (config.command == Command::Sweep) {
    artifact = run_sweep(config, cache);
    return kExitOk;
  }
  Json result;
  bool lemma_failed = false;
  switch (config.command) {
    case Command::Coeffs: result = run_coeffs(config); break;
    case Command::Binding: result = run_binding(config); break;
    case Command::SelfEnergy: result = run_selfenergy(config, cache); break;
    case Command::Vev: result = run_vev(config, cache); break;
    case Command::Lemmas: result = run_lemmas(config, lemma_failed); break;
    case Command::Sweep: break;
  }
  Json j;
  j["schema"] = io::kSchema;
  j["command"] = to_string(config.command);
  j["config"] = config.to_json();
  j["result"] = result;
  artifact = io::dump(j) + "\n";
  if (lemma_failed) {
    err << "lemma check failed: a margin is below -1e-8 or a Gram check was violated\n";
    return kExitLemma;
  }
  return kExitOk;
}

namespace {

struct Flags {
  double e = 0, z = 0;
  std::string lambda, ir_shift, e_list, lambda_list, config, out, cache_dir, name, string, method;
  std::size_t n_radial = 0, n_angular = 0, n_max = 0, budget = 0, grid_points = 0, gram_draws = 0;
  double tol = 0;
  std::uint64_t seed = 0;
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical lab for the Nelson model: coupling constants, vacuum expectations, ground energies and "
               "form-bound checks."};
  app.name("nelson");
  app.require_subcommand(1);
  Flags f;
  std::map<std::string, CLI::Option*> opts;
  std::map<CLI::App*, Command> commands;

  auto add = [&](const char* name, Command cmd, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    commands[sub] = cmd;
    auto reg = [&](const std::string& key, CLI::Option* o) { opts[std::string(name) + key] = o; };
    reg("e", sub->add_option("--e", f.e, "coupling e"));
    reg("z", sub->add_option("--z", f.z, "nuclear charge Z"));
    reg("lambda", sub->add_option("--lambda", f.lambda, "ultraviolet cutoff (number or inf)"));
    reg("ir", sub->add_option("--ir-shift", f.ir_shift, "infrared shift added to H_f (number or e7)"));
    reg("nr", sub->add_option("--n-radial", f.n_radial, "radial nodes of the mode grid"));
    reg("na", sub->add_option("--n-angular", f.n_angular, "azimuthal nodes (polar nodes: half, rounded up)"));
    reg("nmax", sub->add_option("--n-max", f.n_max, "photon-number cutoff"));
    reg("budget", sub->add_option("--budget", f.budget, "Monte Carlo samples"));
    reg("gp", sub->add_option("--grid-points", f.grid_points, "points per axis of the reduced grid rule"));
    reg("tol", sub->add_option("--tol", f.tol, "absolute tolerance of radial quadrature"));
    reg("gram", sub->add_option("--gram-draws", f.gram_draws, "random states per Gram check"));
    reg("seed", sub->add_option("--seed", f.seed, "random seed (default NELSON_SEED or 7)"));
    reg("out", sub->add_option("--out", f.out, "write the artifact here instead of stdout"));
    reg("cache", sub->add_option("--cache-dir", f.cache_dir, "directory for cached expectation values"));
    reg("config", sub->add_option("--config", f.config, "JSON configuration; flags override it"));
    if (cmd == Command::Vev) {
      reg("name", sub->add_option("--name", f.name, "builtin string: a4, b1, b2, b3"));
      reg("string", sub->add_option("--string", f.string, "operator string, e.g. \"AA R A*A*\""));
      reg("method", sub->add_option("--method", f.method, "grid, mc or matrix"));
    }
    if (cmd == Command::Sweep) {
      reg("el", sub->add_option("--e-list", f.e_list, "comma-separated couplings"));
      reg("ll", sub->add_option("--lambda-list", f.lambda_list, "comma-separated cutoffs"));
    }
  };
  add("coeffs", Command::Coeffs, "coupling constants and their closed forms");
  add("selfenergy", Command::SelfEnergy, "self-energy expansion, Lanczos and trial-state energies");
  add("binding", Command::Binding, "binding-energy expansion");
  add("vev", Command::Vev, "vacuum expectation of an operator string");
  add("lemmas", Command::Lemmas, "form-bound checks on a truncated Fock space");
  add("sweep", Command::Sweep, "CSV table over couplings and cutoffs");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& ex) {
    err << "error: " << ex.what() << "\n\n" << app.help();
    return kExitValidation;
  }

  CLI::App* sub = app.get_subcommands().front();
  const Command cmd = commands.at(sub);
  const std::string name = sub->get_name();
  auto given = [&](const char* key) {
    auto it = opts.find(name + key);
    return it != opts.end() && it->second->count() > 0;
  };

  try {
    RunConfig cfg;
    if (given("config")) {
      std::ifstream in(f.config);
      if (!in) throw ValidationError("cannot read config file " + f.config);
      Json j;
      try {
        j = Json::parse(in);
      } catch (const nlohmann::json::exception& ex) {
        throw ValidationError("config file " + f.config + ": " + ex.what());
      }
      // Whole artifacts are accepted too: their config block is used.
      if (j.contains("schema") && j.contains("config")) j = j.at("config");
      cfg = RunConfig::from_json(j);
    } else {
      cfg.seed = nelson::default_seed(7);
    }
    cfg.command = cmd;
    if (given("e")) cfg.params.e = f.e;
    if (given("z")) cfg.params.z = f.z;
    if (given("lambda")) cfg.params.lambda = parse_number(f.lambda, "--lambda");
    if (given("ir")) {
      if (f.ir_shift == "e7") {
        cfg.derived_ir_shift = true;
      } else {
        cfg.derived_ir_shift = false;
        cfg.params.ir_shift = parse_number(f.ir_shift, "--ir-shift");
      }
    }
    if (cfg.derived_ir_shift) cfg.params.ir_shift = std::pow(cfg.params.e, 7);
    if (given("nr")) cfg.grid.n_radial = f.n_radial;
    if (given("na")) cfg.grid.n_angular = f.n_angular;
    if (given("nmax")) cfg.grid.n_max = f.n_max;
    if (given("budget")) cfg.budgets.mc = f.budget;
    if (given("gp")) cfg.budgets.grid_points = f.grid_points;
    if (given("tol")) cfg.budgets.tol = f.tol;
    if (given("gram")) cfg.budgets.gram_draws = f.gram_draws;
    if (given("seed")) cfg.seed = f.seed;
    if (given("out")) cfg.out_path = f.out;
    if (given("cache")) cfg.cache_dir = f.cache_dir;
    if (given("name")) {
      cfg.vev_name = f.name;
      cfg.vev_string.reset();
    }
    if (given("string")) cfg.vev_string = f.string;
    if (given("method")) cfg.vev_method = f.method;
    if (given("el")) cfg.sweep_e = parse_list(f.e_list, "--e-list");
    if (given("ll")) cfg.sweep_lambda = parse_list(f.lambda_list, "--lambda-list");

    std::string artifact;
    const int code = execute(cfg, artifact, err);
    if (cfg.out_path) {
      std::ofstream file(*cfg.out_path, std::ios::binary);
      if (!file) throw ValidationError("cannot write " + *cfg.out_path);
      file << artifact;
    } else {
      out << artifact;
    }
    return code;
  } catch (const ValidationError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitValidation;
  } catch (const ConvergenceError& ex) {
    err << "error: " << ex.what() << " (partial value " << io::format_double(ex.partial_value()) << ", residual "
        << io::format_double(ex.residual()) << ")\n";
    return kExitNumerical;
  } catch (const DegenerateGridError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace nelson::cli
