#include "gpnn/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "gpnn/errors.hpp"
#include "gpnn/parallel.hpp"

namespace gpnn {
namespace {

using nlohmann::json;

// Reads one JSON object, remembering every key it was asked about (and the
// value used, default or not) so leftovers can be rejected.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) fail("missing required key '" + key + "'");
    return j_.at(key);
  }
  std::string at(const std::string& key) const { return path_ + "." + key; }

  double real(const std::string& key, std::optional<double> def = std::nullopt) {
    const double v = fetch(key, def, [&](const json& x) { return to_real(x, at(key)); });
    resolved_[key] = v;
    return v;
  }
  std::size_t count(const std::string& key, std::optional<std::size_t> def = std::nullopt) {
    const std::size_t v = fetch(key, def, [&](const json& x) { return to_count(x, at(key)); });
    resolved_[key] = v;
    return v;
  }
  bool flag(const std::string& key, std::optional<bool> def = std::nullopt) {
    const bool v = fetch(key, def, [&](const json& x) {
      if (!x.is_boolean()) throw InputError(at(key) + ": expected a boolean");
      return x.get<bool>();
    });
    resolved_[key] = v;
    return v;
  }
  std::string text(const std::string& key, std::optional<std::string> def = std::nullopt) {
    const std::string v = fetch(key, def, [&](const json& x) {
      if (!x.is_string()) throw InputError(at(key) + ": expected a string");
      return x.get<std::string>();
    });
    resolved_[key] = v;
    return v;
  }
  std::vector<double> reals(const std::string& key) {
    const json& x = raw(key);
    if (!x.is_array()) throw InputError(at(key) + ": expected an array of numbers");
    std::vector<double> v;
    for (std::size_t i = 0; i < x.size(); ++i) v.push_back(to_real(x[i], at(key) + "[" + std::to_string(i) + "]"));
    resolved_[key] = v;
    return v;
  }

  void put(const std::string& key, json value) {
    seen_.insert(key);
    resolved_[key] = std::move(value);
  }

  json finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw InputError(path_ + ": unknown key '" + it.key() + "'");
    return resolved_.is_null() ? json::object() : resolved_;
  }

  [[noreturn]] void fail(const std::string& msg) const { throw InputError(path_ + ": " + msg); }

  static double to_real(const json& x, const std::string& where) {
    if (!x.is_number()) throw InputError(where + ": expected a number");
    const double v = x.get<double>();
    if (!std::isfinite(v)) throw InputError(where + ": must be finite");
    return v;
  }
  static std::size_t to_count(const json& x, const std::string& where) {
    if (x.is_number_unsigned()) return x.get<std::size_t>();
    if (x.is_number_integer()) {
      if (x.get<std::int64_t>() < 0) throw InputError(where + ": must be non-negative");
      return static_cast<std::size_t>(x.get<std::int64_t>());
    }
    if (x.is_number_float()) {
      // accept 1e5 style literals when they are exact integers
      const double v = x.get<double>();
      if (v >= 0.0 && v < 9.0e15 && std::floor(v) == v) return static_cast<std::size_t>(v);
      throw InputError(where + ": expected a non-negative integer");
    }
    throw InputError(where + ": expected a non-negative integer");
  }

 private:
  template <class T, class F>
  T fetch(const std::string& key, const std::optional<T>& def, F&& convert) {
    seen_.insert(key);
    if (!j_.contains(key)) {
      if (!def) fail("missing required key '" + key + "'");
      return *def;
    }
    return convert(j_.at(key));
  }

  json j_;
  std::string path_;
  std::set<std::string> seen_;
  json resolved_ = json::object();
};

KernelSpec read_kernel(const json& j, const std::string& path, json& resolved) {
  Reader r(j, path);
  const std::string family = r.text("family");
  KernelSpec k = KernelSpec::matern(0.5);
  if (family == "exp" || family == "exponential") {
    k = KernelSpec::exponential();
  } else if (family == "sq_exp" || family == "squared_exponential" || family == "rbf") {
    k = KernelSpec::squared_exponential();
  } else if (family == "matern") {
    const double nu = r.real("nu");
    try {
      k = KernelSpec::matern(nu);
    } catch (const InputError& e) {
      throw InputError(r.at("nu") + ": " + e.what());
    }
  } else {
    r.fail("unknown kernel family '" + family + "' (exp, sq_exp, matern)");
  }
  resolved = r.finish();
  return k;
}

HyperParams read_theta(const json& j, const std::string& path, json& resolved) {
  Reader r(j, path);
  HyperParams t;
  t.noise_var = r.real("noise_var", 0.1);
  t.kernel_scale = r.real("kernel_scale", 1.0);
  t.lengthscale = r.real("lengthscale", 1.0);
  if (r.has("b")) {
    const auto b = r.reals("b");
    t.b = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
  } else {
    r.put("b", json::array());
  }
  try {
    t.validate();
  } catch (const InputError& e) {
    r.fail(e.what());
  }
  resolved = r.finish();
  return t;
}

CovariateSpec read_covariates(const json& j, const std::string& path, json& resolved) {
  Reader r(j, path);
  CovariateSpec c;
  const std::string kind = r.text("kind", "gaussian");
  if (kind == "gaussian")
    c.kind = CovariateKind::kGaussianIsotropic;
  else if (kind == "uniform_disk")
    c.kind = CovariateKind::kUniformDisk;
  else if (kind == "hypercube")
    c.kind = CovariateKind::kUniformHypercube;
  else
    r.fail("unknown covariate kind '" + kind + "' (gaussian, uniform_disk, hypercube)");
  c.dim = r.count("dim", 2);
  try {
    c.validate();
  } catch (const InputError& e) {
    r.fail(e.what());
  }
  resolved = r.finish();
  return c;
}

GenerativeSpec read_generative(const json& j, const std::string& path, std::size_t dim, json& resolved) {
  Reader r(j, path);
  const std::string model = r.text("model", "gpnn");
  GenerativeSpec out;
  if (model == "gpnn") {
    GpnnGenerative g;
    g.function = r.text("function", "tanh");
    g.noise_var = r.real("noise_var", 0.1);
    g.holder_q = r.real("holder_q", 1.0);
    try {
      g.validate(dim);
    } catch (const InputError& e) {
      r.fail(e.what());
    }
    out = g;
  } else if (model == "nngp") {
    NngpGenerative g;
    if (r.has("b")) {
      const auto b = r.reals("b");
      g.b = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
    } else {
      r.put("b", std::vector<double>(g.b.data(), g.b.data() + g.b.size()));
    }
    g.regressors = r.text("regressors", "squares");
    json kres;
    if (r.has("kernel"))
      g.latent_kernel = read_kernel(r.raw("kernel"), r.at("kernel"), kres);
    else
      kres = kernel_to_json(g.latent_kernel);
    r.put("kernel", kres);
    g.lengthscale = r.real("lengthscale", std::sqrt(2.0));
    g.latent_var = r.real("latent_var", 1.0);
    g.noise_var = r.real("noise_var", 0.1);
    try {
      g.validate(dim);
    } catch (const InputError& e) {
      r.fail(e.what());
    }
    out = g;
  } else {
    r.fail("unknown generative model '" + model + "' (gpnn, nngp)");
  }
  resolved = r.finish();
  return out;
}

std::vector<std::size_t> read_grid(const json& j, const std::string& path) {
  std::vector<std::size_t> grid;
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i)
      grid.push_back(Reader::to_count(j[i], path + "[" + std::to_string(i) + "]"));
  } else {
    Reader r(j, path);
    const std::size_t lo = r.count("min");
    const std::size_t hi = r.count("max");
    const std::size_t pts = r.count("points");
    r.finish();
    if (lo < 1 || hi < lo || pts < 1) r.fail("need 1 <= min <= max and points >= 1");
    grid = geometric_grid(lo, hi, pts);
  }
  if (grid.empty()) throw InputError(path + ": empty grid");
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.front() < 2) throw InputError(path + ": every n must be at least 2");
  return grid;
}

RateExperiment read_simulation(const json& j, std::uint64_t seed, json& resolved) {
  Reader r(j, "simulation");
  RateExperiment e;
  e.setup.seed = seed;
  json sub;
  e.setup.covariates = read_covariates(r.has("covariates") ? r.raw("covariates") : json::object(),
                                       r.at("covariates"), sub);
  r.put("covariates", sub);
  e.setup.generative = read_generative(r.has("generative") ? r.raw("generative") : json::object(),
                                       r.at("generative"), e.setup.covariates.dim, sub);
  r.put("generative", sub);
  e.setup.kernel = read_kernel(r.raw("kernel"), r.at("kernel"), sub);
  r.put("kernel", sub);
  e.theta = read_theta(r.raw("theta"), r.at("theta"), sub);
  r.put("theta", sub);
  e.n_grid = read_grid(r.raw("n_grid"), r.at("n_grid"));
  r.put("n_grid", e.n_grid);
  r.put("n_grid_spacing", j.at("n_grid").is_array() ? "explicit" : "geometric");
  e.setup.n_test = r.count("n_test", 2000);
  e.setup.replicates = r.count("replicates", 3);
  e.setup.gamma_correction = r.flag("gamma_correction", true);
  e.setup.latent_variance = r.flag("latent_variance", false);
  e.slope_tail = r.count("slope_tail", kDefaultSlopeTail);
  e.smoothness = r.real("smoothness", 0.0);

  ScheduleSpec s;
  {
    Reader sr(r.has("schedule") ? r.raw("schedule") : json::object(), r.at("schedule"));
    r.put("schedule", json::object());
    if (sr.has("fixed_m")) {
      s.fixed_m = sr.count("fixed_m");
      if (s.fixed_m == 0) sr.fail("fixed_m must be positive");
    } else {
      s.p = sr.real("p", e.setup.kernel.holder_p());
      s.n_max = sr.count("n_max", e.n_grid.back());
      s.m_at_n_max = sr.count("m_at_n_max", 100);
    }
    try {
      s.validate();
    } catch (const InputError& ex) {
      sr.fail(ex.what());
    }
    r.put("schedule", sr.finish());
  }
  e.setup.schedule = s;
  try {
    e.validate();
  } catch (const InputError& ex) {
    r.fail(ex.what());
  }
  resolved = r.finish();
  return e;
}

HyperAxis read_axis(const std::string& name, const std::string& path) {
  try {
    return parse_axis(name);
  } catch (const InputError&) {
    throw InputError(path + ": unknown axis '" + name + "' (lengthscale, kernel_scale, noise_var, b)");
  }
}

LandscapeSweep read_sweep(const json& j, const std::string& path, json& resolved) {
  Reader r(j, path);
  LandscapeSweep s;
  s.axis = read_axis(r.text("axis"), r.at("axis"));
  s.values = r.reals("values");
  if (s.values.empty()) r.fail("values must not be empty");
  resolved = r.finish();
  return s;
}

std::filesystem::path resolve_path(Reader& r, const std::string& key, const std::filesystem::path& base) {
  const std::filesystem::path p = r.text(key);
  return p.is_absolute() || base.empty() ? p : base / p;
}

}  // namespace

std::vector<std::size_t> geometric_grid(std::size_t lo, std::size_t hi, std::size_t points) {
  std::vector<std::size_t> g;
  if (points == 1 || lo == hi) return {hi};
  const double a = std::log(static_cast<double>(lo)), b = std::log(static_cast<double>(hi));
  for (std::size_t i = 0; i < points; ++i) {
    const double v = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
    g.push_back(i + 1 == points ? hi : static_cast<std::size_t>(std::llround(v)));
  }
  g.front() = lo;
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

nlohmann::json theta_to_json(const HyperParams& t) {
  return {{"noise_var", t.noise_var},
          {"kernel_scale", t.kernel_scale},
          {"lengthscale", t.lengthscale},
          {"b", std::vector<double>(t.b.data(), t.b.data() + t.b.size())}};
}

nlohmann::json kernel_to_json(const KernelSpec& k) {
  switch (k.family()) {
    case KernelFamily::kExponential:
      return {{"family", "exp"}};
    case KernelFamily::kSquaredExponential:
      return {{"family", "sq_exp"}};
    default:
      return {{"family", "matern"}, {"nu", k.nu()}};
  }
}

ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir,
                              std::optional<std::uint64_t> seed_override) {
  Reader r(j, "config");
  ExperimentConfig cfg;
  cfg.master_seed = r.has("master_seed") ? Reader::to_count(r.raw("master_seed"), "config.master_seed") : 0;
  if (seed_override) cfg.master_seed = *seed_override;
  r.put("master_seed", cfg.master_seed);

  // thread budget and output location do not influence results and are kept
  // out of the provenance record
  cfg.threads = default_thread_count();
  if (r.has("threads")) {
    cfg.threads = Reader::to_count(r.raw("threads"), "config.threads");
    if (cfg.threads == 0) throw InputError("config.threads: must be positive");
  }
  if (r.has("output")) {
    const json& o = r.raw("output");
    if (!o.is_string()) throw InputError("config.output: expected a string");
    cfg.output = o.get<std::string>();
  }
  json resolved = json::object();
  resolved["master_seed"] = cfg.master_seed;

  json sub;
  if (r.has("simulation")) {
    cfg.simulation = read_simulation(r.raw("simulation"), cfg.master_seed, sub);
    cfg.simulation->setup.threads = cfg.threads;
    resolved["simulation"] = sub;
  }
  if (r.has("landscape")) {
    const json& l = r.raw("landscape");
    json arr = json::array();
    if (l.is_array()) {
      for (std::size_t i = 0; i < l.size(); ++i) {
        cfg.landscape.push_back(read_sweep(l[i], "landscape[" + std::to_string(i) + "]", sub));
        arr.push_back(sub);
      }
    } else {
      cfg.landscape.push_back(read_sweep(l, "landscape", sub));
      arr.push_back(sub);
    }
    if (cfg.landscape.empty()) throw InputError("landscape: no sweeps given");
    resolved["landscape"] = arr;
  }
  if (r.has("derivatives")) {
    Reader d(r.raw("derivatives"), "derivatives");
    DerivativeSettings ds;
    if (d.has("axes")) {
      const json& a = d.raw("axes");
      if (!a.is_array() || a.empty()) d.fail("axes must be a non-empty array of names");
      std::vector<std::string> names;
      for (std::size_t i = 0; i < a.size(); ++i) {
        const std::string where = "derivatives.axes[" + std::to_string(i) + "]";
        if (!a[i].is_string()) throw InputError(where + ": expected a string");
        ds.axes.push_back(read_axis(a[i].get<std::string>(), where));
        names.push_back(a[i].get<std::string>());
      }
      d.put("axes", names);
    } else {
      ds.axes = {HyperAxis::kLengthscale, HyperAxis::kKernelScale, HyperAxis::kNoiseVar};
      if (cfg.simulation && cfg.simulation->setup.is_nngp()) ds.axes.push_back(HyperAxis::kB);
      std::vector<std::string> names;
      for (auto ax : ds.axes) names.push_back(axis_name(ax));
      d.put("axes", names);
    }
    ds.relative_step = d.real("relative_step", 0.02);
    if (!(ds.relative_step > 0.0 && ds.relative_step < 0.5)) d.fail("relative_step must lie in (0, 0.5)");
    resolved["derivatives"] = d.finish();
    cfg.derivatives = ds;
  }
  if (r.has("calibration")) {
    Reader c(r.raw("calibration"), "calibration");
    CalibrationSizes cs;
    cs.n = c.count("n", 10000);
    cs.n_cal = c.count("n_cal", 2000);
    if (cs.n < 2 || cs.n_cal < 1) c.fail("need n >= 2 and n_cal >= 1");
    resolved["calibration"] = c.finish();
    cfg.calibration = cs;
  }
  if (r.has("data")) {
    Reader d(r.raw("data"), "data");
    for (const char* key : {"train", "test", "calibration"}) {
      if (!d.has(key)) continue;
      const auto p = resolve_path(d, key, base_dir);
      (std::string(key) == "train" ? cfg.data.train : std::string(key) == "test" ? cfg.data.test : cfg.data.calibration) = p;
    }
    resolved["data"] = d.finish();
  }
  if (r.has("model")) {
    Reader mr(r.raw("model"), "model");
    ModelSettings ms;
    ms.kernel = read_kernel(mr.raw("kernel"), mr.at("kernel"), sub);
    mr.put("kernel", sub);
    ms.m = mr.count("m", 50);
    if (ms.m == 0) mr.fail("m must be positive");
    if (mr.has("theta")) {
      ms.theta = read_theta(mr.raw("theta"), mr.at("theta"), sub);
      mr.put("theta", sub);
    }
    ms.gamma_correction = mr.flag("gamma_correction", true);
    resolved["model"] = mr.finish();
    cfg.model = ms;
  }
  if (r.has("fit")) {
    Reader f(r.raw("fit"), "fit");
    FitSettings fs;
    fs.blocks = f.count("blocks", 20);
    fs.block_size = f.count("block_size", 100);
    fs.optimiser.learning_rate = f.real("learning_rate", 0.05);
    fs.optimiser.iterations = f.count("iterations", 200);
    fs.optimiser.adam_beta1 = f.real("adam_beta1", 0.9);
    fs.optimiser.adam_beta2 = f.real("adam_beta2", 0.999);
    fs.optimiser.adam_eps = f.real("adam_eps", 1e-8);
    if (f.has("init")) {
      fs.optimiser.init = read_theta(f.raw("init"), f.at("init"), sub);
      f.put("init", sub);
      fs.has_init = true;
    } else {
      f.put("init", "median_heuristic");
    }
    if (fs.blocks == 0 || fs.block_size < 2) f.fail("need blocks >= 1 and block_size >= 2");
    try {
      fs.optimiser.validate();
    } catch (const InputError& e) {
      f.fail(e.what());
    }
    fs.optimiser.threads = cfg.threads;
    resolved["fit"] = f.finish();
    cfg.fit = fs;
  }
  if (r.has("calibrate")) {
    Reader c(r.raw("calibrate"), "calibrate");
    cfg.calibrate_n_cal = c.count("n_cal", 2000);
    if (cfg.calibrate_n_cal == 0) c.fail("n_cal must be positive");
    resolved["calibrate"] = c.finish();
  }
  r.finish();
  if (!cfg.landscape.empty() && !cfg.simulation) throw InputError("landscape: requires a simulation section");
  cfg.resolved = std::move(resolved);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("config file '" + path.string() + "': " + e.what());
  }
  return parse_config(j, path.parent_path(), seed_override);
}

}  // namespace gpnn
