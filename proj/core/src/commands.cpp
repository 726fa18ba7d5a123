#include "gpnn/commands.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "gpnn/calibration.hpp"
#include "gpnn/dataset.hpp"
#include "gpnn/errors.hpp"
#include "gpnn/metrics.hpp"
#include "gpnn/rng.hpp"
#include "gpnn/selfcheck.hpp"

namespace gpnn {
namespace {

using nlohmann::json;

constexpr const char* kVersion = "gpnn 0.1.0";

json provenance(const std::string& command, const ExperimentConfig& cfg) {
  return {{"command", command}, {"master_seed", cfg.master_seed}, {"software", kVersion}, {"config", cfg.resolved}};
}

Artifact json_artifact(const std::string& name, json body, const json& prov) {
  body["provenance"] = prov;
  return {name, body.dump(2) + "\n"};
}

class CsvBuilder {
 public:
  CsvBuilder(const json& prov, std::initializer_list<const char*> header) {
    out_ << provenance_line(prov);
    bool first = true;
    for (const char* h : header) {
      out_ << (first ? "" : ",") << h;
      first = false;
    }
    out_ << "\n";
  }
  template <class... Ts>
  void row(const Ts&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << "\n";
  }
  Artifact finish(const std::string& name) const { return {name, out_.str()}; }

 private:
  static std::string cell(double v) { return format_double(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(const std::string& v) { return v; }
  std::ostringstream out_;
};

json metrics_json(const MetricSummary& m) {
  return {{"mse", m.mse}, {"cal", m.cal}, {"nll", m.nll}, {"n_test", m.n_test}};
}

json fit_json(const SlopeFit& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r_squared}, {"points_used", f.points_used}};
}

const RateExperiment& need_simulation(const ExperimentConfig& cfg, const std::string& cmd) {
  if (!cfg.simulation) throw InputError(cmd + ": config needs a 'simulation' section");
  return *cfg.simulation;
}

const ModelSettings& need_model(const ExperimentConfig& cfg, const std::string& cmd, bool need_theta) {
  if (!cfg.model) throw InputError(cmd + ": config needs a 'model' section");
  if (need_theta && !cfg.model->theta) throw InputError(cmd + ": model.theta is required");
  return *cfg.model;
}

const std::filesystem::path& need_path(const std::optional<std::filesystem::path>& p, const std::string& what) {
  if (!p) throw InputError(what + " is required");
  return *p;
}

// Rethrows with the workflow stage prepended, keeping the error category.
template <class F>
auto stage(const std::string& name, F&& body) {
  try {
    return body();
  } catch (const InputError& e) {
    throw InputError("stage '" + name + "': " + e.what());
  } catch (const NumericError& e) {
    throw NumericError("stage '" + name + "': " + e.what());
  }
}

Eigen::VectorXd fit_targets(const Dataset& d, const HyperParams& theta) {
  if (theta.b.size() == 0) return d.y;
  if (d.t.cols() != theta.b.size())
    throw InputError("training data has " + std::to_string(d.t.cols()) + " regressor columns but theta.b has " +
                     std::to_string(theta.b.size()) + " entries");
  return d.y - d.t * theta.b;
}

struct FitOutcome {
  FitResult result;
  std::size_t blocks_used = 0;
  HyperParams init;
};

FitOutcome run_fit(const Dataset& pool, const ModelSettings& model, const FitSettings& fs, std::uint64_t seed) {
  const std::size_t possible = pool.rows() / fs.block_size;
  if (possible == 0)
    throw InputError("fit: " + std::to_string(pool.rows()) + " training rows cannot fill one block of " +
                     std::to_string(fs.block_size));
  FitOutcome out;
  out.blocks_used = std::min(fs.blocks, possible);
  const HyperParams b_source = model.theta ? *model.theta : (fs.has_init ? fs.optimiser.init : HyperParams{});
  const Eigen::VectorXd targets = fit_targets(pool, b_source);
  const auto blocks = gather_blocks(pool.x, targets, block_partition(pool.rows(), out.blocks_used, fs.block_size, seed));
  FitConfig fc = fs.optimiser;
  if (!fs.has_init) {
    fc.init = initial_hyperparams(blocks);
  }
  fc.init.b = b_source.b;
  out.init = fc.init;
  out.result = fit_hyperparams(blocks, model.kernel, fc);
  return out;
}

Artifact trace_artifact(const std::vector<double>& trace, const json& prov) {
  CsvBuilder csv(prov, {"iteration", "objective"});
  for (std::size_t i = 0; i < trace.size(); ++i) csv.row(i, trace[i]);
  return csv.finish("fit_trace.csv");
}

Artifact predictions_artifact(const BatchPrediction& p, const json& prov) {
  CsvBuilder csv(prov, {"index", "mean", "variance"});
  for (std::size_t i = 0; i < p.mean.size(); ++i) csv.row(i, p.mean[i], p.variance[i]);
  return csv.finish("predictions.csv");
}

MetricSummary score(const Dataset& d, const BatchPrediction& p) {
  return empirical_metrics(std::span<const double>(d.y.data(), static_cast<std::size_t>(d.y.size())), p.mean,
                           p.variance);
}

std::vector<double> residuals(const Dataset& d, const BatchPrediction& p) {
  std::vector<double> r(p.mean.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = d.y(static_cast<Eigen::Index>(i)) - p.mean[i];
  return r;
}

PredictOptions predict_options(const ModelSettings& m) {
  PredictOptions o;
  o.gamma_correction = m.gamma_correction;
  return o;
}

// ---------------------------------------------------------------- commands

CommandResult cmd_rates(const ExperimentConfig& cfg) {
  const RateExperiment& e = need_simulation(cfg, "rates");
  const json prov = provenance("rates", cfg);
  const RiskCurve curve = run_rate_experiment(e);

  CommandResult res;
  CsvBuilder csv(prov, {"n", "m", "risk", "stderr"});
  for (const auto& en : curve.entries) csv.row(en.n, en.m, en.risk, en.std_err);
  res.artifacts.push_back(csv.finish("risk_curve.csv"));

  json slopes{{"slope", curve.fit.slope},
              {"r2", curve.fit.r_squared},
              {"stone_exponent", curve.stone_exponent},
              {"intercept", curve.fit.intercept},
              {"points_used", curve.fit.points_used},
              {"slope_tail", e.slope_tail},
              {"schedule_exponent", e.setup.schedule.fixed_m ? 0.0 : e.setup.schedule.exponent(e.setup.covariates.dim)},
              {"beyond_theoretical_coverage", e.beyond_theory()},
              {"n_grid_spacing", cfg.resolved["simulation"]["n_grid_spacing"]}};
  if (e.beyond_theory()) slopes["note"] = "beyond theoretical coverage: schedule p > 1";
  if (const auto* g = std::get_if<GpnnGenerative>(&e.setup.generative); g && g->holder_q)
    slopes["holder_q"] = *g->holder_q;
  res.artifacts.push_back(json_artifact("slopes.json", slopes, prov));

  std::ostringstream summary;
  summary << "slope " << curve.fit.slope << " (R^2 " << curve.fit.r_squared << "), Stone exponent "
          << curve.stone_exponent;

  if (e.setup.schedule.fixed_m > 0) {
    const auto* g = std::get_if<GpnnGenerative>(&e.setup.generative);
    if (g && !g->noise_fn) {
      const PointwiseLimitResult pl = run_pointwise_limit(e.setup, e.theta, e.n_grid.back());
      json pw{{"n", pl.n},
              {"m", pl.m},
              {"gamma", pl.gamma},
              {"noisy_mse", pl.noisy_mse},
              {"noisy_mse_limit", pl.noisy_mse_limit},
              {"mean_variance", pl.mean_variance},
              {"variance_limit", pl.variance_limit}};
      res.artifacts.push_back(json_artifact("pointwise.json", pw, prov));
      summary << "\npointwise at n=" << pl.n << ": mse " << pl.noisy_mse << " (limit " << pl.noisy_mse_limit
              << "), variance " << pl.mean_variance << " (limit " << pl.variance_limit << ")";
    }
  }
  res.summary = summary.str();
  return res;
}

CommandResult cmd_landscape(const ExperimentConfig& cfg) {
  const RateExperiment& e = need_simulation(cfg, "landscape");
  if (cfg.landscape.empty()) throw InputError("landscape: config needs a 'landscape' section");
  const json prov = provenance("landscape", cfg);
  CsvBuilder csv(prov, {"axis", "value", "n", "risk"});
  json ranges = json::array();
  for (const auto& sweep : cfg.landscape) {
    const LandscapeResult lr = risk_landscape_sweep(e, sweep.axis, sweep.values);
    for (const auto& row : lr.rows) csv.row(axis_name(row.axis), row.value, row.n, row.risk);
    json rb = json::array();
    for (const auto& [n, range] : lr.range_by_n) rb.push_back({{"n", n}, {"range", range}});
    ranges.push_back({{"axis", axis_name(sweep.axis)}, {"range_by_n", rb}});
  }
  CommandResult res;
  res.artifacts.push_back(csv.finish("landscape.csv"));
  res.artifacts.push_back(json_artifact("landscape.json", {{"sweeps", ranges}}, prov));
  res.summary = std::to_string(cfg.landscape.size()) + " sweep(s) over " + std::to_string(e.n_grid.size()) + " n values";
  return res;
}

CommandResult cmd_derivatives(const ExperimentConfig& cfg) {
  const RateExperiment& e = need_simulation(cfg, "derivatives");
  const DerivativeSettings ds = cfg.derivatives.value_or(DerivativeSettings{
      {HyperAxis::kLengthscale, HyperAxis::kKernelScale, HyperAxis::kNoiseVar}, 0.02});
  const json prov = provenance("derivatives", cfg);
  const auto curves = derivative_experiment(e, ds.axes, ds.relative_step);
  CsvBuilder csv(prov, {"axis", "n", "m", "step", "derivative", "stderr"});
  json fits = json::object();
  std::ostringstream summary;
  for (const auto& c : curves) {
    for (const auto& r : c.rows) csv.row(axis_name(c.axis), r.n, r.m, r.step, r.derivative, r.std_err);
    fits[axis_name(c.axis)] = fit_json(c.fit);
    summary << axis_name(c.axis) << " slope " << c.fit.slope << "  ";
  }
  CommandResult res;
  res.artifacts.push_back(csv.finish("derivatives.csv"));
  res.artifacts.push_back(json_artifact("derivative_slopes.json", {{"slopes", fits}}, prov));
  res.summary = summary.str();
  return res;
}

CommandResult cmd_calibrate_experiment(const ExperimentConfig& cfg) {
  CalibrationExperiment ce;
  ce.setup = need_simulation(cfg, "calibrate").setup;
  ce.theta = cfg.simulation->theta;
  const CalibrationSizes cs = cfg.calibration.value_or(CalibrationSizes{});
  ce.n = cs.n;
  ce.n_cal = cs.n_cal;
  const json prov = provenance("calibrate", cfg);
  const CalibrationExperimentResult r = run_calibration_experiment(ce);
  json reps = json::array();
  for (const auto& rep : r.replicates)
    reps.push_back({{"alpha", rep.calibration.alpha},
                    {"calibration_set_cal_before", rep.calibration.pre_cal},
                    {"calibration_set_cal_after", rep.cal_set_after.cal},
                    {"test_before", metrics_json(rep.test_before)},
                    {"test_after", metrics_json(rep.test_after)},
                    {"max_mean_change", rep.max_mean_change}});
  json body{{"m", r.m},
            {"n", ce.n},
            {"n_cal", ce.n_cal},
            {"n_test", ce.setup.n_test},
            {"alpha_mean", r.alpha_mean},
            {"calibration_set_after", metrics_json(r.cal_after_mean)},
            {"test_before", metrics_json(r.test_before_mean)},
            {"test_after", metrics_json(r.test_after_mean)},
            {"test_cal_after_sd", r.test_cal_after_sd},
            {"variance_convention", ce.setup.latent_variance ? "latent" : "predictive"},
            {"replicates", reps}};
  CommandResult res;
  res.artifacts.push_back(json_artifact("calibration.json", body, prov));
  std::ostringstream s;
  s << "alpha " << r.alpha_mean << "; test CAL " << r.test_before_mean.cal << " -> " << r.test_after_mean.cal
    << ", NLL " << r.test_before_mean.nll << " -> " << r.test_after_mean.nll;
  res.summary = s.str();
  return res;
}

CommandResult cmd_calibrate_dataset(const ExperimentConfig& cfg) {
  const ModelSettings& model = need_model(cfg, "calibrate", true);
  const Dataset train = load_dataset(need_path(cfg.data.train, "data.train"));
  const Dataset cal = load_dataset(need_path(cfg.data.calibration, "data.calibration"));
  const BatchPrediction p = predict_batch(train, cal, model.kernel, *model.theta, model.m, predict_options(model), cfg.threads);
  const auto r = residuals(cal, p);
  const CalibrationResult c = calibration_alpha(r, p.variance);
  const HyperParams calibrated = apply_calibration(*model.theta, c.alpha);
  const json prov = provenance("calibrate", cfg);
  CommandResult res;
  res.artifacts.push_back(json_artifact(
      "theta.json", {{"theta", theta_to_json(calibrated)}, {"uncalibrated", theta_to_json(*model.theta)}, {"alpha", c.alpha}},
      prov));
  res.artifacts.push_back(json_artifact(
      "metrics.json",
      {{"calibration", {{"alpha", c.alpha}, {"n_cal", c.n_cal}, {"cal_before", c.pre_cal}, {"cal_after", c.post_cal}}}},
      prov));
  res.summary = "alpha " + format_double(c.alpha);
  return res;
}

CommandResult cmd_fit(const ExperimentConfig& cfg) {
  const ModelSettings& model = need_model(cfg, "fit", false);
  const FitSettings fs = cfg.fit.value_or(FitSettings{});
  const Dataset train = load_dataset(need_path(cfg.data.train, "data.train"));
  FitSettings run = fs;
  run.optimiser.threads = cfg.threads;
  const FitOutcome fo = run_fit(train, model, run, cfg.master_seed);
  const json prov = provenance("fit", cfg);
  CommandResult res;
  res.artifacts.push_back(json_artifact("theta.json",
                                        {{"theta", theta_to_json(fo.result.theta)},
                                         {"init", theta_to_json(fo.init)},
                                         {"blocks_used", fo.blocks_used},
                                         {"block_size", fs.block_size},
                                         {"final_objective", fo.result.trace.empty() ? 0.0 : fo.result.trace.back()}},
                                        prov));
  res.artifacts.push_back(trace_artifact(fo.result.trace, prov));
  res.summary = "fitted noise_var " + format_double(fo.result.theta.noise_var) + ", kernel_scale " +
                format_double(fo.result.theta.kernel_scale) + ", lengthscale " +
                format_double(fo.result.theta.lengthscale);
  return res;
}

CommandResult cmd_predict(const ExperimentConfig& cfg) {
  const ModelSettings& model = need_model(cfg, "predict", true);
  const Dataset train = load_dataset(need_path(cfg.data.train, "data.train"));
  const Dataset test = load_dataset(need_path(cfg.data.test, "data.test"), false);
  const BatchPrediction p = predict_batch(train, test, model.kernel, *model.theta, model.m, predict_options(model), cfg.threads);
  const json prov = provenance("predict", cfg);
  CommandResult res;
  res.artifacts.push_back(predictions_artifact(p, prov));
  res.summary = std::to_string(p.mean.size()) + " predictions";
  if (test.has_response()) {
    const MetricSummary m = score(test, p);
    res.artifacts.push_back(json_artifact("metrics.json", {{"test", metrics_json(m)}}, prov));
    res.summary += "; MSE " + format_double(m.mse) + ", CAL " + format_double(m.cal) + ", NLL " + format_double(m.nll);
  }
  return res;
}

CommandResult cmd_workflow(const ExperimentConfig& cfg) {
  const ModelSettings& model = need_model(cfg, "workflow", false);
  const FitSettings fs = cfg.fit.value_or(FitSettings{});
  const json prov = provenance("workflow", cfg);

  struct Loaded {
    Dataset train, test;
    std::optional<Dataset> cal;
  };
  const Loaded data = stage("load", [&] {
    Loaded l{load_dataset(need_path(cfg.data.train, "data.train")),
             load_dataset(need_path(cfg.data.test, "data.test"), false), std::nullopt};
    if (cfg.data.calibration) l.cal = load_dataset(*cfg.data.calibration);
    return l;
  });

  // hold out a calibration split unless one was supplied
  const auto [pool, cal] = stage("split", [&] {
    if (data.cal) return std::pair{data.train, *data.cal};
    const std::size_t n = data.train.rows();
    if (cfg.calibrate_n_cal >= n)
      throw InputError("calibrate.n_cal = " + std::to_string(cfg.calibrate_n_cal) + " leaves no training rows (n = " +
                       std::to_string(n) + ")");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    RandomStream rng(cfg.master_seed, StreamTag::kDatasetSplit, {n});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::size_t> cal_rows(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(cfg.calibrate_n_cal));
    std::vector<std::size_t> pool_rows(perm.begin() + static_cast<std::ptrdiff_t>(cfg.calibrate_n_cal), perm.end());
    std::sort(cal_rows.begin(), cal_rows.end());
    std::sort(pool_rows.begin(), pool_rows.end());
    return std::pair{data.train.subset(pool_rows), data.train.subset(cal_rows)};
  });

  FitSettings run = fs;
  run.optimiser.threads = cfg.threads;
  const FitOutcome fo = stage("fit", [&] { return run_fit(pool, model, run, cfg.master_seed); });

  const PredictOptions opts = predict_options(model);
  const CalibrationResult c = stage("calibrate", [&] {
    const BatchPrediction p = predict_batch(pool, cal, model.kernel, fo.result.theta, model.m, opts, cfg.threads);
    return calibration_alpha(residuals(cal, p), p.variance);
  });
  const HyperParams calibrated = apply_calibration(fo.result.theta, c.alpha);

  const BatchPrediction pred = stage("predict", [&] {
    return predict_batch(pool, data.test, model.kernel, calibrated, model.m, opts, cfg.threads);
  });

  CommandResult res;
  res.artifacts.push_back(predictions_artifact(pred, prov));
  res.artifacts.push_back(json_artifact("theta.json",
                                        {{"theta", theta_to_json(calibrated)},
                                         {"fitted", theta_to_json(fo.result.theta)},
                                         {"alpha", c.alpha},
                                         {"blocks_used", fo.blocks_used},
                                         {"block_size", fs.block_size}},
                                        prov));
  json metrics{{"calibration",
                {{"alpha", c.alpha}, {"n_cal", c.n_cal}, {"cal_before", c.pre_cal}, {"cal_after", c.post_cal}}},
               {"train_rows", pool.rows()}};
  std::ostringstream s;
  s << "alpha " << c.alpha;
  if (data.test.has_response()) {
    const MetricSummary m = score(data.test, pred);
    metrics["test"] = metrics_json(m);
    s << "; test MSE " << m.mse << ", CAL " << m.cal << ", NLL " << m.nll;
  }
  res.artifacts.push_back(json_artifact("metrics.json", metrics, prov));
  res.artifacts.push_back(trace_artifact(fo.result.trace, prov));
  res.summary = s.str();
  return res;
}

CommandResult cmd_selfcheck(const ExperimentConfig& cfg) {
  const auto suites = run_selfcheck(cfg.master_seed);
  json arr = json::array();
  bool ok = true;
  std::ostringstream s;
  for (const auto& r : suites) {
    arr.push_back(to_json(r));
    ok = ok && r.passed();
    s << (r.passed() ? "PASS " : "FAIL ") << r.name << " (" << r.cases - r.failures << "/" << r.cases << ")"
      << (r.detail.empty() ? "" : " " + r.detail) << "\n";
  }
  CommandResult res;
  res.artifacts.push_back(json_artifact("selfcheck.json", {{"suites", arr}, {"passed", ok}}, provenance("selfcheck", cfg)));
  res.exit_code = ok ? kExitOk : kExitCheckFailed;
  res.summary = s.str();
  if (!res.summary.empty()) res.summary.pop_back();
  return res;
}

}  // namespace

std::string provenance_line(const nlohmann::json& prov) { return "# provenance: " + prov.dump() + "\n"; }

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"rates", "landscape", "derivatives", "calibrate",
                                              "fit",   "predict",   "workflow",    "selfcheck"};
  return names;
}

CommandResult execute_command(const std::string& command, const ExperimentConfig& cfg) {
  if (command == "rates") return cmd_rates(cfg);
  if (command == "landscape") return cmd_landscape(cfg);
  if (command == "derivatives") return cmd_derivatives(cfg);
  if (command == "calibrate") return cfg.simulation ? cmd_calibrate_experiment(cfg) : cmd_calibrate_dataset(cfg);
  if (command == "fit") return cmd_fit(cfg);
  if (command == "predict") return cmd_predict(cfg);
  if (command == "workflow") return cmd_workflow(cfg);
  if (command == "selfcheck") return cmd_selfcheck(cfg);
  throw InputError("unknown subcommand '" + command + "'");
}

void write_artifacts(const std::filesystem::path& dir, const std::vector<Artifact>& artifacts) {
  namespace fs = std::filesystem;
  std::vector<fs::path> written;
  try {
    fs::create_directories(dir);
    for (const auto& a : artifacts) {
      const fs::path p = dir / a.name;
      std::ofstream out(p, std::ios::binary | std::ios::trunc);
      if (!out) throw InputError("cannot write '" + p.string() + "'");
      written.push_back(p);
      out << a.content;
      out.close();
      if (!out) throw InputError("failed writing '" + p.string() + "'");
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
    throw;
  }
}

int run_cli(const CliRequest& req, std::ostream& out, std::ostream& err) {
  try {
    if (std::find(command_names().begin(), command_names().end(), req.command) == command_names().end())
      throw InputError("unknown subcommand '" + req.command + "'");
    ExperimentConfig cfg;
    if (req.config) {
      cfg = load_config(*req.config, req.seed);
    } else if (req.command == "selfcheck") {
      cfg = parse_config(nlohmann::json::object(), {}, req.seed);
    } else {
      throw InputError(req.command + ": --config is required");
    }
    const CommandResult res = execute_command(req.command, cfg);
    const std::filesystem::path dir = req.out ? *req.out : cfg.output.value_or("gpnn_out");
    write_artifacts(dir, res.artifacts);
    if (!res.summary.empty()) out << res.summary << "\n";
    for (const auto& a : res.artifacts) out << "wrote " << (dir / a.name).string() << "\n";
    return res.exit_code;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumericError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumericError;
  }
}

}  // namespace gpnn
