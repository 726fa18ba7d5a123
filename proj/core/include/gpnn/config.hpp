#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "gpnn/hyperfit.hpp"
#include "gpnn/simulation.hpp"

namespace gpnn {

struct LandscapeSweep {
  HyperAxis axis = HyperAxis::kLengthscale;
  std::vector<double> values;
};

struct DerivativeSettings {
  std::vector<HyperAxis> axes;
  double relative_step = 0.02;
};

struct CalibrationSizes {
  std::size_t n = 10000;
  std::size_t n_cal = 2000;
};

struct DataPaths {
  std::optional<std::filesystem::path> train, test, calibration;  // resolved against the config directory
};

struct ModelSettings {
  KernelSpec kernel = KernelSpec::matern(1.5);
  std::size_t m = 50;
  std::optional<HyperParams> theta;
  bool gamma_correction = true;
};

struct FitSettings {
  std::size_t blocks = 20;
  std::size_t block_size = 100;
  FitConfig optimiser;
  bool has_init = false;
};

/// Validated configuration.  `resolved` is the input with every default filled
/// in (thread count and output directory excluded) and is what outputs embed.
struct ExperimentConfig {
  nlohmann::json resolved;
  std::uint64_t master_seed = 0;
  std::size_t threads = 1;
  std::optional<std::filesystem::path> output;

  std::optional<RateExperiment> simulation;
  std::vector<LandscapeSweep> landscape;
  std::optional<DerivativeSettings> derivatives;
  std::optional<CalibrationSizes> calibration;
  DataPaths data;
  std::optional<ModelSettings> model;
  std::optional<FitSettings> fit;
  std::size_t calibrate_n_cal = 2000;
};

/// Strict schema validation: unknown keys, wrong types and out-of-range values
/// throw InputError naming the JSON path.  Dataset paths are taken relative to
/// `base_dir`.  `seed_override` replaces master_seed before anything derives
/// from it.
ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {},
                              std::optional<std::uint64_t> seed_override = std::nullopt);
ExperimentConfig load_config(const std::filesystem::path& path,
                             std::optional<std::uint64_t> seed_override = std::nullopt);

nlohmann::json theta_to_json(const HyperParams& theta);
nlohmann::json kernel_to_json(const KernelSpec& kernel);

/// Geometric grid of `points` integers from lo to hi (duplicates removed).
std::vector<std::size_t> geometric_grid(std::size_t lo, std::size_t hi, std::size_t points);

}  // namespace gpnn
