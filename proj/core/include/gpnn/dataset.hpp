#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gpnn/hyperparams.hpp"
#include "gpnn/kernels.hpp"
#include "gpnn/local_gp.hpp"
#include "gpnn/neighbors.hpp"

namespace gpnn {

/// X (n x d), optional y, optional regressors T (n x d_T).
struct Dataset {
  PointMatrix x;
  Eigen::VectorXd y;      // empty when the file has no y column
  Eigen::MatrixXd t;      // 0 columns when absent

  std::size_t rows() const noexcept { return static_cast<std::size_t>(x.rows()); }
  bool has_response() const noexcept { return y.size() == x.rows() && x.rows() > 0; }
  bool has_regressors() const noexcept { return t.cols() > 0; }

  Dataset subset(const std::vector<std::size_t>& rows) const;
};

/// Parses a CSV with header x1..xd[,y][,t1..tdT] (any column order).
/// Errors name the offending line and column.
Dataset load_dataset(const std::filesystem::path& path, bool require_response = true);
Dataset parse_dataset(const std::string& text, bool require_response = true, const std::string& source = "<memory>");

std::string format_double(double v);  // 17 significant digits

/// Dataset rendered back to CSV (header x1..,y,t1..).
std::string dataset_to_csv(const Dataset& data);

struct BatchPrediction {
  std::vector<double> mean;
  std::vector<double> variance;
};

/// m-NN prediction of every row of `query` from `train`.  Uses the NNGP
/// predictor when theta.b is non-empty (regressors required on both sets),
/// GPnn otherwise.
BatchPrediction predict_batch(const Dataset& train, const Dataset& query, const KernelSpec& kernel,
                              const HyperParams& theta, std::size_t m, const PredictOptions& opts = {},
                              std::size_t threads = 1);

}  // namespace gpnn
