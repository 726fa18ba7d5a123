#include "gpnn/dataset.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "gpnn/errors.hpp"
#include "gpnn/parallel.hpp"

namespace gpnn {
namespace {

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Parses "<prefix><k>" with k >= 1; returns 0 on mismatch.
std::size_t indexed_name(std::string_view name, char prefix) {
  if (name.size() < 2 || name.front() != prefix) return 0;
  std::size_t k = 0;
  const auto* b = name.data() + 1;
  const auto* e = name.data() + name.size();
  auto [p, ec] = std::from_chars(b, e, k);
  if (ec != std::errc() || p != e || k == 0) return 0;
  return k;
}

}  // namespace

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.x = gather_rows(x, rows);
  if (has_response()) {
    out.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) out.y(static_cast<Eigen::Index>(k)) = y(static_cast<Eigen::Index>(rows[k]));
  }
  out.t.resize(static_cast<Eigen::Index>(rows.size()), t.cols());
  for (std::size_t k = 0; k < rows.size() && t.cols() > 0; ++k)
    out.t.row(static_cast<Eigen::Index>(k)) = t.row(static_cast<Eigen::Index>(rows[k]));
  return out;
}

Dataset parse_dataset(const std::string& text, bool require_response, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  // skip leading comment lines (provenance headers)
  do {
    if (!std::getline(in, line)) throw InputError(source + ": empty file (missing header)");
    if (line_no++ == 0 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  } while (!line.empty() && line[0] == '#');

  const auto header = split_csv_line(line);
  std::map<std::size_t, std::size_t> xcol, tcol;  // k -> column
  std::optional<std::size_t> ycol;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string_view h = trim(header[c]);
    names.emplace_back(h);
    if (h == "y") {
      if (ycol) throw InputError(source + ": duplicate column 'y'");
      ycol = c;
    } else if (std::size_t k = indexed_name(h, 'x')) {
      if (!xcol.emplace(k, c).second) throw InputError(source + ": duplicate column '" + std::string(h) + "'");
    } else if (std::size_t k2 = indexed_name(h, 't')) {
      if (!tcol.emplace(k2, c).second) throw InputError(source + ": duplicate column '" + std::string(h) + "'");
    } else {
      throw InputError(source + ": unrecognised column '" + std::string(h) + "' (expected x1..xd, y, t1..tdT)");
    }
  }
  if (xcol.empty()) throw InputError(source + ": no covariate columns x1..xd");
  for (std::size_t k = 1; k <= xcol.size(); ++k)
    if (!xcol.count(k)) throw InputError(source + ": missing column x" + std::to_string(k));
  for (std::size_t k = 1; k <= tcol.size(); ++k)
    if (!tcol.count(k)) throw InputError(source + ": missing column t" + std::to_string(k));
  if (require_response && !ycol) throw InputError(source + ": missing column 'y'");

  const std::size_t d = xcol.size(), dt = tcol.size();
  std::vector<double> xs, ys, ts;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw InputError(source + ": line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                       " cells, header has " + std::to_string(header.size()));
    auto value = [&](std::size_t c) {
      const std::string_view s = trim(cells[c]);
      double v = 0.0;
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (s.empty() || ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
        throw InputError(source + ": line " + std::to_string(line_no) + ", column '" + names[c] +
                         "': invalid or non-finite number '" + std::string(s) + "'");
      return v;
    };
    for (std::size_t k = 1; k <= d; ++k) xs.push_back(value(xcol[k]));
    if (ycol) ys.push_back(value(*ycol));
    for (std::size_t k = 1; k <= dt; ++k) ts.push_back(value(tcol[k]));
    ++rows;
  }
  if (rows == 0) throw InputError(source + ": no data rows");

  Dataset data;
  const auto n = static_cast<Eigen::Index>(rows);
  data.x = Eigen::Map<const PointMatrix>(xs.data(), n, static_cast<Eigen::Index>(d));
  if (ycol) data.y = Eigen::Map<const Eigen::VectorXd>(ys.data(), n);
  data.t = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      ts.data(), n, static_cast<Eigen::Index>(dt));
  return data;
}

Dataset load_dataset(const std::filesystem::path& path, bool require_response) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open dataset '" + path.string() + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_dataset(ss.str(), require_response, path.string());
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string dataset_to_csv(const Dataset& data) {
  std::string out;
  for (Eigen::Index j = 0; j < data.x.cols(); ++j) out += (j ? ",x" : "x") + std::to_string(j + 1);
  if (data.has_response()) out += ",y";
  for (Eigen::Index j = 0; j < data.t.cols(); ++j) out += ",t" + std::to_string(j + 1);
  out += '\n';
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.x.cols(); ++j) out += (j ? "," : "") + format_double(data.x(i, j));
    if (data.has_response()) out += "," + format_double(data.y(i));
    for (Eigen::Index j = 0; j < data.t.cols(); ++j) out += "," + format_double(data.t(i, j));
    out += '\n';
  }
  return out;
}

BatchPrediction predict_batch(const Dataset& train, const Dataset& query, const KernelSpec& kernel,
                              const HyperParams& theta, std::size_t m, const PredictOptions& opts,
                              std::size_t threads) {
  theta.validate();
  if (!train.has_response()) throw InputError("predict: training data needs a y column");
  if (train.x.cols() != query.x.cols()) throw InputError("predict: train/test covariate dimensions differ");
  const bool nngp = theta.b.size() > 0;
  if (nngp && (train.t.cols() != theta.b.size() || query.t.cols() != theta.b.size()))
    throw InputError("predict: NNGP prediction needs t1..tdT columns matching |b| in both datasets");
  if (m == 0 || m > train.rows()) throw InputError("predict: m must lie in [1, training rows]");

  const KnnIndex index(train.x);
  BatchPrediction out;
  out.mean.resize(query.rows());
  out.variance.resize(query.rows());
  parallel_for(query.rows(), threads, [&](std::size_t i) {
    const Eigen::VectorXd x = query.x.row(static_cast<Eigen::Index>(i)).transpose();
    const NeighborSet ns = index.knn(x, m);
    const LocalSystem sys = assemble_local_system(x, ns, train.x, kernel, theta);
    Eigen::VectorXd y(static_cast<Eigen::Index>(m));
    for (std::size_t k = 0; k < m; ++k) y(static_cast<Eigen::Index>(k)) = train.y(static_cast<Eigen::Index>(ns.indices[k]));
    PredictiveDistribution pd;
    if (nngp) {
      Eigen::MatrixXd tn(static_cast<Eigen::Index>(m), train.t.cols());
      for (std::size_t k = 0; k < m; ++k)
        tn.row(static_cast<Eigen::Index>(k)) = train.t.row(static_cast<Eigen::Index>(ns.indices[k]));
      pd = predict_nngp(sys, y, query.t.row(static_cast<Eigen::Index>(i)).transpose(), tn, theta, opts);
    } else {
      pd = predict_gpnn(sys, y, opts);
    }
    out.mean[i] = pd.mean;
    out.variance[i] = pd.variance;
  });
  return out;
}

}  // namespace gpnn
