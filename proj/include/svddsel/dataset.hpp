#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "svddsel/error.hpp"
#include "svddsel/rng.hpp"

namespace svddsel {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Point = Eigen::Ref<const Eigen::RowVectorXd>;

/// A sample of l points in R^n, stored row-wise. Immutable after
/// construction; the constructor rejects empty or non-finite data.
class Dataset {
 public:
  Dataset(Matrix points, std::string name = {}) : points_(std::move(points)), name_(std::move(name)) {
    if (points_.rows() < 1 || points_.cols() < 1)
      throw InvalidArgument("dataset must have at least one row and one column");
    if (!points_.allFinite()) throw InvalidArgument("dataset '" + name_ + "' contains non-finite values");
  }

  const Matrix& points() const noexcept { return points_; }
  const std::string& name() const noexcept { return name_; }
  Eigen::Index size() const noexcept { return points_.rows(); }
  Eigen::Index dim() const noexcept { return points_.cols(); }
  auto row(Eigen::Index i) const { return points_.row(i); }

  /// Rows at the given indices, in the given order.
  Dataset subset(const std::vector<Eigen::Index>& indices, std::string name) const {
    Matrix out(static_cast<Eigen::Index>(indices.size()), dim());
    for (std::size_t k = 0; k < indices.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = points_.row(indices[k]);
    return Dataset(std::move(out), std::move(name));
  }

 private:
  Matrix points_;
  std::string name_;
};

/// Dataset with one integer label per row. For one-class work labels are
/// +1 (normal) and -1 (anomaly); multiclass sources carry arbitrary class ids.
struct LabeledDataset {
  LabeledDataset(Dataset d, std::vector<int> y) : data(std::move(d)), labels(std::move(y)) {
    if (static_cast<Eigen::Index>(labels.size()) != data.size())
      throw InvalidArgument("label count does not match row count");
  }

  Dataset data;
  std::vector<int> labels;

  std::size_t count(int label) const { return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label)); }
  std::size_t normals() const { return count(+1); }
  std::size_t anomalies() const { return count(-1); }
};

struct BoundingBox {
  BoundingBox(Vector lower, Vector upper) : lo(std::move(lower)), hi(std::move(upper)) {
    if (lo.size() != hi.size() || lo.size() < 1) throw InvalidArgument("bounding box bounds must share a positive dimension");
    for (Eigen::Index d = 0; d < lo.size(); ++d)
      if (!(lo[d] <= hi[d]) || !std::isfinite(lo[d]) || !std::isfinite(hi[d]))
        throw InvalidArgument("bounding box requires finite lo <= hi in every dimension");
  }

  /// The cube [lo, hi]^dim.
  static BoundingBox cube(Eigen::Index dim, double lo, double hi) {
    return BoundingBox(Vector::Constant(dim, lo), Vector::Constant(dim, hi));
  }

  Eigen::Index dim() const noexcept { return lo.size(); }
  bool contains(Point x) const {
    for (Eigen::Index d = 0; d < dim(); ++d)
      if (x[d] < lo[d] || x[d] > hi[d]) return false;
    return true;
  }

  Vector lo;
  Vector hi;
};

inline constexpr double kDegenerateExtent = 1e-6;

/// Per-dimension min/max box scaled by `factor` about its center. Dimensions
/// with zero extent become [c - epsilon, c + epsilon].
inline BoundingBox bounding_box(const Dataset& data, double factor, double epsilon = kDegenerateExtent) {
  if (!(factor >= 1.0) || !std::isfinite(factor)) throw InvalidArgument("bounding box factor must be >= 1");
  const Vector lo = data.points().colwise().minCoeff().transpose();
  const Vector hi = data.points().colwise().maxCoeff().transpose();
  Vector out_lo(lo.size()), out_hi(hi.size());
  for (Eigen::Index d = 0; d < lo.size(); ++d) {
    if (hi[d] == lo[d]) {
      out_lo[d] = lo[d] - epsilon;
      out_hi[d] = hi[d] + epsilon;
    } else if (factor == 1.0) {
      out_lo[d] = lo[d];
      out_hi[d] = hi[d];
    } else {
      const double center = 0.5 * (lo[d] + hi[d]);
      const double half = 0.5 * factor * (hi[d] - lo[d]);
      out_lo[d] = center - half;
      out_hi[d] = center + half;
    }
  }
  return BoundingBox(std::move(out_lo), std::move(out_hi));
}

/// `count` points, each drawn from an isotropic unit-variance Gaussian
/// centered at a uniformly chosen element of `means`.
inline Dataset gen_gaussian_mixture(Seed seed, Eigen::Index count, const std::vector<Vector>& means) {
  if (count < 1) throw InvalidArgument("count must be >= 1");
  if (means.empty()) throw InvalidArgument("mixture needs at least one mean");
  const Eigen::Index dim = means.front().size();
  for (const auto& m : means)
    if (m.size() != dim || dim < 1) throw InvalidArgument("mixture means have inconsistent dimensions");

  auto engine = make_engine(seed);
  std::uniform_int_distribution<std::size_t> pick(0, means.size() - 1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix points(count, dim);
  for (Eigen::Index i = 0; i < count; ++i) {
    const Vector& mean = means[pick(engine)];
    for (Eigen::Index d = 0; d < dim; ++d) points(i, d) = mean[d] + gauss(engine);
  }
  return Dataset(std::move(points), "gaussian_mixture(seed=" + std::to_string(seed) + ",count=" + std::to_string(count) + ")");
}

/// Draws one point uniformly from `box` into `out`.
template <typename Row>
void draw_uniform(Engine& engine, const BoundingBox& box, Row&& out) {
  for (Eigen::Index d = 0; d < box.dim(); ++d) {
    std::uniform_real_distribution<double> u(box.lo[d], box.hi[d]);
    out[d] = u(engine);
  }
}

inline Dataset gen_uniform(Seed seed, Eigen::Index count, const BoundingBox& box) {
  if (count < 1) throw InvalidArgument("count must be >= 1");
  auto engine = make_engine(seed);
  Matrix points(count, box.dim());
  for (Eigen::Index i = 0; i < count; ++i) draw_uniform(engine, box, points.row(i));
  return Dataset(std::move(points), "uniform(seed=" + std::to_string(seed) + ",count=" + std::to_string(count) + ")");
}

/// Stacks datasets of equal dimension row-wise.
inline Dataset concatenate(const std::vector<const Dataset*>& parts, std::string name) {
  if (parts.empty()) throw InvalidArgument("nothing to concatenate");
  Eigen::Index rows = 0;
  for (const auto* p : parts) {
    if (p->dim() != parts.front()->dim()) throw InvalidArgument("cannot concatenate datasets of different dimension");
    rows += p->size();
  }
  Matrix out(rows, parts.front()->dim());
  Eigen::Index at = 0;
  for (const auto* p : parts) {
    out.middleRows(at, p->size()) = p->points();
    at += p->size();
  }
  return Dataset(std::move(out), std::move(name));
}

struct OneClassTask {
  Dataset train;
  LabeledDataset validation;
};

/// Turns one class of a multiclass dataset into a one-class problem: that
/// class is normal; ceil(anomaly_fraction * #normals) anomalies are drawn
/// uniformly from the normals' bounding box scaled by box_factor. Normals are
/// shuffled by seed and split; every synthetic anomaly goes to validation.
inline OneClassTask make_one_class_task(const LabeledDataset& source, int target_class, double anomaly_fraction,
                                        double box_factor, double val_fraction, Seed seed) {
  if (!(anomaly_fraction > 0.0 && anomaly_fraction < 1.0)) throw InvalidArgument("anomaly_fraction must lie in (0,1)");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw InvalidArgument("val_fraction must lie in (0,1)");

  std::vector<Eigen::Index> normal_rows;
  for (std::size_t i = 0; i < source.labels.size(); ++i)
    if (source.labels[i] == target_class) normal_rows.push_back(static_cast<Eigen::Index>(i));
  if (normal_rows.empty())
    throw InvalidArgument("class " + std::to_string(target_class) + " is absent from '" + source.data.name() + "'");
  if (normal_rows.size() < 2) throw InvalidArgument("one-class task needs at least 2 normal rows");

  const std::string base = source.data.name() + ":class=" + std::to_string(target_class);
  const Dataset normals = source.data.subset(normal_rows, base);
  const auto n_normals = static_cast<double>(normal_rows.size());
  // The 1e-9 guard keeps products like 0.15 * 100 from rounding up to 16.
  const auto n_anomalies = static_cast<Eigen::Index>(std::ceil(anomaly_fraction * n_normals - 1e-9));
  const Dataset anomalies =
      gen_uniform(derive_seed(seed, {kStreamAnomalies}), n_anomalies, bounding_box(normals, box_factor));

  std::vector<Eigen::Index> order(normal_rows.size());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  auto engine = make_engine(derive_seed(seed, {kStreamSplit}));
  std::shuffle(order.begin(), order.end(), engine);
  auto n_val = static_cast<std::size_t>(std::llround(val_fraction * n_normals));
  n_val = std::clamp<std::size_t>(n_val, 1, normal_rows.size() - 1);
  std::vector<Eigen::Index> val_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<Eigen::Index> train_rows(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(val_rows.begin(), val_rows.end());
  std::sort(train_rows.begin(), train_rows.end());

  char suffix[64];
  std::snprintf(suffix, sizeof suffix, ":anom=%g", anomaly_fraction);
  Dataset val_normals = normals.subset(val_rows, base);
  std::vector<int> labels(val_rows.size(), +1);
  labels.resize(labels.size() + static_cast<std::size_t>(n_anomalies), -1);
  return OneClassTask{normals.subset(train_rows, base + suffix + ":train"),
                      LabeledDataset(concatenate({&val_normals, &anomalies}, base + suffix + ":validation"),
                                     std::move(labels))};
}

/// Two-component 5-d Gaussian mixture (means at +1 and -1, unit covariance)
/// as normal data, uniform anomalies on [-5, 5]^5, and a labelled validation
/// set drawn from the same two laws.
struct MixtureStudy {
  Dataset train;
  Dataset anomalies;
  LabeledDataset validation;
};

inline MixtureStudy mixture_study(Seed seed, Eigen::Index normals = 100, Eigen::Index anomalies = 100,
                                  Eigen::Index val_normals = 5000, Eigen::Index val_anomalies = 5000) {
  const std::vector<Vector> means{Vector::Constant(5, 1.0), Vector::Constant(5, -1.0)};
  const auto cube = BoundingBox::cube(5, -5.0, 5.0);
  const Dataset vn = gen_gaussian_mixture(derive_seed(seed, {3}), val_normals, means);
  const Dataset va = gen_uniform(derive_seed(seed, {4}), val_anomalies, cube);
  std::vector<int> labels(static_cast<std::size_t>(val_normals), +1);
  labels.resize(labels.size() + static_cast<std::size_t>(val_anomalies), -1);
  return MixtureStudy{gen_gaussian_mixture(derive_seed(seed, {1}), normals, means),
                      gen_uniform(derive_seed(seed, {2}), anomalies, cube),
                      LabeledDataset(concatenate({&vn, &va}, "mixture_validation"), std::move(labels))};
}

// ---------------------------------------------------------------------------
// CSV: comma separated, header row, '.' decimal point, no quoting.

enum class LabelDomain { kBinary, kMulticlass };

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Reads a CSV file. Without a label column every row is labelled +1. In
/// binary mode labels must be +1 or -1; in multiclass mode any integer.
inline LabeledDataset load_csv(const std::filesystem::path& path, const std::optional<std::string>& label_column = {},
                               LabelDomain domain = LabelDomain::kBinary) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || detail::trim(line).empty()) throw ParseError("'" + path.string() + "' is empty");

  std::vector<std::string> header;
  for (auto f : detail::split_fields(line)) header.emplace_back(detail::trim(f));
  std::optional<std::size_t> label_at;
  if (label_column) {
    const auto it = std::find(header.begin(), header.end(), *label_column);
    if (it == header.end()) throw ParseError("'" + path.string() + "' has no column named '" + *label_column + "'");
    label_at = static_cast<std::size_t>(it - header.begin());
  }
  const std::size_t n_features = header.size() - (label_at ? 1 : 0);
  if (n_features == 0) throw ParseError("'" + path.string() + "' has no feature columns");

  std::vector<double> values;
  std::vector<int> labels;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    ++row;
    const auto fields = detail::split_fields(line);
    if (fields.size() != header.size())
      throw ParseError("row " + std::to_string(row) + ": expected " + std::to_string(header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const auto v = detail::parse_double(fields[c]);
      if (!v || !std::isfinite(*v))
        throw ParseError("row " + std::to_string(row) + ", column '" + header[c] + "': cannot parse '" +
                         std::string(detail::trim(fields[c])) + "' as a finite number");
      if (label_at && c == *label_at) {
        if (*v != std::round(*v) || (domain == LabelDomain::kBinary && *v != 1.0 && *v != -1.0))
          throw ParseError("row " + std::to_string(row) + ", column '" + header[c] + "': label '" +
                           std::string(detail::trim(fields[c])) +
                           (domain == LabelDomain::kBinary ? "' is not +1 or -1" : "' is not an integer"));
        labels.push_back(static_cast<int>(*v));
      } else {
        values.push_back(*v);
      }
    }
    if (!label_at) labels.push_back(+1);
  }
  if (row == 0) throw ParseError("'" + path.string() + "' has a header but no data rows");

  Matrix points = Eigen::Map<Matrix>(values.data(), static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(n_features));
  return LabeledDataset(Dataset(std::move(points), path.stem().string()), std::move(labels));
}

/// Writes features as f1..fn (plus an optional label column) with 17
/// significant digits, so load_csv reproduces the values exactly.
inline void write_csv(std::ostream& out, const Dataset& data, const std::vector<int>* labels = nullptr,
                      const std::string& label_column = "label") {
  for (Eigen::Index d = 0; d < data.dim(); ++d) out << (d ? "," : "") << 'f' << (d + 1);
  if (labels) out << ',' << label_column;
  out << '\n';
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (Eigen::Index d = 0; d < data.dim(); ++d) out << (d ? "," : "") << detail::format_double(data.points()(i, d));
    if (labels) out << ',' << (*labels)[static_cast<std::size_t>(i)];
    out << '\n';
  }
}

inline void write_csv(const std::filesystem::path& path, const Dataset& data, const std::vector<int>* labels = nullptr,
                      const std::string& label_column = "label") {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path.string() + "'");
  write_csv(out, data, labels, label_column);
  if (!out) throw ParseError("write to '" + path.string() + "' failed");
}

}  // namespace svddsel
