#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "svddsel/dataset.hpp"
#include "svddsel/error.hpp"
#include "svddsel/kernel.hpp"
#include "svddsel/parallel.hpp"
#include "svddsel/risk.hpp"
#include "svddsel/sampling.hpp"
#include "svddsel/svdd.hpp"

namespace svddsel {

/// Strictly increasing sequence of bandwidths.
class GammaGrid {
 public:
  explicit GammaGrid(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() < 2) throw InvalidArgument("gamma grid needs at least 2 values");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      (void)Bandwidth(values_[i]);
      if (i > 0 && !(values_[i] > values_[i - 1])) throw InvalidArgument("gamma grid must be strictly increasing");
    }
  }

  static GammaGrid log_spaced(double min, double max, std::size_t steps) {
    if (!(min > 0.0) || !(max > min) || steps < 2) throw InvalidArgument("log grid needs 0 < min < max and steps >= 2");
    std::vector<double> v(steps);
    const double a = std::log(min), b = std::log(max);
    for (std::size_t i = 0; i < steps; ++i)
      v[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(steps - 1));
    v.front() = min;
    v.back() = max;
    return GammaGrid(std::move(v));
  }

  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  Bandwidth operator[](std::size_t i) const { return Bandwidth(values_[i]); }

 private:
  std::vector<double> values_;
};

/// Median of the pairwise squared distances; zero distances are skipped
/// when the median itself would be zero.
inline double median_pairwise_sq_distance(const Dataset& data) {
  std::vector<double> d;
  for (Eigen::Index i = 0; i < data.size(); ++i)
    for (Eigen::Index j = i + 1; j < data.size(); ++j) d.push_back(squared_distance(data.row(i), data.row(j)));
  const auto median = [](std::vector<double>& v) {
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
  };
  if (d.empty()) throw InvalidArgument("median distance needs at least 2 points");
  double m = median(d);
  if (m <= 0.0) {
    std::erase(d, 0.0);
    if (d.empty()) throw InvalidArgument("all points coincide; no natural kernel scale");
    m = median(d);
  }
  return m;
}

struct AutoGrid {
  GammaGrid grid;
  double median_sq_distance;
};

/// steps log-spaced bandwidths on [1e-2, 1e2] times the median squared distance.
inline AutoGrid auto_grid(const Dataset& train, std::size_t steps = 50) {
  const double m = median_pairwise_sq_distance(train);
  return {GammaGrid::log_spaced(1e-2 * m, 1e2 * m, steps), m};
}

/// A risk (or validation error) sampled on a gamma grid.
struct RiskCurve {
  std::optional<RiskKind> kind;  // empty for a validation-error curve
  std::vector<double> gammas;
  std::vector<double> values;
  double nu = 0.0;
  Seed seed = 0;

  std::string kind_name() const { return kind ? std::string(to_string(*kind)) : "validation"; }
  std::size_t size() const noexcept { return values.size(); }
};

/// Everything a sweep needs besides the data and grid.
struct SweepOptions {
  SvddConfig svdd;
  RiskKind kind = RiskKind::kEmpirical;
  Seed seed = 0;
  /// Monte-Carlo sample count; max(10000, 100 l) when unset.
  std::optional<Eigen::Index> mc_count;
  int smote_k = 5;
  double smote_multiplier = 1.0;
  /// Anomaly box is bounding_box(train, box_factor) unless given explicitly.
  double box_factor = 2.0;
  std::optional<BoundingBox> anomaly_box;
  std::size_t jobs = 1;
};

/// Seeds used at one grid point; a pure function of (sweep seed, index).
struct PointSeeds {
  Seed fit, monte_carlo, polarization;
};

inline PointSeeds point_seeds(Seed seed, std::size_t index) {
  return {derive_seed(seed, {index, kStreamFit}), derive_seed(seed, {index, kStreamMonteCarlo}),
          derive_seed(seed, {index, kStreamPolarization})};
}

/// SMOTE seed for a sweep; the synthetic set does not depend on gamma.
inline Seed smote_seed(Seed seed) { return derive_seed(seed, {kStreamSmote}); }

inline BoundingBox anomaly_box(const Dataset& train, const SweepOptions& options) {
  return options.anomaly_box ? *options.anomaly_box : bounding_box(train, options.box_factor);
}

namespace detail {

inline double evaluate_point(const Dataset& train, Bandwidth gamma, std::size_t index, const SweepOptions& options,
                             const BoundingBox& box, const Dataset* synthetic) {
  const auto seeds = point_seeds(options.seed, index);
  switch (options.kind) {
    case RiskKind::kKernel: return risk_kernel(gram_matrix(train, gamma));
    case RiskKind::kPolarization:
      return risk_polarization(train, AnomalySampler(box, train.size(), seeds.polarization), gamma);
    default: break;
  }
  const SvddModel model = fit(train, gamma, options.svdd, seeds.fit);
  if (options.kind == RiskKind::kSv) return risk_sv(model_stats(model, train).sv_fraction, options.svdd.nu);
  const AnomalySampler sampler(box, options.mc_count.value_or(default_mc_count(train.size())), seeds.monte_carlo);
  if (options.kind == RiskKind::kEmpirical) return risk_empirical(model, train, options.svdd.nu, sampler);
  return risk_smote(model, *synthetic, options.svdd.nu, sampler);
}

}  // namespace detail

/// One risk value per grid point, in grid order. Failing points (solver
/// errors, degenerate statistics) hold kRiskSentinel.
inline RiskCurve sweep_risk_curve(const Dataset& train, const GammaGrid& grid, const SweepOptions& options) {
  options.svdd.validate();
  const BoundingBox box = anomaly_box(train, options);
  std::optional<Dataset> synthetic;
  if (options.kind == RiskKind::kSmote)
    synthetic = smote_oversample(train, SmoteConfig{options.smote_k, options.smote_multiplier, smote_seed(options.seed)});

  RiskCurve curve{options.kind, grid.values(), std::vector<double>(grid.size(), kRiskSentinel), options.svdd.nu,
                  options.seed};
  parallel_for(grid.size(), options.jobs, [&](std::size_t i) {
    try {
      const double v = detail::evaluate_point(train, grid[i], i, options, box, synthetic ? &*synthetic : nullptr);
      curve.values[i] = std::isfinite(v) ? v : kRiskSentinel;
    } catch (const Error&) {
      curve.values[i] = kRiskSentinel;
    }
  });
  return curve;
}

/// Validation error of the model fitted at each grid point.
inline RiskCurve validation_curve(const Dataset& train, const LabeledDataset& validation, const GammaGrid& grid,
                                  const SvddConfig& config, Seed seed, std::size_t jobs = 1) {
  config.validate();
  RiskCurve curve{std::nullopt, grid.values(), std::vector<double>(grid.size(), kRiskSentinel), config.nu, seed};
  parallel_for(grid.size(), jobs, [&](std::size_t i) {
    try {
      curve.values[i] = validation_error(fit(train, grid[i], config, point_seeds(seed, i).fit), validation);
    } catch (const SolverError&) {
      curve.values[i] = kRiskSentinel;
    }
  });
  return curve;
}

enum class SelectionRule { kArgmin, kPlateauMax };

struct PlateauSpec {
  double rel_tol = 0.05;
  SelectionRule rule = SelectionRule::kPlateauMax;

  void validate() const {
    if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw InvalidArgument("plateau rel_tol must lie in (0, 1)");
  }
};

/// SV risk is piecewise flat with wide plateaus, so it selects by argmin.
inline PlateauSpec default_plateau_spec(RiskKind kind) {
  return PlateauSpec{0.05, kind == RiskKind::kSv ? SelectionRule::kArgmin : SelectionRule::kPlateauMax};
}

inline std::string_view to_string(SelectionRule rule) {
  return rule == SelectionRule::kArgmin ? "argmin" : "plateau-max";
}

inline std::optional<SelectionRule> parse_selection_rule(std::string_view name) {
  if (name == "argmin") return SelectionRule::kArgmin;
  if (name == "plateau-max") return SelectionRule::kPlateauMax;
  return std::nullopt;
}

struct Plateau {
  std::size_t start = 0;
  std::size_t end = 0;  // inclusive
  double threshold = 0.0;
};

/// Longest contiguous run of finite values at or below
/// v_min + rel_tol * (v_max - v_min), with v_max over finite values only.
/// Equal-length runs resolve to the one at larger gamma.
inline Plateau find_plateau(const RiskCurve& curve, const PlateauSpec& spec) {
  spec.validate();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : curve.values)
    if (std::isfinite(v)) lo = std::min(lo, v), hi = std::max(hi, v);
  if (!std::isfinite(lo)) throw InvalidArgument("curve has no finite values");
  const double threshold = lo + spec.rel_tol * (hi - lo);

  Plateau best{0, 0, threshold};
  std::size_t best_len = 0;
  for (std::size_t i = 0; i < curve.size();) {
    if (!(std::isfinite(curve.values[i]) && curve.values[i] <= threshold)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < curve.size() && std::isfinite(curve.values[j + 1]) && curve.values[j + 1] <= threshold) ++j;
    if (j - i + 1 >= best_len) best = {i, j, threshold}, best_len = j - i + 1;
    i = j + 1;
  }
  return best;
}

/// Index of the smallest finite value; the smallest gamma wins ties.
inline std::size_t argmin_index(const RiskCurve& curve) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < curve.size(); ++i)
    if (std::isfinite(curve.values[i]) && (!best || curve.values[i] < curve.values[*best])) best = i;
  if (!best) throw InvalidArgument("curve has no finite values");
  return *best;
}

inline std::size_t select_index(const RiskCurve& curve, const PlateauSpec& spec) {
  if (spec.rule == SelectionRule::kArgmin) {
    spec.validate();
    return argmin_index(curve);
  }
  return find_plateau(curve, spec).end;
}

inline Bandwidth select_gamma(const RiskCurve& curve, const PlateauSpec& spec) {
  return Bandwidth(curve.gammas.at(select_index(curve, spec)));
}

// ---------------------------------------------------------------------------
// CSV: gamma,value,kind,nu. Sentinel values are written as "inf".

inline void write_curve_csv(std::ostream& out, const RiskCurve& curve) {
  out << "gamma,value,kind,nu\n";
  const std::string kind = curve.kind_name();
  const std::string nu = detail::format_double(curve.nu);
  for (std::size_t i = 0; i < curve.size(); ++i)
    out << detail::format_double(curve.gammas[i]) << ','
        << (std::isfinite(curve.values[i]) ? detail::format_double(curve.values[i]) : std::string("inf")) << ','
        << kind << ',' << nu << '\n';
}

inline void write_curve_csv(const std::filesystem::path& path, const RiskCurve& curve) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path.string() + "'");
  write_curve_csv(out, curve);
}

inline RiskCurve load_curve_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != "gamma,value,kind,nu")
    throw ParseError("'" + path.string() + "' is not a risk curve (expected header gamma,value,kind,nu)");
  RiskCurve curve;
  std::size_t row = 0;
  std::optional<std::string> kind;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    ++row;
    const auto f = detail::split_fields(line);
    const auto where = "'" + path.string() + "' row " + std::to_string(row);
    if (f.size() != 4) throw ParseError(where + ": expected 4 fields");
    const auto g = detail::parse_double(f[0]);
    const auto v = detail::parse_double(f[1]);
    const auto nu = detail::parse_double(f[3]);
    if (!g || !v || !nu) throw ParseError(where + ": non-numeric field");
    const std::string k(detail::trim(f[2]));
    if (kind && *kind != k) throw ParseError(where + ": mixed curve kinds");
    kind = k;
    curve.gammas.push_back(*g);
    curve.values.push_back(std::isfinite(*v) ? *v : kRiskSentinel);
    curve.nu = *nu;
  }
  if (row == 0) throw ParseError("'" + path.string() + "' has no curve points");
  if (*kind != "validation") {
    curve.kind = parse_risk_kind(*kind);
    if (!curve.kind) throw ParseError("'" + path.string() + "': unknown curve kind '" + *kind + "'");
  }
  (void)GammaGrid(curve.gammas);
  return curve;
}

}  // namespace svddsel
