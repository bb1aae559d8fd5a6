#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "svddsel/dataset.hpp"
#include "svddsel/error.hpp"
#include "svddsel/kernel.hpp"
#include "svddsel/rng.hpp"

namespace svddsel {

struct SvddConfig {
  double nu = 0.1;
  /// Bound on the maximal KKT violation, in decision-value units.
  double solver_tolerance = 1e-6;
  /// Cap on sweeps of l pair updates each; defaults to 10 * l * l when unset.
  std::optional<std::int64_t> max_passes;
  /// alpha_i above this counts as a support vector.
  double sv_threshold = 1e-8;

  void validate() const {
    if (!(nu > 0.0 && nu <= 1.0)) throw InvalidArgument("nu must lie in (0, 1]");
    if (!(solver_tolerance > 0.0) || !std::isfinite(solver_tolerance))
      throw InvalidArgument("solver tolerance must be positive");
    if (max_passes && *max_passes < 1) throw InvalidArgument("max_passes must be >= 1");
    if (!(sv_threshold >= 0.0) || !std::isfinite(sv_threshold)) throw InvalidArgument("sv_threshold must be >= 0");
  }
};

/// Upper bound on a dual weight, 1 / (nu * l).
inline double alpha_cap(double nu, Eigen::Index l) { return 1.0 / (nu * static_cast<double>(l)); }

/// Number of times the dual solver has been entered in this process.
inline std::atomic<std::uint64_t>& solver_invocations() {
  static std::atomic<std::uint64_t> counter{0};
  return counter;
}

/// A fitted SVDD description: f(x) = sign(sum_i alpha_i K(x, X_i) - rho).
class SvddModel {
 public:
  SvddModel(Dataset train, Vector alphas, double rho, Bandwidth gamma, double nu, double sv_threshold = 1e-8)
      : train_(std::move(train)), alphas_(std::move(alphas)), rho_(rho), gamma_(gamma), nu_(nu),
        sv_threshold_(sv_threshold) {
    if (alphas_.size() != train_.size()) throw InvalidArgument("one dual weight per training point is required");
    if (!std::isfinite(rho_)) throw InvalidArgument("rho must be finite");
    for (Eigen::Index i = 0; i < alphas_.size(); ++i) {
      if (alphas_[i] < 0.0 || !std::isfinite(alphas_[i])) throw InvalidArgument("dual weights must be finite and >= 0");
      if (alphas_[i] > 0.0) active_.push_back(i);
      if (alphas_[i] > sv_threshold_) support_.push_back(i);
    }
    offset_const_ = 0.0;
    for (auto i : active_) {
      double row = 0.0;
      for (auto j : active_) row += alphas_[j] * kernel(i, j);
      offset_const_ += alphas_[i] * row;
    }
    radius_sq_ = std::max(0.0, 1.0 - 2.0 * rho_ + offset_const_);
  }

  const Dataset& train_points() const noexcept { return train_; }
  const Vector& alphas() const noexcept { return alphas_; }
  const std::vector<Eigen::Index>& support_indices() const noexcept { return support_; }
  double rho() const noexcept { return rho_; }
  double radius_sq() const noexcept { return radius_sq_; }
  double offset_const() const noexcept { return offset_const_; }
  Bandwidth gamma() const noexcept { return gamma_; }
  double nu() const noexcept { return nu_; }
  double sv_threshold() const noexcept { return sv_threshold_; }
  Eigen::Index dim() const noexcept { return train_.dim(); }

  /// sum_i alpha_i K(x, X_i) - rho; nonnegative inside or on the ball.
  template <typename Derived>
  double decision_value(const Eigen::MatrixBase<Derived>& x) const {
    if (x.size() != dim())
      throw InvalidArgument("query has dimension " + std::to_string(x.size()) + ", model expects " +
                            std::to_string(dim()));
    double s = 0.0;
    for (auto i : active_) s += alphas_[i] * std::exp(-squared_distance(x, train_.row(i)) / gamma_.value());
    return s - rho_;
  }

  /// +1 (normal) when decision_value >= 0, otherwise -1.
  template <typename Derived>
  int predict(const Eigen::MatrixBase<Derived>& x) const {
    return decision_value(x) >= 0.0 ? +1 : -1;
  }

  /// Dual objective sum_i alpha_i K_ii - sum_ij alpha_i alpha_j K_ij.
  double dual_objective() const { return alphas_.sum() - offset_const_; }

 private:
  double kernel(Eigen::Index i, Eigen::Index j) const {
    if (i == j) return 1.0;
    return std::exp(-squared_distance(train_.row(i), train_.row(j)) / gamma_.value());
  }

  Dataset train_;
  Vector alphas_;
  std::vector<Eigen::Index> active_;
  std::vector<Eigen::Index> support_;
  double rho_;
  double radius_sq_ = 0.0;
  double offset_const_ = 0.0;
  Bandwidth gamma_;
  double nu_;
  double sv_threshold_;
};

template <typename Derived>
double decision_value(const SvddModel& model, const Eigen::MatrixBase<Derived>& x) {
  return model.decision_value(x);
}

template <typename Derived>
int predict(const SvddModel& model, const Eigen::MatrixBase<Derived>& x) {
  return model.predict(x);
}

namespace detail {

// Threshold from the scores s_i = (K alpha)_i. With interior weights present
// the smallest score among uncapped points is used: interior scores agree to
// within the solver tolerance, and this keeps every uncapped point on the
// normal side so only capped points can be outliers.
inline double estimate_rho(const Vector& alphas, const Vector& scores, double cap, double threshold) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  bool any_free = false;
  double min_uncapped = inf, max_capped = -inf, min_zero = inf;
  for (Eigen::Index i = 0; i < alphas.size(); ++i) {
    const bool capped = alphas[i] >= cap - threshold;
    const bool zero = alphas[i] <= threshold;
    if (capped) {
      max_capped = std::max(max_capped, scores[i]);
    } else {
      min_uncapped = std::min(min_uncapped, scores[i]);
      if (zero) min_zero = std::min(min_zero, scores[i]);
      else any_free = true;
    }
  }
  if (any_free) return min_uncapped;
  if (max_capped > -inf && min_zero < inf) return 0.5 * (max_capped + min_zero);
  return max_capped > -inf ? max_capped : min_zero;
}

}  // namespace detail

struct FitReport {
  std::int64_t iterations = 0;
  double max_violation = 0.0;
};

/// Solves the SVDD dual
///   min_alpha  alpha' K alpha   s.t.  sum alpha = 1,  0 <= alpha_i <= 1/(nu l)
/// by pairwise working-set steps on the maximally violating pair. The seed
/// only fixes the scan order used to break ties between equal violations.
inline SvddModel fit(const Dataset& train, Bandwidth gamma, const SvddConfig& config, Seed seed,
                     FitReport* report = nullptr) {
  config.validate();
  ++solver_invocations();
  const Eigen::Index l = train.size();
  if (config.nu * static_cast<double>(l) < 1.0 - 1e-12)
    throw InvalidArgument("nu * l = " + std::to_string(config.nu * static_cast<double>(l)) +
                          " < 1: the dual feasible set is empty");
  const double cap = std::min(1.0, alpha_cap(config.nu, l));
  const GramMatrix gram(train, gamma);
  if (!gram.values().allFinite()) throw InvalidArgument("Gram matrix has non-finite entries");
  const Matrix& K = gram.values();

  Vector alphas = Vector::Constant(l, 1.0 / static_cast<double>(l));
  if (cap <= 1.0 / static_cast<double>(l)) alphas.setConstant(cap);
  Vector scores = K * alphas;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(l));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  auto engine = make_engine(derive_seed(seed, {kStreamFit}));
  std::shuffle(order.begin(), order.end(), engine);

  // up: alpha_i < cap (may grow); low: alpha_j > 0 (may shrink).
  const auto select_pair = [&](Eigen::Index& up, Eigen::Index& low) {
    up = low = -1;
    double best_up = std::numeric_limits<double>::infinity();
    double best_low = -std::numeric_limits<double>::infinity();
    for (auto i : order) {
      if (alphas[i] < cap && scores[i] < best_up) best_up = scores[i], up = i;
      if (alphas[i] > 0.0 && scores[i] > best_low) best_low = scores[i], low = i;
    }
    return (up < 0 || low < 0) ? 0.0 : best_low - best_up;
  };

  const std::int64_t max_passes = config.max_passes.value_or(10 * static_cast<std::int64_t>(l) * l);
  const std::int64_t max_updates = max_passes * l;
  std::int64_t iter = 0;
  Eigen::Index up = -1, low = -1;
  double violation = select_pair(up, low);
  double best_violation = violation;
  while (violation > config.solver_tolerance && iter < max_updates) {
    // Moving t from `low` to `up` changes the objective by
    // 2 t (s_up - s_low) + t^2 eta with eta = K_uu + K_ll - 2 K_ul.
    const double eta = K(up, up) + K(low, low) - 2.0 * K(up, low);
    const double limit = std::min(cap - alphas[up], alphas[low]);
    double step = eta > 1e-15 ? (scores[low] - scores[up]) / eta : limit;
    bool clipped = false;
    if (step >= limit) step = limit, clipped = true;
    if (clipped && limit == cap - alphas[up]) {
      alphas[up] = cap;
      alphas[low] -= step;
    } else if (clipped) {
      alphas[low] = 0.0;
      alphas[up] += step;
    } else {
      alphas[up] += step;
      alphas[low] -= step;
    }
    if (alphas[low] < 0.0) alphas[low] = 0.0;
    scores.noalias() += step * (K.col(up) - K.col(low));
    ++iter;
    violation = select_pair(up, low);
    best_violation = std::min(best_violation, violation);
  }
  scores.noalias() = K * alphas;
  violation = select_pair(up, low);
  if (report) *report = FitReport{iter, violation};
  if (violation > config.solver_tolerance)
    throw SolverError("SVDD solver stopped after " + std::to_string(iter) + " pair updates with KKT violation " +
                          std::to_string(std::min(best_violation, violation)),
                      std::min(best_violation, violation));

  const double rho = detail::estimate_rho(alphas, scores, cap, config.sv_threshold);
  return SvddModel(train, std::move(alphas), rho, gamma, config.nu, config.sv_threshold);
}

struct ModelStats {
  double sv_fraction = 0.0;
  double outlier_fraction = 0.0;
};

inline ModelStats model_stats(const SvddModel& model, const Dataset& train) {
  std::size_t outliers = 0;
  for (Eigen::Index i = 0; i < train.size(); ++i)
    if (model.decision_value(train.row(i)) < 0.0) ++outliers;
  const auto l = static_cast<double>(train.size());
  return {static_cast<double>(model.support_indices().size()) / l, static_cast<double>(outliers) / l};
}

// ---------------------------------------------------------------------------
// JSON. nlohmann/json prints doubles in shortest round-trip form, so a
// dump/parse cycle reproduces every value bit-for-bit.

inline nlohmann::json to_json(const SvddModel& model) {
  nlohmann::json points = nlohmann::json::array();
  for (Eigen::Index i = 0; i < model.train_points().size(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index d = 0; d < model.dim(); ++d) row.push_back(model.train_points().points()(i, d));
    points.push_back(std::move(row));
  }
  return nlohmann::json{
      {"gamma", model.gamma().value()},
      {"nu", model.nu()},
      {"rho", model.rho()},
      {"radius_sq", model.radius_sq()},
      {"offset_const", model.offset_const()},
      {"sv_threshold", model.sv_threshold()},
      {"alphas", std::vector<double>(model.alphas().begin(), model.alphas().end())},
      {"support_indices", model.support_indices()},
      {"train_points", std::move(points)},
  };
}

inline SvddModel model_from_json(const nlohmann::json& j) {
  try {
    const auto& rows = j.at("train_points");
    if (!rows.is_array() || rows.empty()) throw ParseError("train_points must be a non-empty array");
    const auto dim = static_cast<Eigen::Index>(rows.front().size());
    Matrix points(static_cast<Eigen::Index>(rows.size()), dim);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (static_cast<Eigen::Index>(rows[i].size()) != dim) throw ParseError("train_points rows differ in length");
      for (Eigen::Index d = 0; d < dim; ++d)
        points(static_cast<Eigen::Index>(i), d) = rows[i][static_cast<std::size_t>(d)].get<double>();
    }
    const auto alphas = j.at("alphas").get<std::vector<double>>();
    Vector a = Eigen::Map<const Vector>(alphas.data(), static_cast<Eigen::Index>(alphas.size()));
    return SvddModel(Dataset(std::move(points), "train_points"), std::move(a), j.at("rho").get<double>(),
                     Bandwidth(j.at("gamma").get<double>()), j.at("nu").get<double>(),
                     j.value("sv_threshold", 1e-8));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed model JSON: ") + e.what());
  }
}

}  // namespace svddsel
