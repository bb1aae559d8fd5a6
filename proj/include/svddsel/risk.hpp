#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "svddsel/dataset.hpp"
#include "svddsel/error.hpp"
#include "svddsel/kernel.hpp"
#include "svddsel/sampling.hpp"
#include "svddsel/svdd.hpp"

namespace svddsel {

enum class RiskKind { kSv, kEmpirical, kSmote, kKernel, kPolarization };

inline constexpr RiskKind kAllRiskKinds[] = {RiskKind::kSv, RiskKind::kEmpirical, RiskKind::kSmote, RiskKind::kKernel,
                                             RiskKind::kPolarization};

inline std::string_view to_string(RiskKind kind) {
  switch (kind) {
    case RiskKind::kSv: return "sv";
    case RiskKind::kEmpirical: return "empirical";
    case RiskKind::kSmote: return "smote";
    case RiskKind::kKernel: return "kernel";
    case RiskKind::kPolarization: return "polarization";
  }
  return "?";
}

inline std::optional<RiskKind> parse_risk_kind(std::string_view name) {
  for (auto kind : kAllRiskKinds)
    if (to_string(kind) == name) return kind;
  return std::nullopt;
}

/// Kernel and polarization risks are computed from the Gram matrix alone.
inline bool needs_model(RiskKind kind) { return kind != RiskKind::kKernel && kind != RiskKind::kPolarization; }

/// Returned where a risk is undefined (degenerate kernel statistics, failed fits).
inline constexpr double kRiskSentinel = std::numeric_limits<double>::infinity();

inline double risk_sv(double sv_fraction, double nu) {
  const double d = nu - sv_fraction;
  return d * d;
}

namespace detail {

inline void require_open_nu(double nu) {
  if (!(nu > 0.0 && nu < 1.0)) throw InvalidArgument("risk requires 0 < nu < 1");
}

inline double rejection_term(const SvddModel& model, const Dataset& points, double nu) {
  Eigen::Index rejected = 0;
  for (Eigen::Index i = 0; i < points.size(); ++i)
    if (model.predict(points.row(i)) == -1) ++rejected;
  // Rate first, so an all-rejecting model gives exactly 1 / (1 - nu).
  return static_cast<double>(rejected) / static_cast<double>(points.size()) / (1.0 - nu);
}

}  // namespace detail

/// Training rejections scaled by 1/((1 - nu) l) plus the Monte-Carlo
/// anomaly acceptance scaled by 1/nu.
inline double risk_empirical(const SvddModel& model, const Dataset& train, double nu, const AnomalySampler& sampler) {
  detail::require_open_nu(nu);
  return detail::rejection_term(model, train, nu) + mc_anomaly_acceptance(model, sampler) / nu;
}

/// Same as risk_empirical with the first term taken over SMOTE points.
inline double risk_smote(const SvddModel& model, const Dataset& synthetic, double nu, const AnomalySampler& sampler) {
  detail::require_open_nu(nu);
  return detail::rejection_term(model, synthetic, nu) + mc_anomaly_acceptance(model, sampler) / nu;
}

/// Mean over variance of the strictly upper-triangular Gram entries.
inline double risk_kernel(const GramMatrix& gram) {
  const Eigen::Index l = gram.size();
  if (l < 3) throw InvalidArgument("kernel risk needs at least 3 points");
  const double pairs = 0.5 * static_cast<double>(l) * static_cast<double>(l - 1);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < l; ++i)
    for (Eigen::Index j = i + 1; j < l; ++j) sum += gram(i, j);
  const double mean = sum / pairs;
  double ss = 0.0;
  for (Eigen::Index i = 0; i < l; ++i)
    for (Eigen::Index j = i + 1; j < l; ++j) {
      const double d = gram(i, j) - mean;
      ss += d * d;
    }
  const double variance = ss / pairs;
  if (variance < 1e-300) return kRiskSentinel;
  return mean / variance;
}

/// -sum_ij y_i K(X_i, X_j) y_j over the training points (y = +1) and
/// sampler.count == l uniform anomalies (y = -1).
inline double risk_polarization(const Dataset& train, const AnomalySampler& sampler, Bandwidth gamma) {
  if (sampler.box.dim() != train.dim()) throw InvalidArgument("anomaly sampler dimension does not match the data");
  if (sampler.count != train.size()) throw InvalidArgument("polarization needs exactly l artificial anomalies");
  const Dataset anomalies = sampler.draw();
  const Dataset all = concatenate({&train, &anomalies}, train.name() + "+anomalies");
  const Eigen::Index l = train.size();
  const auto& x = all.points();
  double off = 0.0;
  for (Eigen::Index i = 0; i < all.size(); ++i) {
    const double yi = i < l ? 1.0 : -1.0;
    for (Eigen::Index j = i + 1; j < all.size(); ++j) {
      const double yj = j < l ? 1.0 : -1.0;
      off += yi * yj * std::exp(-squared_distance(x.row(i), x.row(j)) / gamma.value());
    }
  }
  return -(static_cast<double>(all.size()) + 2.0 * off);
}

/// Normal rejection rate plus anomaly acceptance rate on labelled data.
inline double validation_error(const SvddModel& model, const LabeledDataset& validation) {
  Eigen::Index s = 0, m = 0, rejected = 0, accepted = 0;
  for (Eigen::Index i = 0; i < validation.data.size(); ++i) {
    const int y = validation.labels[static_cast<std::size_t>(i)];
    if (y != 1 && y != -1) throw InvalidArgument("validation labels must be +1 or -1");
    const int f = model.predict(validation.data.row(i));
    if (y == 1) {
      ++s;
      if (f == -1) ++rejected;
    } else {
      ++m;
      if (f == 1) ++accepted;
    }
  }
  if (s == 0 || m == 0) throw InvalidArgument("validation set needs both normal and anomaly rows");
  return static_cast<double>(rejected) / static_cast<double>(s) + static_cast<double>(accepted) / static_cast<double>(m);
}

}  // namespace svddsel
