#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "svddsel/dataset.hpp"
#include "svddsel/error.hpp"
#include "svddsel/kernel.hpp"
#include "svddsel/rng.hpp"
#include "svddsel/svdd.hpp"

namespace svddsel {

struct SmoteConfig {
  int k_neighbors = 5;
  /// Number of synthetic points is ceil(multiplier * l).
  double multiplier = 1.0;
  Seed seed = 0;
};

/// Where a synthetic point came from: source + u * (neighbor - source).
struct SmoteOrigin {
  Eigen::Index source;
  Eigen::Index neighbor;
  double u;
};

/// Indices of the k nearest neighbours of every point (Euclidean, self
/// excluded), nearest first; equal distances resolve to the lower index.
inline std::vector<std::vector<Eigen::Index>> nearest_neighbors(const Dataset& data, int k) {
  const Eigen::Index l = data.size();
  std::vector<std::vector<Eigen::Index>> out(static_cast<std::size_t>(l));
  std::vector<std::pair<double, Eigen::Index>> dist;
  for (Eigen::Index i = 0; i < l; ++i) {
    dist.clear();
    for (Eigen::Index j = 0; j < l; ++j)
      if (j != i) dist.emplace_back(squared_distance(data.row(i), data.row(j)), j);
    const auto kk = std::min<std::size_t>(static_cast<std::size_t>(k), dist.size());
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
    auto& nn = out[static_cast<std::size_t>(i)];
    for (std::size_t t = 0; t < kk; ++t) nn.push_back(dist[t].second);
  }
  return out;
}

/// SMOTE oversampling. Sources cycle through the training points in order;
/// each synthetic point interpolates towards a uniformly chosen one of the
/// source's k nearest neighbours (k clamped to l - 1).
inline Dataset smote_oversample(const Dataset& train, const SmoteConfig& config,
                                std::vector<SmoteOrigin>* origins = nullptr) {
  const Eigen::Index l = train.size();
  if (l < 2) throw InvalidArgument("SMOTE needs at least 2 training points");
  if (config.k_neighbors < 1) throw InvalidArgument("SMOTE k_neighbors must be >= 1");
  if (!(config.multiplier > 0.0) || !std::isfinite(config.multiplier))
    throw InvalidArgument("SMOTE multiplier must be positive");
  const int k = static_cast<int>(std::min<Eigen::Index>(config.k_neighbors, l - 1));
  const auto m = static_cast<Eigen::Index>(std::ceil(config.multiplier * static_cast<double>(l) - 1e-9));
  const auto neighbors = nearest_neighbors(train, k);

  auto engine = make_engine(config.seed);
  std::uniform_int_distribution<int> pick(0, k - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix out(m, train.dim());
  if (origins) origins->clear();
  for (Eigen::Index s = 0; s < m; ++s) {
    const Eigen::Index src = s % l;
    const Eigen::Index nb = neighbors[static_cast<std::size_t>(src)][static_cast<std::size_t>(pick(engine))];
    const double u = unit(engine);
    out.row(s) = train.row(src) + u * (train.row(nb) - train.row(src));
    if (origins) origins->push_back({src, nb, u});
  }
  return Dataset(std::move(out), train.name() + ":smote");
}

/// Uniform anomaly law mu on a box, with a fixed sample count and seed.
struct AnomalySampler {
  AnomalySampler(BoundingBox b, Eigen::Index n, Seed s) : box(std::move(b)), count(n), seed(s) {
    if (count < 1) throw InvalidArgument("anomaly sample count must be >= 1");
  }

  BoundingBox box;
  Eigen::Index count;
  Seed seed;

  Dataset draw() const { return gen_uniform(seed, count, box); }
};

/// Monte-Carlo sample size used when none is configured.
inline Eigen::Index default_mc_count(Eigen::Index l) { return std::max<Eigen::Index>(10000, 100 * l); }

/// Fraction of draws from mu that the model accepts as normal.
inline double mc_anomaly_acceptance(const SvddModel& model, const AnomalySampler& sampler) {
  if (sampler.box.dim() != model.dim())
    throw InvalidArgument("anomaly sampler has dimension " + std::to_string(sampler.box.dim()) + ", model expects " +
                          std::to_string(model.dim()));
  auto engine = make_engine(sampler.seed);
  Eigen::RowVectorXd x(model.dim());
  Eigen::Index accepted = 0;
  for (Eigen::Index i = 0; i < sampler.count; ++i) {
    draw_uniform(engine, sampler.box, x);
    if (model.predict(x) == +1) ++accepted;
  }
  return static_cast<double>(accepted) / static_cast<double>(sampler.count);
}

}  // namespace svddsel
