#pragma once

#include <cmath>
#include <string>

#include "svddsel/dataset.hpp"
#include "svddsel/error.hpp"

namespace svddsel {

/// Gaussian kernel bandwidth: K(x, x') = exp(-|x - x'|^2 / gamma).
class Bandwidth {
 public:
  explicit Bandwidth(double gamma) : gamma_(gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("bandwidth must be positive and finite");
  }
  double value() const noexcept { return gamma_; }
  friend bool operator==(Bandwidth, Bandwidth) = default;
  friend auto operator<=>(Bandwidth, Bandwidth) = default;

 private:
  double gamma_;
};

template <typename A, typename B>
double squared_distance(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) {
  double s = 0.0;
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    const double diff = x[d] - y[d];
    s += diff * diff;
  }
  return s;
}

template <typename A, typename B>
double gauss_kernel(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& x_prime, Bandwidth gamma) {
  if (x.size() != x_prime.size())
    throw InvalidArgument("kernel dimension mismatch: " + std::to_string(x.size()) + " vs " +
                          std::to_string(x_prime.size()));
  return std::exp(-squared_distance(x, x_prime) / gamma.value());
}

/// Dense symmetric Gram matrix with exact unit diagonal.
class GramMatrix {
 public:
  GramMatrix(const Dataset& data, Bandwidth gamma) : values_(data.size(), data.size()), gamma_(gamma) {
    const Eigen::Index l = data.size();
    const auto& x = data.points();
    for (Eigen::Index i = 0; i < l; ++i) {
      values_(i, i) = 1.0;
      for (Eigen::Index j = i + 1; j < l; ++j) {
        const double k = std::exp(-squared_distance(x.row(i), x.row(j)) / gamma.value());
        values_(i, j) = k;
        values_(j, i) = k;
      }
    }
  }

  const Matrix& values() const noexcept { return values_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return values_(i, j); }
  Eigen::Index size() const noexcept { return values_.rows(); }
  Bandwidth gamma() const noexcept { return gamma_; }

 private:
  Matrix values_;
  Bandwidth gamma_;
};

inline GramMatrix gram_matrix(const Dataset& data, Bandwidth gamma) { return GramMatrix(data, gamma); }

}  // namespace svddsel
