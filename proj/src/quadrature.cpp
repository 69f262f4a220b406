#include "outail/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace outail {

namespace {

// Physicists' Gauss-Hermite nodes/weights for weight exp(-x^2) by Newton
// iteration on the orthonormal Hermite recurrence.
void physicists_rule(int n, std::vector<double>& x, std::vector<double>& w) {
  constexpr double kPiM4 = 0.7511255444649425;  // pi^(-1/4)
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  const int half = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < half; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * x[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * x[1];
    } else {
      z = 2.0 * z - x[i - 2];
    }
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = kPiM4;
      double p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = 2.0 / (pp * pp);
    w[n - 1 - i] = w[i];
  }
}

}  // namespace

QuadratureRule::QuadratureRule(Matrix nodes, std::vector<double> weights)
    : nodes_(std::move(nodes)), weights_(std::move(weights)) {
  if (static_cast<std::size_t>(nodes_.cols()) != weights_.size())
    throw std::invalid_argument("QuadratureRule: node/weight count mismatch");
  log_weights_.reserve(weights_.size());
  for (double w : weights_) {
    if (!(w > 0.0)) throw std::invalid_argument("QuadratureRule: weights must be positive");
    log_weights_.push_back(std::log(w));
  }
}

QuadratureRule QuadratureRule::gauss_hermite(int nodes_per_dim, int dim) {
  if (nodes_per_dim < 1) throw std::invalid_argument("gauss_hermite: need at least one node");
  if (dim < 1 || dim > kMaxQuadratureDim)
    throw std::invalid_argument("gauss_hermite: tensor rules are limited to dim 1..3");

  std::vector<double> x, w;
  physicists_rule(nodes_per_dim, x, w);
  // Rescale to the probabilists' convention and renormalize the mass.
  CompensatedSum mass;
  for (double wi : w) mass.add(wi);
  const double total = mass.value();
  std::vector<std::pair<double, double>> one_d(nodes_per_dim);
  for (int i = 0; i < nodes_per_dim; ++i) one_d[i] = {std::numbers::sqrt2 * x[i], w[i] / total};
  std::sort(one_d.begin(), one_d.end());

  std::size_t count = 1;
  for (int d = 0; d < dim; ++d) count *= static_cast<std::size_t>(nodes_per_dim);
  Matrix nodes(dim, static_cast<Eigen::Index>(count));
  std::vector<double> weights(count);
  for (std::size_t k = 0; k < count; ++k) {
    std::size_t rest = k;
    double weight = 1.0;
    for (int d = dim - 1; d >= 0; --d) {
      const auto& [xi, wi] = one_d[rest % nodes_per_dim];
      rest /= nodes_per_dim;
      nodes(d, static_cast<Eigen::Index>(k)) = xi;
      weight *= wi;
    }
    weights[k] = weight;
  }
  return QuadratureRule(std::move(nodes), std::move(weights));
}

const QuadratureRule& default_rule(int dim) {
  static const QuadratureRule r1 = QuadratureRule::gauss_hermite(kDefaultNodesPerDim, 1);
  static const QuadratureRule r2 = QuadratureRule::gauss_hermite(kDefaultNodesPerDim, 2);
  switch (dim) {
    case 1:
      return r1;
    case 2:
      return r2;
    case 3: {
      static const QuadratureRule r3 = QuadratureRule::gauss_hermite(kDefaultNodesPerDim, 3);
      return r3;
    }
    default:
      throw std::invalid_argument("default_rule: quadrature paths support dim 1..3");
  }
}

}  // namespace outail
