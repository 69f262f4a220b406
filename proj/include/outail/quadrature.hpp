#pragma once

#include <cstddef>
#include <vector>

#include "outail/numeric.hpp"

namespace outail {

inline constexpr int kDefaultNodesPerDim = 64;
inline constexpr int kMaxQuadratureDim = 3;

/// Probability rule against the standard Gaussian measure on R^dim.
/// Nodes are stored column-wise (dim x size).
class QuadratureRule {
 public:
  QuadratureRule() = default;
  QuadratureRule(Matrix nodes, std::vector<double> weights);

  /// Tensorized Gauss-Hermite rule with `nodes_per_dim` points per axis.
  /// Exact for polynomials of degree <= 2*nodes_per_dim - 1 in each coordinate.
  static QuadratureRule gauss_hermite(int nodes_per_dim, int dim = 1);

  int dim() const { return static_cast<int>(nodes_.rows()); }
  std::size_t size() const { return weights_.size(); }
  bool empty() const { return weights_.empty(); }

  auto node(std::size_t i) const { return nodes_.col(static_cast<Eigen::Index>(i)); }
  const Matrix& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& log_weights() const { return log_weights_; }

 private:
  Matrix nodes_;
  std::vector<double> weights_;
  std::vector<double> log_weights_;
};

/// Shared 64-node tensor rule for dim in [1, 3].
const QuadratureRule& default_rule(int dim);

}  // namespace outail
