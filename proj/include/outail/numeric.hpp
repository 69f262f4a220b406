#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace outail {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when an intermediate quantity is NaN or infinite.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw NumericError(std::string("non-finite ") + what);
  return x;
}

// Neumaier variant of Kahan summation.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Streaming log(sum exp(a_i)). Empty accumulator yields -inf.
class LogSumExp {
 public:
  void add(double a) {
    if (a == -std::numeric_limits<double>::infinity()) return;
    if (a <= max_) {
      scaled_ += std::exp(a - max_);
    } else {
      scaled_ = scaled_ * std::exp(max_ - a) + 1.0;
      max_ = a;
    }
  }
  double value() const {
    if (scaled_ == 0.0) return -std::numeric_limits<double>::infinity();
    return max_ + std::log(scaled_);
  }

 private:
  double max_ = -std::numeric_limits<double>::infinity();
  double scaled_ = 0.0;
};

double log_sum_exp(std::span<const double> a);

// Standard Gaussian distribution helpers. The survival function is evaluated
// through erfc for moderate arguments and the Mills-ratio continued fraction
// beyond, so log_normal_sf stays finite far past the underflow of erfc.
double normal_pdf(double z);
double normal_cdf(double z);
double normal_sf(double z);
double log_normal_sf(double z);
double log_normal_cdf(double z);

/// Mean of a sample with a batch-means standard error.
struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;

  double half_width(double k = 3.0) const { return k * std_error; }
};

inline constexpr int kDefaultBatches = 32;

/// Contiguous batch means: batch b holds indices [b*n/B, (b+1)*n/B).
MeanEstimate batch_mean(std::span<const double> samples, int batches = kDefaultBatches);

/// Kolmogorov-Smirnov distance given sorted samples and the model CDF at each.
double ks_statistic(std::span<const double> sorted_samples, std::span<const double> cdf_at_samples);

/// Independent generator for stream `stream` of experiment `seed`.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream);

/// Runs body(i) for i in [0, count) on `workers` threads. Each index is
/// executed exactly once; the first exception is rethrown on the caller.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& body);

/// Symmetric part of `h` followed by its smallest eigenvalue.
double min_symmetric_eigenvalue(const Matrix& h);

}  // namespace outail
