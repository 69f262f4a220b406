#include "outail/numeric.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>
#include <vector>

#include <Eigen/Eigenvalues>

namespace outail {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kMillsSwitch = 30.0;

// Mills ratio Phi_bar(z)/phi(z) by backward evaluation of
// 1/(z + 1/(z + 2/(z + 3/(z + ...)))). Accurate to rounding for z >= 10.
double mills_ratio(double z) {
  double tail = z;
  for (int k = 120; k >= 1; --k) tail = z + k / tail;
  return 1.0 / tail;
}

}  // namespace

double log_sum_exp(std::span<const double> a) {
  LogSumExp acc;
  for (double x : a) acc.add(x);
  return acc.value();
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

double normal_sf(double z) { return 0.5 * std::erfc(z / kSqrt2); }

double log_normal_sf(double z) {
  if (std::isnan(z)) return z;
  if (z < -kMillsSwitch) return -std::exp(log_normal_sf(-z));  // log1p(-tiny)
  if (z < 0.0) return std::log1p(-normal_sf(-z));
  if (z < kMillsSwitch) return std::log(normal_sf(z));
  if (std::isinf(z)) return -std::numeric_limits<double>::infinity();
  return -0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(mills_ratio(z));
}

double log_normal_cdf(double z) { return log_normal_sf(-z); }

MeanEstimate batch_mean(std::span<const double> samples, int batches) {
  MeanEstimate out;
  out.n = samples.size();
  if (out.n == 0) throw std::invalid_argument("batch_mean: empty sample");
  CompensatedSum total;
  for (double x : samples) total.add(x);
  out.mean = total.value() / static_cast<double>(out.n);

  const std::size_t b = std::min<std::size_t>(static_cast<std::size_t>(std::max(batches, 1)), out.n);
  if (b < 2) return out;
  std::vector<double> means(b);
  for (std::size_t k = 0; k < b; ++k) {
    const std::size_t lo = k * out.n / b;
    const std::size_t hi = (k + 1) * out.n / b;
    CompensatedSum s;
    for (std::size_t i = lo; i < hi; ++i) s.add(samples[i]);
    means[k] = s.value() / static_cast<double>(hi - lo);
  }
  CompensatedSum mm;
  for (double m : means) mm.add(m);
  const double centre = mm.value() / static_cast<double>(b);
  CompensatedSum ss;
  for (double m : means) ss.add((m - centre) * (m - centre));
  const double var_of_batch_mean = ss.value() / static_cast<double>(b - 1);
  out.std_error = std::sqrt(var_of_batch_mean / static_cast<double>(b));
  return out;
}

double ks_statistic(std::span<const double> sorted_samples, std::span<const double> cdf_at_samples) {
  if (sorted_samples.size() != cdf_at_samples.size() || sorted_samples.empty())
    throw std::invalid_argument("ks_statistic: size mismatch or empty sample");
  const double n = static_cast<double>(sorted_samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted_samples.size(); ++i) {
    const double f = cdf_at_samples[i];
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x6f75u};
  return std::mt19937_64(seq);
}

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& body) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  const auto n = static_cast<std::size_t>(workers) < count ? static_cast<std::size_t>(workers) : count;
  std::vector<std::thread> pool;
  pool.reserve(n);
  for (std::size_t k = 0; k < n; ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

double min_symmetric_eigenvalue(const Matrix& h) {
  if (!h.allFinite()) throw NumericError("non-finite Hessian entry");
  const Matrix sym = 0.5 * (h + h.transpose());
  if (sym.rows() == 1) return sym(0, 0);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

}  // namespace outail
