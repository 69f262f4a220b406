#pragma once

#include <span>
#include <string>
#include <vector>

#include "outail/foellmer.hpp"
#include "outail/measures.hpp"
#include "outail/quadrature.hpp"
#include "outail/report.hpp"
#include "outail/semigroup.hpp"

namespace outail {

// ------------------------------------------------------------------- tails

enum class TailMethod { exact_tilt, quadrature_cdf, monte_carlo };

std::string to_string(TailMethod m);
TailMethod parse_tail_method(const std::string& name);

/// exact_tilt when the family has an exact tail, quadrature_cdf in 1-D,
/// monte_carlo otherwise.
TailMethod default_tail_method(const DensityModel& d);

struct TailEstimate {
  double estimate = 0.0;
  double ci = 0.0;  // 3 SE for Monte Carlo, deterministic tolerance otherwise
  std::size_t n_samples = 0;
  TailMethod method = TailMethod::exact_tilt;
  // False when Monte Carlo saw no exceedance: the tail is below resolution.
  bool resolved = true;
};

/// gamma_n({Q_t f > r}); t = 0 is the tail of f itself.
TailEstimate tail_probability(const DensityModel& d, double t, double r, TailMethod method,
                              const MonteCarloOptions& mc = {});

struct TailCurve {
  double t = 0.0;
  TailMethod method = TailMethod::exact_tilt;
  std::vector<double> r_grid;
  std::vector<TailEstimate> tail;
  // tail * r * sqrt(log r) * min(1, t)
  std::vector<double> normalized_ratio;
  double c_hat = 0.0;  // max of normalized_ratio
};

TailCurve tail_curve(const DensityModel& d, double t, const std::vector<double>& r_grid, TailMethod method,
                     const MonteCarloOptions& mc = {});

/// Markov rows (tail <= 1/r) and ratio rows (normalized ratio <= 20) for each
/// grid point; unresolved Monte Carlo points produce a failing
/// "method=exact required" row instead.
std::vector<BoundReport> tail_reports(const DensityModel& d, const TailCurve& curve, std::uint64_t seed);

/// Desk-scale ceiling for normalized tail ratios and shell ratios.
inline constexpr double kDeskCeiling = 20.0;
/// Desk-scale floor for the sharpness constant.
inline constexpr double kSharpnessFloor = 0.1;

/// delta = 5 / (2 log r).
double paper_delta(double r);

/// Phi_bar(sqrt(2 log r)) * r * sqrt(log r), evaluated in log space.
double sharpness_constant(double r);
std::vector<BoundReport> sharpness_report(const std::vector<double>& r_grid);

// ----------------------------------------------------------- deterministic

/// H(f gamma | gamma) = int f log f d(gamma) by quadrature.
double relative_entropy(const DensityModel& d, const QuadratureRule& rule);
/// Adaptive Gauss-Kronrod in 1-D, the default tensor rule otherwise.
double relative_entropy(const DensityModel& d);

/// min over points of lambda_min(Hess log Q_t f) + 1/(2t), lower bound 0, tolerance 1e-5.
BoundReport lemma2_check(const DensityModel& d, double t, const std::vector<Vector>& points);
/// 50 points: a uniform grid on [-3, 3] in 1-D, seeded uniform draws otherwise.
std::vector<Vector> lemma2_points(int dim, std::uint64_t seed);

BoundReport normalization_report(const DensityModel& d, const QuadratureRule& rule);
BoundReport beta_probe_report(const DensityModel& d);

// --------------------------------------------------------- path-based checks
//
// Each check reads the batch stop matching (r, delta) and uses d.beta(), so
// a DeclaredBeta wrapper turns any of them into a negative control.

BoundReport entropy_identity_check(const DensityModel& d, const PathBatch& batch);
BoundReport drift_energy_bound_check(const DensityModel& d, const PathBatch& batch, double r, double delta);
BoundReport exp_Z_check(const DensityModel& d, const PathBatch& batch, double r, double delta);
/// P(Z <= -2) <= -E[Z], as the paired mean of 1{Z <= -2} + Z against 0.
BoundReport bizarre_check(std::span<const double> z);
BoundReport lemma4_check(const DensityModel& d, const PathBatch& batch, double r, double delta);
BoundReport ineq_y_check(const DensityModel& d, const PathBatch& batch, double r, double delta);
/// TV lower bound from threshold events of f, plus the entropy-side proxy.
std::vector<BoundReport> prop1_tv_check(const DensityModel& d, const PathBatch& batch, double r, double delta);
BoundReport prop2_check(const DensityModel& d, const PathBatch& batch, double r, double delta);
/// Shell ratio (both exponent regimes) and the shell-sum reduction to the tail.
std::vector<BoundReport> thm2_composite_check(const DensityModel& d, const PathBatch& batch, double r, double delta);
BoundReport convexity_check(const DensityModel& d, const PathBatch& batch, double r, double delta);
/// Pathwise f(X^delta) D >= e^Z (1 - 1e-6): raw, and with the discrete Ito residual removed.
std::vector<BoundReport> pathwise_product_check(const DensityModel& d, const PathBatch& batch, double r,
                                                double delta);
std::vector<BoundReport> martingale_check(const DensityModel& d, const PathBatch& batch, double r, double delta);
/// E[D] = 1 and E[f(X^delta) D] = 1.
std::vector<BoundReport> girsanov_check(const DensityModel& d, const PathBatch& batch, double r, double delta);
/// KS distance of X_1 against the law CDF, 1-D only, bound 1.63 / sqrt(N).
BoundReport law_check(const DensityModel& d, const PathBatch& batch);

std::vector<double> z_samples(const PathBatch& batch, std::size_t stop, double beta);

/// CDF of f d(gamma_1) at sorted points by cumulative Gauss-Kronrod integration.
std::vector<double> numeric_cdf_1d(const DensityModel& d, std::span<const double> sorted_points);

}  // namespace outail
