#pragma once

#include <cstdint>
#include <filesystem>
#include <numbers>
#include <vector>

#include "outail/measures.hpp"
#include "outail/quadrature.hpp"

namespace outail {

enum class DriftMethod { closed_form, quadrature };

/// Parameters of one simulated path of dX = dB + grad log P_{1-t} f(X) dt on
/// the uniform grid t_i = i/steps.
struct PathConfig {
  int dim = 1;
  int steps = 2048;
  double r = std::numbers::e;  // threshold for the stopping time
  double delta = 0.0;
  double beta = 0.0;  // passed explicitly so negative controls can lie about it
  std::uint64_t seed = 42;
  DriftMethod drift = DriftMethod::closed_form;

  void validate() const;
  double dt() const { return 1.0 / steps; }
};

/// One Euler-Maruyama path. Arrays indexed by grid node have steps+1 entries,
/// increments have steps entries. stoch_int and energy are running left-point
/// sums of <v, dB> and |v|^2 dt ending at each node.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> X;
  std::vector<Vector> dB;
  std::vector<Vector> v;
  std::vector<double> K;
  std::vector<double> stoch_int;
  std::vector<double> energy;

  int steps() const { return static_cast<int>(dB.size()); }
  /// max_i |K_i - K_0 - stoch_int_i - energy_i / 2| (Ito-formula residual).
  double exponential_residual() const;
};

/// Derived quantities of one path for one (r, delta, beta).
struct PerturbationRecord {
  int T_index = 0;
  double overshoot = 0.0;  // K_T - log r when stopped, else 0
  Vector X_delta_1;
  double log_D_delta_1 = 0.0;
  double D_delta_1 = 0.0;
  double Y = 0.0;
  double Z = 0.0;
  double log_f_X1 = 0.0;
  double log_f_Xdelta = 0.0;
  double f_X1 = 0.0;
  double f_Xdelta = 0.0;
  // Stopped integrals over [0, T].
  double stoch_T = 0.0;        // sum <v_i, dB_i>
  double energy_T = 0.0;       // sum |v_i|^2 dt
  double v1_dot_drift_T = 0.0; // <v_1, sum v_i dt>
  double delta = 0.0;
  double beta = 0.0;

  /// sum_{i<T} <v_1 - v_i, v_i> dt.
  double martingale_term() const { return v1_dot_drift_T - energy_T; }
  /// log f(X_1^delta) - [log f(X_1) + delta <v_1, int_0^T v> - beta delta^2/2 int_0^T |v|^2].
  double convexity_margin() const;
  /// log(f(X_1^delta) D_1^delta) - Z.
  double product_log_margin() const { return log_f_Xdelta + log_D_delta_1 - Z; }
};

/// Evaluates (K, v) = (log P_s f(x), grad log P_s f(x)) for the drift. At
/// s = 0, and for quadrature below kMinHeatBandwidth, returns (log f, grad log f).
class DriftField {
 public:
  DriftField(const DensityModel& d, DriftMethod method, const QuadratureRule* rule = nullptr);
  double operator()(double s, const VecRef& x, VecOut v) const;

 private:
  const DensityModel& density_;
  DriftMethod method_;
  const QuadratureRule* rule_;
};

/// Path `path_index` of the experiment; the generator stream is derived from
/// (cfg.seed, path_index) so results do not depend on scheduling.
Trajectory simulate_path(const DensityModel& d, const PathConfig& cfg, std::uint64_t path_index = 0);

/// min{i : K_i > log r}, or steps if the level is never exceeded.
int stopping_index(const Trajectory& traj, double r);

/// X_1^delta, Girsanov density D_1^delta, Y and Z for cfg.r, cfg.delta, cfg.beta.
PerturbationRecord perturb(const Trajectory& traj, const PathConfig& cfg, const DensityModel& d);

/// Convexity margin recomputed from the trajectory itself (independent of the
/// sums cached in the record). Non-negative when beta certifies f.
double pathwise_convexity_check(const PerturbationRecord& rec, const Trajectory& traj, const PathConfig& cfg);

/// Writes columns i,t,X_1..X_n,v_1..v_n,K.
void write_trajectory_csv(const std::filesystem::path& file, const Trajectory& traj);

// ----------------------------------------------------------------- batches

struct StopSpec {
  double r;
  double delta;
};

struct StopStats {
  int T_index = 0;
  double overshoot = 0.0;
  double stoch_T = 0.0;
  double energy_T = 0.0;
  double v1_dot_drift_T = 0.0;
  Vector X_delta;
  double log_f_Xdelta = 0.0;
};

/// Everything the estimators need from one path; trajectories are not kept.
struct PathSummary {
  Vector X1;
  Vector v1;
  double K0 = 0.0;
  double K1 = 0.0;  // log f(X_1)
  double stoch_int = 0.0;
  double energy = 0.0;
  double exponential_residual = 0.0;  // max over nodes, as Trajectory::exponential_residual
  std::vector<Vector> v_probe;        // v at BatchConfig::probe_times
  std::vector<StopStats> stops;
};

struct BatchConfig {
  PathConfig path;
  std::vector<StopSpec> stops;
  std::size_t paths = 100'000;
  int workers = 1;
  std::vector<double> probe_times{0.25, 0.5, 0.75};

  int probe_index(std::size_t k) const;
};

struct PathBatch {
  BatchConfig config;
  std::vector<PathSummary> paths;

  std::size_t size() const { return paths.size(); }
  /// Index of the stop spec matching (r, delta) exactly; throws if absent.
  std::size_t stop_index(double r, double delta) const;
  PerturbationRecord record(std::size_t path, std::size_t stop, double beta) const;
};

/// Simulates config.paths paths. Summaries are stored by path index, so the
/// result is bit-identical for any worker count.
PathBatch simulate_batch(const DensityModel& d, const BatchConfig& config);

/// Summary of a stored trajectory; identical arithmetic to simulate_batch.
PathSummary summarize(const Trajectory& traj, const DensityModel& d, const std::vector<StopSpec>& stops,
                      const std::vector<int>& probe_nodes = {});

PerturbationRecord make_record(const PathSummary& s, std::size_t stop, double delta, double beta);

}  // namespace outail
