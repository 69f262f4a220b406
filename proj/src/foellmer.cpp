#include "outail/foellmer.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>

#include "outail/semigroup.hpp"

namespace outail {

void PathConfig::validate() const {
  if (dim < 1) throw std::invalid_argument("PathConfig: dim must be positive");
  if (steps < 100) throw std::invalid_argument("PathConfig: steps must be at least 100");
  if (!(r > 1.0)) throw std::invalid_argument("PathConfig: r must exceed 1");
  if (!(delta >= 0.0)) throw std::invalid_argument("PathConfig: delta must be non-negative");
  if (!(beta >= 0.0)) throw std::invalid_argument("PathConfig: beta must be non-negative");
}

double Trajectory::exponential_residual() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < K.size(); ++i)
    worst = std::max(worst, std::abs(K[i] - K[0] - stoch_int[i] - 0.5 * energy[i]));
  return worst;
}

double PerturbationRecord::convexity_margin() const {
  return log_f_Xdelta - (log_f_X1 + delta * v1_dot_drift_T - 0.5 * beta * delta * delta * energy_T);
}

DriftField::DriftField(const DensityModel& d, DriftMethod method, const QuadratureRule* rule)
    : density_(d), method_(method), rule_(rule) {
  if (method_ == DriftMethod::closed_form && !d.closed_forms().heat)
    throw std::logic_error(d.family() + " density has no closed-form drift; use quadrature");
  if (method_ == DriftMethod::quadrature && rule_ == nullptr) rule_ = &default_rule(d.dim());
}

double DriftField::operator()(double s, const VecRef& x, VecOut v) const {
  if (s == 0.0 || (method_ == DriftMethod::quadrature && s < kMinHeatBandwidth)) {
    density_.grad_log_f(x, v);
    return density_.log_f(x);
  }
  if (method_ == DriftMethod::closed_form) return density_.log_heat_exact(s, x, v);
  return log_heat(density_, s, x, Method::quadrature, v, rule_);
}

namespace {

// Drives one Euler-Maruyama path, reporting node(i, X_i, v_i, K_i) for
// i = 0..m and step(v_i, dB_i) between nodes i and i+1.
template <class Visitor>
void drive(const DensityModel& d, const PathConfig& cfg, const DriftField& drift, std::uint64_t index,
           Visitor& vis) {
  const int m = cfg.steps;
  const int n = d.dim();
  const double dt = cfg.dt();
  const double sqrt_dt = std::sqrt(dt);
  auto gen = make_stream(cfg.seed, index);
  std::normal_distribution<double> normal;

  Vector X = Vector::Zero(n);
  Vector v(n);
  Vector dB(n);
  double K = drift(1.0, X, v);
  vis.node(0, X, v, K);
  for (int i = 0; i < m; ++i) {
    for (int k = 0; k < n; ++k) dB(k) = sqrt_dt * normal(gen);
    vis.step(v, dB, dt);
    X += dB + v * dt;
    K = drift(static_cast<double>(m - i - 1) / m, X, v);
    if (!std::isfinite(K) || !X.allFinite() || !v.allFinite()) throw NumericError("non-finite state in path simulation");
    vis.node(i + 1, X, v, K);
  }
}

struct StopState {
  double log_r;
  bool stopped = false;
  int T = 0;
  double overshoot = 0.0;
  double I = 0.0;
  double E = 0.0;
  Vector S;
};

class Summarizer {
 public:
  Summarizer(const DensityModel& d, const std::vector<StopSpec>& stops, const std::vector<int>& probes, int steps)
      : density_(d), specs_(stops), probes_(probes), steps_(steps) {
    states_.reserve(stops.size());
    for (const auto& s : stops) states_.push_back({std::log(s.r), false, 0, 0.0, 0.0, 0.0, Vector::Zero(d.dim())});
    out_.v_probe.resize(probes.size());
  }

  void node(int i, const Vector& X, const Vector& v, double K) {
    if (i == 0) out_.K0 = K;
    out_.exponential_residual =
        std::max(out_.exponential_residual, std::abs(K - out_.K0 - out_.stoch_int - 0.5 * out_.energy));
    for (std::size_t k = 0; k < probes_.size(); ++k)
      if (probes_[k] == i) out_.v_probe[k] = v;
    for (auto& st : states_) {
      if (!st.stopped && K > st.log_r) {
        st.stopped = true;
        st.T = i;
        st.overshoot = K - st.log_r;
      }
    }
    if (i == steps_) {
      out_.X1 = X;
      out_.v1 = v;
      out_.K1 = K;
    }
  }

  void step(const Vector& v, const Vector& dB, double dt) {
    const double vdb = v.dot(dB);
    const double vv = v.squaredNorm() * dt;
    out_.stoch_int += vdb;
    out_.energy += vv;
    for (auto& st : states_) {
      if (st.stopped) continue;
      st.I += vdb;
      st.E += vv;
      st.S += v * dt;
    }
  }

  PathSummary finish() {
    out_.stops.resize(states_.size());
    for (std::size_t k = 0; k < states_.size(); ++k) {
      const StopState& st = states_[k];
      StopStats& s = out_.stops[k];
      s.T_index = st.stopped ? st.T : steps_;
      s.overshoot = st.overshoot;
      s.stoch_T = st.I;
      s.energy_T = st.E;
      s.v1_dot_drift_T = out_.v1.dot(st.S);
      s.X_delta = out_.X1 + specs_[k].delta * st.S;
      s.log_f_Xdelta = density_.log_f(s.X_delta);
    }
    return std::move(out_);
  }

 private:
  const DensityModel& density_;
  const std::vector<StopSpec>& specs_;
  const std::vector<int>& probes_;
  int steps_;
  std::vector<StopState> states_;
  PathSummary out_;
};

class Recorder {
 public:
  explicit Recorder(int steps) {
    traj_.times.reserve(steps + 1);
    traj_.X.reserve(steps + 1);
    traj_.v.reserve(steps + 1);
    traj_.K.reserve(steps + 1);
    traj_.stoch_int.reserve(steps + 1);
    traj_.energy.reserve(steps + 1);
    traj_.dB.reserve(steps);
    steps_ = steps;
  }
  void node(int i, const Vector& X, const Vector& v, double K) {
    traj_.times.push_back(static_cast<double>(i) / steps_);
    traj_.X.push_back(X);
    traj_.v.push_back(v);
    traj_.K.push_back(K);
    traj_.stoch_int.push_back(stoch_);
    traj_.energy.push_back(energy_);
  }
  void step(const Vector& v, const Vector& dB, double dt) {
    traj_.dB.push_back(dB);
    stoch_ += v.dot(dB);
    energy_ += v.squaredNorm() * dt;
  }
  Trajectory take() { return std::move(traj_); }

 private:
  Trajectory traj_;
  int steps_;
  double stoch_ = 0.0;
  double energy_ = 0.0;
};

void check_density(const DensityModel& d, const PathConfig& cfg) {
  cfg.validate();
  if (cfg.dim != d.dim()) throw std::invalid_argument("PathConfig dim does not match density");
}

}  // namespace

Trajectory simulate_path(const DensityModel& d, const PathConfig& cfg, std::uint64_t path_index) {
  check_density(d, cfg);
  const DriftField drift(d, cfg.drift);
  Recorder rec(cfg.steps);
  drive(d, cfg, drift, path_index, rec);
  return rec.take();
}

int stopping_index(const Trajectory& traj, double r) {
  if (!(r > 1.0)) throw std::invalid_argument("stopping_index: r must exceed 1");
  const double level = std::log(r);
  for (std::size_t i = 0; i < traj.K.size(); ++i)
    if (traj.K[i] > level) return static_cast<int>(i);
  return traj.steps();
}

PathSummary summarize(const Trajectory& traj, const DensityModel& d, const std::vector<StopSpec>& stops,
                      const std::vector<int>& probe_nodes) {
  const int m = traj.steps();
  if (traj.X.size() != static_cast<std::size_t>(m) + 1) throw std::invalid_argument("summarize: malformed trajectory");
  Summarizer s(d, stops, probe_nodes, m);
  const double dt = 1.0 / m;
  s.node(0, traj.X[0], traj.v[0], traj.K[0]);
  for (int i = 0; i < m; ++i) {
    s.step(traj.v[i], traj.dB[i], dt);
    s.node(i + 1, traj.X[i + 1], traj.v[i + 1], traj.K[i + 1]);
  }
  return s.finish();
}

PerturbationRecord make_record(const PathSummary& s, std::size_t stop, double delta, double beta) {
  const StopStats& st = s.stops.at(stop);
  PerturbationRecord rec;
  rec.T_index = st.T_index;
  rec.overshoot = st.overshoot;
  rec.X_delta_1 = st.X_delta;
  rec.stoch_T = st.stoch_T;
  rec.energy_T = st.energy_T;
  rec.v1_dot_drift_T = st.v1_dot_drift_T;
  rec.delta = delta;
  rec.beta = beta;
  rec.log_f_X1 = s.K1;
  rec.log_f_Xdelta = st.log_f_Xdelta;
  rec.f_X1 = std::exp(rec.log_f_X1);
  rec.f_Xdelta = std::exp(rec.log_f_Xdelta);

  const double d2 = delta * delta;
  const double drift_term = delta * rec.martingale_term();
  rec.Y = -2.0 * delta * st.stoch_T + drift_term - 0.5 * beta * d2 * st.energy_T;
  rec.Z = -delta * st.stoch_T + drift_term - 0.5 * (beta + 1.0) * d2 * st.energy_T;
  // Drift (1 + delta 1{s <= T}) v: the stopped part enters with weights delta and 2 delta + delta^2.
  rec.log_D_delta_1 = -(s.stoch_int + delta * st.stoch_T) - 0.5 * (s.energy + (2.0 * delta + d2) * st.energy_T);
  rec.D_delta_1 = std::exp(rec.log_D_delta_1);
  return rec;
}

PerturbationRecord perturb(const Trajectory& traj, const PathConfig& cfg, const DensityModel& d) {
  cfg.validate();
  const PathSummary s = summarize(traj, d, {{cfg.r, cfg.delta}});
  return make_record(s, 0, cfg.delta, cfg.beta);
}

double pathwise_convexity_check(const PerturbationRecord& rec, const Trajectory& traj, const PathConfig& cfg) {
  const int m = traj.steps();
  if (rec.T_index < 0 || rec.T_index > m) throw std::invalid_argument("pathwise_convexity_check: bad stopping index");
  const double dt = 1.0 / m;
  const Vector& v1 = traj.v.back();
  CompensatedSum inner, energy;
  for (int i = 0; i < rec.T_index; ++i) {
    inner.add(v1.dot(traj.v[i]) * dt);
    energy.add(traj.v[i].squaredNorm() * dt);
  }
  const double d = cfg.delta;
  return rec.log_f_Xdelta - (traj.K.back() + d * inner.value() - 0.5 * cfg.beta * d * d * energy.value());
}

void write_trajectory_csv(const std::filesystem::path& file, const Trajectory& traj) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot open " + file.string());
  const int n = traj.X.empty() ? 0 : static_cast<int>(traj.X.front().size());
  out << "i,t";
  for (int k = 1; k <= n; ++k) out << ",X_" << k;
  for (int k = 1; k <= n; ++k) out << ",v_" << k;
  out << ",K\n";
  out.precision(17);
  for (std::size_t i = 0; i < traj.X.size(); ++i) {
    out << i << ',' << traj.times[i];
    for (int k = 0; k < n; ++k) out << ',' << traj.X[i](k);
    for (int k = 0; k < n; ++k) out << ',' << traj.v[i](k);
    out << ',' << traj.K[i] << '\n';
  }
}

// ----------------------------------------------------------------- batches

int BatchConfig::probe_index(std::size_t k) const {
  const double t = probe_times.at(k);
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("probe time outside [0,1]");
  return static_cast<int>(std::lround(t * path.steps));
}

std::size_t PathBatch::stop_index(double r, double delta) const {
  for (std::size_t k = 0; k < config.stops.size(); ++k)
    if (config.stops[k].r == r && config.stops[k].delta == delta) return k;
  throw std::out_of_range("batch was not simulated with the requested (r, delta)");
}

PerturbationRecord PathBatch::record(std::size_t path, std::size_t stop, double beta) const {
  return make_record(paths.at(path), stop, config.stops.at(stop).delta, beta);
}

PathBatch simulate_batch(const DensityModel& d, const BatchConfig& config) {
  check_density(d, config.path);
  if (config.paths == 0) throw std::invalid_argument("simulate_batch: need at least one path");
  for (const auto& s : config.stops)
    if (!(s.r > 1.0) || !(s.delta >= 0.0)) throw std::invalid_argument("simulate_batch: bad stop spec");

  PathBatch batch;
  batch.config = config;
  batch.paths.resize(config.paths);
  std::vector<int> probes;
  for (std::size_t k = 0; k < config.probe_times.size(); ++k) probes.push_back(config.probe_index(k));

  constexpr std::size_t kBlock = 256;
  const std::size_t blocks = (config.paths + kBlock - 1) / kBlock;
  parallel_for(blocks, config.workers, [&](std::size_t b) {
    const DriftField drift(d, config.path.drift);
    const std::size_t hi = std::min(config.paths, (b + 1) * kBlock);
    for (std::size_t i = b * kBlock; i < hi; ++i) {
      Summarizer s(d, config.stops, probes, config.path.steps);
      drive(d, config.path, drift, i, s);
      batch.paths[i] = s.finish();
    }
  });
  return batch;
}

}  // namespace outail
