#include "outail/runner.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <numbers>

#include "outail/foellmer.hpp"
#include "outail/semigroup.hpp"
#include "outail/verify.hpp"

namespace outail {

namespace {

BatchConfig batch_config(const ExperimentConfig& cfg, const DensityModel& d) {
  BatchConfig bc;
  bc.path.dim = d.dim();
  bc.path.steps = cfg.steps;
  bc.path.seed = cfg.seed;
  bc.path.drift = cfg.drift;
  bc.path.beta = d.beta();
  bc.paths = cfg.paths;
  bc.workers = cfg.workers;
  for (Check c : cfg.checks) {
    if (!needs_paths(c)) continue;
    const DeltaRule rule = cfg.delta_for(c);
    for (double r : cfg.r_for(c)) {
      const StopSpec s{r, rule.at(r)};
      const bool seen = std::any_of(bc.stops.begin(), bc.stops.end(),
                                    [&](const StopSpec& o) { return o.r == s.r && o.delta == s.delta; });
      if (!seen) bc.stops.push_back(s);
    }
  }
  return bc;
}

template <class Rows>
void append(std::vector<BoundReport>& out, Rows&& rows) {
  for (auto& row : rows) out.push_back(std::move(row));
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::vector<BoundReport> evaluate(const ExperimentConfig& cfg) {
  const DensityPtr density = make_density(cfg.family);
  const DensityModel& d = *density;
  std::vector<BoundReport> rows;

  if (cfg.has(Check::normalization)) {
    if (d.dim() > kMaxQuadratureDim) throw std::invalid_argument("normalization check requires dim <= 3");
    rows.push_back(normalization_report(d, default_rule(d.dim())));
  }
  if (cfg.has(Check::hessian)) {
    rows.push_back(beta_probe_report(d));
    const auto points = lemma2_points(d.dim(), cfg.seed);
    for (double t : cfg.t_for(Check::hessian)) rows.push_back(lemma2_check(d, t, points));
  }
  if (cfg.has(Check::tail)) {
    MonteCarloOptions mc;
    mc.samples = std::max<std::size_t>(cfg.paths, 1000);
    mc.seed = cfg.seed;
    mc.workers = cfg.workers;
    const TailMethod method = cfg.method_for(Check::tail, d);
    for (double t : cfg.t_for(Check::tail))
      append(rows, tail_reports(d, tail_curve(d, t, cfg.r_for(Check::tail), method, mc), cfg.seed));
  }
  if (cfg.has(Check::hyper)) {
    const double p = cfg.p_for(Check::hyper);
    for (double t : cfg.t_for(Check::hyper)) rows.push_back(hypercontractivity_check(d, p, t, default_rule(d.dim())));
  }

  if (std::any_of(cfg.checks.begin(), cfg.checks.end(), needs_paths)) {
    const PathBatch batch = simulate_batch(d, batch_config(cfg, d));
    if (cfg.has(Check::law)) rows.push_back(law_check(d, batch));
    if (cfg.has(Check::entropy)) {
      if (d.dim() > kMaxQuadratureDim) throw std::invalid_argument("entropy check requires dim <= 3");
      rows.push_back(entropy_identity_check(d, batch));
    }
    for (Check c : {Check::energy, Check::z, Check::tv, Check::prop2, Check::composite, Check::convexity,
                    Check::martingale, Check::girsanov}) {
      if (!cfg.has(c)) continue;
      const DeltaRule rule = cfg.delta_for(c);
      for (double r : cfg.r_for(c)) {
        const double delta = rule.at(r);
        switch (c) {
          case Check::energy:
            rows.push_back(drift_energy_bound_check(d, batch, r, delta));
            break;
          case Check::z: {
            rows.push_back(exp_Z_check(d, batch, r, delta));
            BoundReport biz = bizarre_check(z_samples(batch, batch.stop_index(r, delta), d.beta()));
            biz.family = d.family();
            biz.dim = d.dim();
            biz.r = r;
            biz.delta = delta;
            biz.beta = d.beta();
            biz.seed = cfg.seed;
            rows.push_back(biz);
            rows.push_back(lemma4_check(d, batch, r, delta));
            rows.push_back(ineq_y_check(d, batch, r, delta));
            break;
          }
          case Check::tv:
            append(rows, prop1_tv_check(d, batch, r, delta));
            break;
          case Check::prop2:
            rows.push_back(prop2_check(d, batch, r, delta));
            break;
          case Check::composite:
            append(rows, thm2_composite_check(d, batch, r, delta));
            break;
          case Check::convexity:
            rows.push_back(convexity_check(d, batch, r, delta));
            append(rows, pathwise_product_check(d, batch, r, delta));
            break;
          case Check::martingale:
            append(rows, martingale_check(d, batch, r, delta));
            break;
          case Check::girsanov:
            append(rows, girsanov_check(d, batch, r, delta));
            break;
          default:
            break;
        }
      }
    }
  }

  if (cfg.has(Check::sharpness)) append(rows, sharpness_report(cfg.r_for(Check::sharpness)));
  return rows;
}

RunResult write_outputs(std::vector<BoundReport> rows, const std::filesystem::path& out, nlohmann::json extra) {
  std::filesystem::create_directories(out);
  RunResult res;
  res.rows = std::move(rows);
  res.csv = out / "report.csv";
  res.json = out / "summary.json";
  res.exit_code = all_paper_checks_pass(res.rows) ? 0 : 1;
  write_csv(res.csv, res.rows);
  extra["timestamp"] = utc_timestamp();
  extra["exit_code"] = res.exit_code;
  res.summary = summary_json(res.rows, extra);
  std::ofstream js(res.json);
  if (!js) throw std::runtime_error("cannot open " + res.json.string() + " for writing");
  js << res.summary.dump(2) << '\n';
  return res;
}

RunResult run(const ExperimentConfig& cfg) {
  auto rows = evaluate(cfg);
  if (cfg.dump_paths > 0) {
    const DensityPtr d = make_density(cfg.family);
    PathConfig pc;
    pc.dim = d->dim();
    pc.steps = cfg.steps;
    pc.seed = cfg.seed;
    pc.drift = cfg.drift;
    const auto dir = cfg.out / "paths";
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < cfg.dump_paths; ++i)
      write_trajectory_csv(dir / ("path_" + std::to_string(i) + ".csv"), simulate_path(*d, pc, i));
  }
  nlohmann::json extra{{"config", cfg.name},
                       {"family", cfg.family.name},
                       {"seed", cfg.seed},
                       {"paths", cfg.paths},
                       {"steps", cfg.steps}};
  return write_outputs(std::move(rows), cfg.out, std::move(extra));
}

std::vector<ExperimentConfig> default_matrix(const VerifyAllOptions& opts) {
  std::vector<ExperimentConfig> out;
  auto common = [&](ExperimentConfig c) {
    c.t = {0.1, 0.5, 1.0};
    c.r = default_r_grid();
    c.delta = {true, 0.0};
    c.paths = opts.paths;
    c.steps = opts.steps;
    c.seed = opts.seed;
    c.workers = opts.workers;
    c.out = opts.out;
    for (Check ch : all_checks())
      if (ch != Check::sharpness) c.checks.push_back(ch);
    return c;
  };
  ExperimentConfig tilt;
  tilt.name = "tilt";
  tilt.family.name = "tilt";
  tilt.family.u = Vector::Constant(1, 1.0);
  out.push_back(common(tilt));

  ExperimentConfig mix;
  mix.name = "mixture";
  mix.family.name = "mixture";
  mix.family.weights = {0.5, 0.5};
  mix.family.means = {Vector::Constant(1, -1.0), Vector::Constant(1, 1.0)};
  mix.family.spread = 0.5;
  out.push_back(common(mix));

  ExperimentConfig sin;
  sin.name = "sin";
  sin.family.name = "sin";
  sin.family.epsilon = 0.5;
  sin.family.k = Vector::Constant(1, 1.0);
  out.push_back(common(sin));
  return out;
}

std::vector<BoundReport> verify_all_rows(const VerifyAllOptions& opts) {
  std::vector<BoundReport> rows;
  for (const auto& cfg : default_matrix(opts)) append(rows, evaluate(cfg));
  append(rows, sharpness_report(default_sharpness_grid()));
  return rows;
}

RunResult verify_all(const VerifyAllOptions& opts) {
  nlohmann::json extra{{"config", "verify-all"}, {"seed", opts.seed}, {"paths", opts.paths}, {"steps", opts.steps}};
  const auto out = opts.out.empty() ? default_output_dir() : opts.out;
  return write_outputs(verify_all_rows(opts), out, std::move(extra));
}

}  // namespace outail
