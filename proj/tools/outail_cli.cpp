#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "outail/config.hpp"
#include "outail/report.hpp"
#include "outail/runner.hpp"

namespace {

void print_summary(const outail::RunResult& res) {
  std::size_t failed = 0;
  for (const auto& row : res.rows) {
    if (row.pass()) continue;
    ++failed;
    std::printf("FAIL %-22s %-8s r=%-10s t=%-6s margin=%s%s\n", row.name.c_str(), row.family.c_str(),
                row.r ? outail::format_number(*row.r).substr(0, 10).c_str() : "-",
                row.t ? outail::format_number(*row.t).c_str() : "-", outail::format_number(row.margin()).c_str(),
                row.paper_anchored ? "" : " (not paper-anchored)");
  }
  std::printf("%zu rows, %zu passed, %zu failed\n", res.rows.size(), res.rows.size() - failed, failed);
  std::printf("report:  %s\nsummary: %s\n", res.csv.c_str(), res.json.c_str());
  std::printf("%s\n", res.exit_code == 0 ? "all anchored checks pass" : "anchored checks FAILED");
}

int run_config_text(const std::string& text, const std::string& name) {
  std::istringstream in(text);
  const auto cfg = outail::parse_config(in, name);
  const auto res = outail::run(cfg);
  print_summary(res);
  return res.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical checks of Ornstein-Uhlenbeck tail bounds"};
  app.require_subcommand(1);

  std::string config_path, out;
  auto* run_cmd = app.add_subcommand("run", "Run the checks listed in a config file");
  run_cmd->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", out, "Output directory (overrides the config)");

  outail::VerifyAllOptions va;
  auto* all_cmd = app.add_subcommand("verify-all", "Run the default experiment matrix");
  all_cmd->add_option("--seed", va.seed, "Seed");
  all_cmd->add_option("--out", va.out, "Output directory");
  all_cmd->add_option("--workers", va.workers, "Worker threads")->check(CLI::Range(1, 256));
  all_cmd->add_option("--paths", va.paths, "Paths per family")->check(CLI::PositiveNumber);
  all_cmd->add_option("--steps", va.steps, "Time steps per path")->check(CLI::Range(100, 1 << 20));

  std::string family = "tilt", alpha = "1", weights, means, spread, epsilon, k, t = "1", r, method;
  std::string paths = "100000", seed = "42";
  auto* tail_cmd = app.add_subcommand("tail", "Tail probabilities of Q_t f for one family");
  tail_cmd->add_option("--family", family, "tilt, constant, mixture or sin");
  tail_cmd->add_option("--alpha", alpha, "Tilt size");
  tail_cmd->add_option("--weights", weights, "Mixture weights, comma separated");
  tail_cmd->add_option("--means", means, "Mixture means, ';' between components");
  tail_cmd->add_option("--spread", spread, "Mixture component variance");
  tail_cmd->add_option("--epsilon", epsilon, "Sin amplitude");
  tail_cmd->add_option("--k", k, "Sin frequency");
  tail_cmd->add_option("--t", t, "OU times, comma separated");
  tail_cmd->add_option("--r", r, "Thresholds, comma separated (e^k accepted)");
  tail_cmd->add_option("--method", method, "exact_tilt, quadrature_cdf or monte_carlo");
  tail_cmd->add_option("--paths", paths, "Monte Carlo samples");
  tail_cmd->add_option("--seed", seed, "Seed");
  tail_cmd->add_option("--out", out, "Output directory");

  std::string sharp_r;
  auto* sharp_cmd = app.add_subcommand("sharpness", "Sharpness constants of the matched tilt");
  sharp_cmd->add_option("--r", sharp_r, "Thresholds, comma separated (default e^2,e^4,e^8,e^16)");
  sharp_cmd->add_option("--out", out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      auto cfg = outail::load_config(config_path);
      if (!out.empty()) cfg.out = out;
      const auto res = outail::run(cfg);
      print_summary(res);
      return res.exit_code;
    }
    if (*all_cmd) {
      const auto res = outail::verify_all(va);
      print_summary(res);
      return res.exit_code;
    }
    if (*tail_cmd) {
      std::ostringstream text;
      text << "family = " << family << "\nchecks = tail\nt = " << t << "\npaths = " << paths << "\nseed = " << seed
           << '\n';
      auto opt = [&](const char* key, const std::string& v) {
        if (!v.empty()) text << key << " = " << v << '\n';
      };
      if (family == "tilt") opt("alpha", alpha);
      opt("weights", weights);
      opt("means", means);
      opt("spread", spread);
      opt("epsilon", epsilon);
      opt("k", k);
      opt("r", r);
      opt("method", method);
      opt("out", out);
      return run_config_text(text.str(), "tail");
    }
    if (*sharp_cmd) {
      std::ostringstream text;
      text << "family = constant\nchecks = sharpness\n";
      if (!out.empty()) text << "out = " << out << '\n';
      if (!sharp_r.empty()) text << "[sharpness]\nr = " << sharp_r << '\n';
      const std::string s = text.str();
      return run_config_text(s, "sharpness");
    }
  } catch (const outail::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
