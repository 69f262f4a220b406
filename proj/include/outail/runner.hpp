#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "outail/config.hpp"
#include "outail/report.hpp"

namespace outail {

/// Rows of one experiment in fixed order: deterministic checks per t, then
/// path checks per r, then sharpness. No files are written.
std::vector<BoundReport> evaluate(const ExperimentConfig& cfg);

struct RunResult {
  std::vector<BoundReport> rows;
  nlohmann::json summary;
  std::filesystem::path csv;
  std::filesystem::path json;
  int exit_code = 0;  // 0 iff every anchored row passes
};

/// Writes <out>/report.csv and <out>/summary.json. Only the JSON carries a timestamp.
RunResult write_outputs(std::vector<BoundReport> rows, const std::filesystem::path& out, nlohmann::json extra);

RunResult run(const ExperimentConfig& cfg);

struct VerifyAllOptions {
  std::uint64_t seed = 42;
  std::size_t paths = 100'000;
  int steps = 2048;
  int workers = 1;
  std::filesystem::path out;
};

/// tilt (alpha = 1), mixture (weights .5/.5, means -1/+1, spread .5) and
/// sin (eps = .5, k = 1), each over t in {0.1, 0.5, 1} and r in {e, e^2, e^4}.
std::vector<ExperimentConfig> default_matrix(const VerifyAllOptions& opts);
std::vector<BoundReport> verify_all_rows(const VerifyAllOptions& opts);
RunResult verify_all(const VerifyAllOptions& opts);

}  // namespace outail
