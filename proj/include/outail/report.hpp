#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace outail {

/// Upper-bound rows claim estimate <= bound; lower-bound rows claim
/// estimate >= bound. margin() is the signed slack in either case.
enum class BoundKind { upper, lower };

/// One checked inequality: an estimate, its confidence half-width, and the
/// right-hand side it is compared against.
struct BoundReport {
  std::string name;
  std::string family;
  int dim = 0;
  std::optional<double> t;
  std::optional<double> r;
  std::optional<double> delta;
  double beta = 0.0;
  double estimate = 0.0;
  double ci_half_width = 0.0;  // 3 standard errors, or a deterministic tolerance
  double bound = 0.0;
  BoundKind kind = BoundKind::upper;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  // False for desk-scale conventions (sharpness floor, ceiling C = 20, ...).
  bool paper_anchored = true;
  std::string note;

  double margin() const { return kind == BoundKind::upper ? bound - estimate : estimate - bound; }
  // NaN estimates never pass.
  bool pass() const { return margin() + ci_half_width >= 0.0; }
};

/// Fixed column order: name,family,dim,t,r,delta,beta,estimate,ci,bound,margin,pass,n_samples,seed
std::string csv_header();
std::string csv_row(const BoundReport& report);
void write_csv(const std::filesystem::path& file, std::span<const BoundReport> reports);

/// Shortest decimal form that round-trips ("%.17g"); empty for nullopt.
std::string format_number(double x);

/// Counts, failures and worst margins; `extra` is merged at the top level.
nlohmann::json summary_json(std::span<const BoundReport> reports, const nlohmann::json& extra = {});

/// True iff every anchored row passes.
bool all_paper_checks_pass(std::span<const BoundReport> reports);

}  // namespace outail
