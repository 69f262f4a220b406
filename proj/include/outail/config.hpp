#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "outail/foellmer.hpp"
#include "outail/measures.hpp"
#include "outail/verify.hpp"

namespace outail {

/// Parse or validation failure; names the offending key and source line
/// (line 0 when the key is missing altogether).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, int line, const std::string& message);

  const std::string& field() const { return field_; }
  int line() const { return line_; }

 private:
  std::string field_;
  int line_;
};

struct FamilySpec {
  std::string name = "tilt";  // tilt | constant | mixture | sin
  int dim = 1;
  Vector u;                   // tilt direction (alpha in 1-D)
  std::vector<double> weights;
  std::vector<Vector> means;
  double spread = 0.5;
  double epsilon = 0.5;
  Vector k;                   // sin frequency
  std::optional<double> beta;  // declared beta override
  double beta_scale = 1.0;     // declared beta multiplier (negative controls)
};

DensityPtr make_density(const FamilySpec& spec);

enum class Check {
  normalization,
  hessian,
  tail,
  hyper,
  law,
  entropy,
  energy,
  z,
  tv,
  prop2,
  composite,
  convexity,
  martingale,
  girsanov,
  sharpness,
};

std::string to_string(Check c);
std::optional<Check> parse_check(const std::string& name);
const std::vector<Check>& all_checks();
/// True for checks evaluated on simulated paths.
bool needs_paths(Check c);

struct DeltaRule {
  bool paper = true;  // delta = 5 / (2 log r)
  double value = 0.0;

  double at(double r) const { return paper ? paper_delta(r) : value; }
};

/// Per-check overrides from a [check] section.
struct CheckSettings {
  std::optional<std::vector<double>> t;
  std::optional<std::vector<double>> r;
  std::optional<DeltaRule> delta;
  std::optional<double> p;
  std::optional<TailMethod> method;
};

struct ExperimentConfig {
  std::string name = "experiment";
  FamilySpec family;
  std::vector<double> t{0.1, 0.5, 1.0};
  std::vector<double> r;  // defaults to {e, e^2, e^4}
  DeltaRule delta;
  std::size_t paths = 100'000;
  int steps = 2048;
  std::uint64_t seed = 42;
  std::vector<Check> checks;
  std::filesystem::path out;
  int workers = 1;
  DriftMethod drift = DriftMethod::closed_form;
  std::optional<TailMethod> method;
  double p = 2.0;
  std::size_t dump_paths = 0;
  std::map<Check, CheckSettings> sections;

  bool has(Check c) const;
  std::vector<double> t_for(Check c) const;
  std::vector<double> r_for(Check c) const;
  DeltaRule delta_for(Check c) const;
  double p_for(Check c) const;
  TailMethod method_for(Check c, const DensityModel& d) const;
};

/// Default r grid {e, e^2, e^4} and sharpness grid {e^2, e^4, e^8, e^16}.
std::vector<double> default_r_grid();
std::vector<double> default_sharpness_grid();

/// Output directory when the config does not name one: $OUTAIL_OUT_DIR, else ./outail_out.
std::filesystem::path default_output_dir();

/// Flat "key = value" text; '#' starts a comment; "[check]" opens a section
/// whose t, r, delta, p and method override the top-level values for that
/// check. Lists are comma separated, vectors in a list separated by ';'.
/// Reals accept "e^k" for exp(k).
ExperimentConfig parse_config(std::istream& in, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& file);

/// Parses a real, accepting "e", "e^k" and "-e^k".
double parse_real(const std::string& text);

}  // namespace outail
