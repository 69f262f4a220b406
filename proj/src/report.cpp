#include "outail/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

namespace outail {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::string opt(const std::optional<double>& x) { return x ? format_number(*x) : std::string(); }

}  // namespace

std::string csv_header() { return "name,family,dim,t,r,delta,beta,estimate,ci,bound,margin,pass,n_samples,seed"; }

std::string csv_row(const BoundReport& r) {
  std::string row;
  row.reserve(200);
  row += r.name + ',' + r.family + ',' + std::to_string(r.dim) + ',';
  row += opt(r.t) + ',' + opt(r.r) + ',' + opt(r.delta) + ',';
  row += format_number(r.beta) + ',' + format_number(r.estimate) + ',' + format_number(r.ci_half_width) + ',';
  row += format_number(r.bound) + ',' + format_number(r.margin()) + ',' + (r.pass() ? "true" : "false") + ',';
  row += std::to_string(r.n_samples) + ',' + std::to_string(r.seed);
  return row;
}

void write_csv(const std::filesystem::path& file, std::span<const BoundReport> reports) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + file.string() + " for writing");
  out << csv_header() << '\n';
  for (const auto& r : reports) out << csv_row(r) << '\n';
  if (!out) throw std::runtime_error("failed writing " + file.string());
}

nlohmann::json summary_json(std::span<const BoundReport> reports, const nlohmann::json& extra) {
  nlohmann::json j = extra.is_object() ? extra : nlohmann::json::object();
  std::size_t passed = 0, paper = 0, paper_failed = 0;
  nlohmann::json failures = nlohmann::json::array();
  std::map<std::string, const BoundReport*> worst;
  for (const auto& r : reports) {
    if (r.pass()) ++passed;
    if (r.paper_anchored) {
      ++paper;
      if (!r.pass()) ++paper_failed;
    }
    if (!r.pass()) {
      failures.push_back({{"name", r.name},
                          {"family", r.family},
                          {"estimate", r.estimate},
                          {"bound", r.bound},
                          {"margin", r.margin()},
                          {"paper_anchored", r.paper_anchored},
                          {"note", r.note}});
    }
    auto& slot = worst[r.name];
    const double m = r.margin() + r.ci_half_width;
    if (slot == nullptr || !(slot->margin() + slot->ci_half_width <= m)) slot = &r;
  }
  j["rows"] = reports.size();
  j["passed"] = passed;
  j["failed"] = reports.size() - passed;
  j["paper_anchored_rows"] = paper;
  j["paper_anchored_failed"] = paper_failed;
  j["all_paper_checks_pass"] = paper_failed == 0;
  j["failures"] = failures;
  nlohmann::json w = nlohmann::json::object();
  for (const auto& [name, r] : worst) {
    w[name] = {{"family", r->family},
               {"margin", std::isfinite(r->margin()) ? nlohmann::json(r->margin()) : nlohmann::json(nullptr)},
               {"ci", r->ci_half_width},
               {"pass", r->pass()}};
    if (r->r) w[name]["r"] = *r->r;
    if (r->t) w[name]["t"] = *r->t;
  }
  j["worst_margins"] = w;
  return j;
}

bool all_paper_checks_pass(std::span<const BoundReport> reports) {
  for (const auto& r : reports)
    if (r.paper_anchored && !r.pass()) return false;
  return true;
}

}  // namespace outail
