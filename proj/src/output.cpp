#include "branchflow/output.hpp"

#include <cstdio>

#include "branchflow/branching.hpp"
#include "branchflow/random.hpp"

namespace branchflow {

using nlohmann::json;

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_weights_csv(std::ostream& out, const std::vector<std::string>& labels, const std::vector<double>& times,
                       const std::vector<std::vector<double>>& weights) {
  out << "t,branch_label,weight\n";
  for (std::size_t i = 0; i < times.size(); ++i) {
    const std::vector<double> w = summary_weights(weights[i]);
    for (std::size_t b = 0; b < labels.size(); ++b)
      out << format_number(times[i]) << ',' << csv_field(labels[b]) << ',' << format_number(w[b]) << '\n';
  }
}

void write_occupation_csv(std::ostream& out, const std::vector<std::string>& labels, const EnsembleStats& stats) {
  out << "t,branch_label,frequency,born_weight,stderr\n";
  for (std::size_t i = 0; i < stats.times.size(); ++i) {
    const std::vector<double> w = summary_weights(stats.born_weights[i]);
    for (std::size_t b = 0; b < labels.size(); ++b)
      out << format_number(stats.times[i]) << ',' << csv_field(labels[b]) << ','
          << format_number(stats.occupation[i][b]) << ',' << format_number(w[b]) << ','
          << format_number(stats.standard_error[i][b]) << '\n';
  }
}

void write_rates_csv(std::ostream& out, const std::vector<std::string>& labels, const std::vector<RatePair>& rates) {
  out << "t,to_label,from_label,current,rate\n";
  for (const RatePair& rp : rates) {
    for (std::size_t m = 0; m < rp.size(); ++m)
      for (std::size_t n = 0; n < rp.size(); ++n) {
        if (m == n) continue;
        const auto mi = static_cast<Eigen::Index>(m);
        const auto ni = static_cast<Eigen::Index>(n);
        out << format_number(rp.time) << ',' << csv_field(labels[m]) << ',' << csv_field(labels[n]) << ','
            << format_number(rp.current(mi, ni)) << ',' << format_number(rp.rates(mi, ni)) << '\n';
      }
  }
}

void write_equivariance_csv(std::ostream& out, const EquivarianceReport& report) {
  out << "time,branch,p,w,deviation\n";
  for (std::size_t i = 0; i < report.grid.size(); ++i)
    for (std::size_t b = 0; b < report.labels.size(); ++b) {
      const double p = report.distributions[i][b];
      const double w = report.born_weights[i][b];
      out << format_number(report.grid[i]) << ',' << csv_field(report.labels[b]) << ',' << format_number(p) << ','
          << format_number(w) << ',' << format_number(std::abs(p - w)) << '\n';
    }
}

json to_json(const Trajectory& trajectory, const std::vector<std::string>& labels) {
  json jumps = json::array();
  for (const JumpEvent& j : trajectory.jumps)
    jumps.push_back({{"time", j.time}, {"rate_time", j.rate_time}, {"from", labels.at(j.from)}, {"to", labels.at(j.to)}});
  json diags = json::array();
  for (const Diagnostic& d : trajectory.diagnostics)
    diags.push_back({{"kind", to_string(d.kind)}, {"time", d.time}, {"branch", labels.at(d.branch)}, {"value", d.value}});
  return {{"seed", trajectory.seed},
          {"stream", trajectory.stream},
          {"rng", CounterRng::kAlgorithm},
          {"initial_branch", labels.at(trajectory.initial_branch)},
          {"final_branch", labels.at(trajectory.final_branch())},
          {"jumps", std::move(jumps)},
          {"diagnostics", std::move(diags)}};
}

json to_json(const EquivarianceReport& report, bool include_series) {
  json j = {{"model", report.model_id},
            {"labels", report.labels},
            {"max_abs_deviation", report.max_abs_deviation},
            {"tolerance", report.tolerance},
            {"pass", report.pass},
            {"parameters",
             {{"substeps_per_unit", report.options.substeps_per_unit},
              {"rule", report.options.rule == RateRule::rectified ? "rectified" : "unrectified"},
              {"weight_cutoff", report.options.weight_cutoff},
              {"stiffness_bound", report.options.stiffness_bound}}}};
  if (include_series) {
    j["grid"] = report.grid;
    j["deviations"] = report.deviations;
  }
  return j;
}

}  // namespace branchflow
