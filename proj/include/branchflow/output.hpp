#pragma once

// Plot-ready output formats. CSV files are RFC-4180 style with a header row, UTF-8,
// '.' decimal separator and 17 significant digits.
//
//   weights.csv        t,branch_label,weight
//   occupation.csv     t,branch_label,frequency,born_weight,stderr
//   rates.csv          t,to_label,from_label,current,rate
//   equivariance.csv   time,branch,p,w,deviation
//   trajectories.jsonl one Trajectory object per line
//   equivariance.json  EquivarianceReport

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "branchflow/model.hpp"
#include "branchflow/rates.hpp"
#include "branchflow/trajectory.hpp"
#include "branchflow/verify.hpp"

namespace branchflow {

std::string csv_field(std::string_view text);
std::string format_number(double x);

/// weights[t][branch]; weights below the report cutoff are written as 0.
void write_weights_csv(std::ostream& out, const std::vector<std::string>& labels, const std::vector<double>& times,
                       const std::vector<std::vector<double>>& weights);

void write_occupation_csv(std::ostream& out, const std::vector<std::string>& labels, const EnsembleStats& stats);

void write_rates_csv(std::ostream& out, const std::vector<std::string>& labels, const std::vector<RatePair>& rates);

void write_equivariance_csv(std::ostream& out, const EquivarianceReport& report);

nlohmann::json to_json(const Trajectory& trajectory, const std::vector<std::string>& labels);
nlohmann::json to_json(const EquivarianceReport& report, bool include_series = true);

}  // namespace branchflow
