#pragma once

#include <span>
#include <string>
#include <vector>

#include "branchflow/model.hpp"
#include "branchflow/rates.hpp"

namespace branchflow {

/// Undershoot below -kUndershootLimit is an integration failure; smaller negatives are clamped.
inline constexpr double kUndershootLimit = 1e-10;

struct MasterOptions {
  /// RK4 steps per unit time.
  double substeps_per_unit = 2000.0;
  RateRule rule = RateRule::rectified;
  double weight_cutoff = kDefaultWeightCutoff;
  /// A step is bisected while max_n sum_m |T_mn| h exceeds this at any RK4 stage time.
  double stiffness_bound = 0.5;
  int max_bisections = 40;
};

/// Integrates dp_m/dt = sum_n (T_mn p_n - T_nm p_m) with classical RK4, T(t) taken from
/// the model's own |Psi(t)>. p0 is the distribution at grid[0]; returns p at each grid time.
/// Throws IntegrationError when an entry undershoots below -kUndershootLimit.
std::vector<std::vector<double>> integrate_master_equation(const Model& model, std::span<const double> p0,
                                                           std::span<const double> grid,
                                                           const MasterOptions& options = {});

struct EquivarianceReport {
  std::string model_id;
  std::vector<std::string> labels;
  std::vector<double> grid;
  /// [time][branch]
  std::vector<std::vector<double>> distributions;
  std::vector<std::vector<double>> born_weights;
  std::vector<double> deviations;
  double max_abs_deviation = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  MasterOptions options;
};

/// Starts the master equation from the Born weights at grid[0] and compares with the
/// Born weights at every later grid time.
EquivarianceReport equivariance_report(const Model& model, std::span<const double> grid, double tolerance,
                                       const MasterOptions& options = {});

/// n + 1 equally spaced points on [0, t_max].
std::vector<double> uniform_grid(double t_max, std::size_t intervals);

}  // namespace branchflow
