#include "branchflow/verify.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <numeric>
#include <sstream>

#include "branchflow/branching.hpp"
#include "branchflow/errors.hpp"
#include "branchflow/evolution.hpp"

namespace branchflow {

namespace {

using Eigen::VectorXd;

class MasterIntegrator {
 public:
  MasterIntegrator(const RateField& field, const MasterOptions& options) : field_(field), options_(options) {}

  // Advances p across [a, b], which lies inside one schedule segment.
  void run(VectorXd& p, double a, double b, std::size_t segment) {
    const double span = b - a;
    if (span <= 0.0) return;
    const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(span * options_.substeps_per_unit - 1e-9)));
    const double h = span / static_cast<double>(steps);
    for (std::size_t i = 0; i < steps; ++i) {
      const double t0 = a + h * static_cast<double>(i);
      const double t1 = (i + 1 == steps) ? b : a + h * static_cast<double>(i + 1);
      step(p, t0, t1, segment, 0);
    }
  }

 private:
  // Recent evaluations; a step's end time is the next step's start time.
  RMatrix rates(double t, std::size_t segment) {
    for (const Slot& slot : slots_)
      if (slot.valid && slot.time == t && slot.segment == segment) return slot.rates;
    Slot& slot = slots_[next_slot_];
    next_slot_ = (next_slot_ + 1) % slots_.size();
    slot = {true, t, segment, field_.at(t, segment).rates};
    return slot.rates;
  }

  static double stiffness(const RMatrix& t) { return t.cwiseAbs().colwise().sum().maxCoeff(); }

  static VectorXd flow(const RMatrix& t, const VectorXd& p) {
    // gain_m = sum_n T_mn p_n, loss_m = p_m sum_n T_nm
    return t * p - t.colwise().sum().transpose().cwiseProduct(p);
  }

  void step(VectorXd& p, double t0, double t1, std::size_t segment, int depth) {
    const double h = t1 - t0;
    const double mid = t0 + 0.5 * h;
    const RMatrix r0 = rates(t0, segment);
    const RMatrix rm = rates(mid, segment);
    const RMatrix r1 = rates(t1, segment);
    const double stiff = std::max({stiffness(r0), stiffness(rm), stiffness(r1)}) * h;
    if (stiff > options_.stiffness_bound && depth < options_.max_bisections) {
      step(p, t0, mid, segment, depth + 1);
      step(p, mid, t1, segment, depth + 1);
      return;
    }
    const VectorXd k1 = flow(r0, p);
    const VectorXd k2 = flow(rm, p + 0.5 * h * k1);
    const VectorXd k3 = flow(rm, p + 0.5 * h * k2);
    const VectorXd k4 = flow(r1, p + h * k3);
    p += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    const double lowest = p.minCoeff();
    if (lowest < -kUndershootLimit) {
      std::ostringstream msg;
      msg << "master equation unstable at t = " << t1 << ": probability undershoot " << lowest
          << "; use a smaller integration step";
      throw IntegrationError(msg.str(), t1);
    }
    if (lowest < 0.0) {
      p = p.cwiseMax(0.0);
      p /= p.sum();
    }
  }

  const RateField& field_;
  const MasterOptions& options_;
  struct Slot {
    bool valid = false;
    double time = 0.0;
    std::size_t segment = 0;
    RMatrix rates;
  };
  std::array<Slot, 4> slots_;
  std::size_t next_slot_ = 0;
};

}  // namespace

std::vector<std::vector<double>> integrate_master_equation(const Model& model, std::span<const double> p0,
                                                           std::span<const double> grid,
                                                           const MasterOptions& options) {
  const std::size_t nb = model.branch_count();
  if (p0.size() != nb) throw DimensionError("master equation: p0 has wrong length");
  for (double x : p0)
    if (x < 0.0) throw ValidationError("master equation: p0 has a negative entry");
  if (std::abs(std::accumulate(p0.begin(), p0.end(), 0.0) - 1.0) > 1e-8)
    throw ValidationError("master equation: p0 does not sum to 1");
  if (grid.empty()) return {};
  if (!(options.substeps_per_unit > 0.0)) throw ValidationError("master equation: substeps must be positive");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 0.0 || grid[i] > model.t_max + 1e-12) throw ValidationError("master equation: grid outside [0, t_max]");
    if (i > 0 && grid[i] < grid[i - 1]) throw ValidationError("master equation: grid not sorted");
  }

  const RateField field(std::make_shared<const Model>(model), options.rule, options.weight_cutoff);
  MasterIntegrator integrator(field, options);

  // Breakpoints at segment boundaries keep each RK4 step inside one constant Hamiltonian.
  std::vector<double> bounds;
  for (std::size_t s = 0; s + 1 < model.schedule.size(); ++s) bounds.push_back(model.schedule[s].t_end);

  VectorXd p = Eigen::Map<const VectorXd>(p0.data(), static_cast<Eigen::Index>(nb));
  std::vector<std::vector<double>> out;
  out.reserve(grid.size());
  out.emplace_back(p0.begin(), p0.end());
  for (std::size_t i = 1; i < grid.size(); ++i) {
    double a = grid[i - 1];
    const double b = grid[i];
    for (double boundary : bounds) {
      if (boundary > a && boundary < b) {
        integrator.run(p, a, boundary, model.segment_at(0.5 * (a + boundary)));
        a = boundary;
      }
    }
    integrator.run(p, a, b, model.segment_at(0.5 * (a + b)));
    out.emplace_back(p.data(), p.data() + p.size());
  }
  return out;
}

EquivarianceReport equivariance_report(const Model& model, std::span<const double> grid, double tolerance,
                                       const MasterOptions& options) {
  if (grid.empty()) throw ValidationError("equivariance report: empty grid");
  EquivarianceReport report;
  report.model_id = model.name;
  report.labels = model.labels;
  report.grid.assign(grid.begin(), grid.end());
  report.tolerance = tolerance;
  report.options = options;

  const Evolver evolver(std::make_shared<const Model>(model));
  for (double t : grid) report.born_weights.push_back(born_weights(evolver.state_at(t), model.basis));

  std::vector<double> p0 = report.born_weights.front();
  const double total = std::accumulate(p0.begin(), p0.end(), 0.0);
  for (double& x : p0) x /= total;
  report.distributions = integrate_master_equation(model, p0, grid, options);

  for (std::size_t i = 0; i < grid.size(); ++i) {
    double dev = 0.0;
    for (std::size_t m = 0; m < p0.size(); ++m)
      dev = std::max(dev, std::abs(report.distributions[i][m] - report.born_weights[i][m]));
    report.deviations.push_back(dev);
    report.max_abs_deviation = std::max(report.max_abs_deviation, dev);
  }
  report.pass = report.max_abs_deviation <= tolerance;
  return report;
}

std::vector<double> uniform_grid(double t_max, std::size_t intervals) {
  if (intervals == 0) throw ValidationError("uniform grid needs at least one interval");
  std::vector<double> g(intervals + 1);
  for (std::size_t i = 0; i <= intervals; ++i) g[i] = t_max * static_cast<double>(i) / static_cast<double>(intervals);
  g.back() = t_max;
  return g;
}

}  // namespace branchflow
