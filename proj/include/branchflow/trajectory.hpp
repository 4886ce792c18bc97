#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "branchflow/model.hpp"
#include "branchflow/random.hpp"
#include "branchflow/rates.hpp"

namespace branchflow {

/// Target bound on the per-step jump probability; above it the step is halved.
inline constexpr double kStepTarget = 0.1;
/// Hard bound accepted by step().
inline constexpr double kStepHardCap = 0.5;
/// Halving stops at dt_base / 2^kMaxHalvings.
inline constexpr int kMaxHalvings = 10;

/// Uniform simulation grid t_k = k * dt_base. When t_max is not a multiple of
/// dt_base the final cell is shorter and ends exactly at t_max.
class TimeGrid {
 public:
  /// Throws ValidationError if an interior segment boundary is not a grid point (to 1e-12).
  TimeGrid(const Model& model, double dt_base);

  double dt_base() const noexcept { return dt_base_; }
  const std::vector<double>& times() const noexcept { return times_; }
  std::size_t size() const noexcept { return times_.size(); }
  std::size_t cell_count() const noexcept { return times_.size() - 1; }
  double cell_length(std::size_t k) const { return times_[k + 1] - times_[k]; }
  /// Schedule segment that contains cell k.
  std::size_t cell_segment(std::size_t k) const { return segments_[k]; }

 private:
  double dt_base_;
  std::vector<double> times_;
  std::vector<std::size_t> segments_;
};

struct RateSample {
  RMatrix rates;
  std::vector<double> weights;
};

/// Jump rates on the simulation grid, shared read-only by every trajectory. Samples at
/// sub-grid times t_k + j * len_k / 2^kMaxHalvings are computed on first use.
class RateTable {
 public:
  RateTable(std::shared_ptr<const RateField> field, std::shared_ptr<const TimeGrid> grid, unsigned threads = 1);

  const TimeGrid& grid() const noexcept { return *grid_; }
  const RateField& field() const noexcept { return *field_; }

  /// Sample at t_k + j * cell_length(k) / 2^kMaxHalvings, 0 <= j < 2^kMaxHalvings.
  const RateSample& sample(std::size_t k, std::uint32_t j) const;
  /// Sample at grid point k (also valid for the final grid point).
  const RateSample& at_grid(std::size_t k) const { return base_[k]; }
  double sub_time(std::size_t k, std::uint32_t j) const;
  std::size_t refined_count() const;

 private:
  RateSample evaluate(std::size_t k, std::uint32_t j) const;

  std::shared_ptr<const RateField> field_;
  std::shared_ptr<const TimeGrid> grid_;
  std::vector<RateSample> base_;
  mutable std::shared_mutex mutex_;
  mutable std::unordered_map<std::uint64_t, std::unique_ptr<const RateSample>> refined_;
};

struct JumpEvent {
  double time;       ///< when the new branch takes effect (end of the step)
  double rate_time;  ///< where the rates that triggered the jump were evaluated
  std::size_t from;
  std::size_t to;
};

struct Diagnostic {
  enum class Kind {
    low_weight_occupied,  ///< trajectory sits on a branch whose weight is at or below the cutoff
    rate_cap,             ///< exit probability still above target after maximal halving
  };
  Kind kind;
  double time;
  std::size_t branch;
  double value;  ///< the weight, or R * dt
};

const char* to_string(Diagnostic::Kind kind);

struct Trajectory {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::shared_ptr<const TimeGrid> grid;
  std::size_t initial_branch = 0;
  std::vector<JumpEvent> jumps;
  std::vector<Diagnostic> diagnostics;

  /// Branch occupied at time t (jumps with time <= t applied).
  std::size_t branch_at(double t) const;
  /// Branch at each grid time.
  std::vector<std::size_t> branch_path() const;
  std::size_t final_branch() const { return jumps.empty() ? initial_branch : jumps.back().to; }
};

/// One first-order thinning step from `current`: jump n -> m with probability T(m, n) * dt,
/// the target chosen by cumulative sums in index order from a single uniform draw.
/// Throws RateCapError if the exit probability R * dt exceeds kStepHardCap.
std::size_t step(std::size_t current, const RMatrix& rates, double dt, CounterRng& rng);

struct EnsembleStats {
  std::size_t n_trajectories = 0;
  std::vector<double> times;
  /// [time][branch] fraction of trajectories on each branch.
  std::vector<std::vector<double>> occupation;
  /// [time][branch] w_n(t).
  std::vector<std::vector<double>> born_weights;
  /// [time][branch] sqrt(w (1 - w) / n), the binomial spread expected under the Born weights.
  std::vector<std::vector<double>> standard_error;

  /// Fraction of (time, branch) cells with |occupation - born| <= k * standard_error.
  double fraction_within(double k) const;
};

struct EnsembleResult {
  EnsembleStats stats;
  std::vector<Trajectory> trajectories;
};

struct SimulationOptions {
  double dt_base = 1e-3;
  unsigned threads = 1;
  double weight_cutoff = kDefaultWeightCutoff;
};

/// Shares one rate table between all trajectories of a model.
class TrajectorySimulator {
 public:
  TrajectorySimulator(std::shared_ptr<const Model> model, SimulationOptions options);

  const Model& model() const noexcept { return table_->field().model(); }
  const RateTable& table() const noexcept { return *table_; }
  std::shared_ptr<const TimeGrid> grid() const noexcept { return grid_; }

  /// Deterministic in (seed, stream).
  Trajectory run(std::uint64_t seed, std::uint64_t stream) const;
  /// Streams 0 .. n-1; output does not depend on the thread count.
  EnsembleResult run_ensemble(std::size_t n, std::uint64_t seed, unsigned threads = 0) const;

 private:
  void advance(std::size_t k, std::uint32_t j0, int level, std::size_t& branch, bool& low_flag, CounterRng& rng,
               Trajectory& out) const;

  SimulationOptions options_;
  std::shared_ptr<const TimeGrid> grid_;
  std::shared_ptr<const RateTable> table_;
};

Trajectory run_trajectory(const Model& model, std::uint64_t seed, std::uint64_t stream, double dt_base);
EnsembleStats run_ensemble(const Model& model, std::size_t n, std::uint64_t seed, double dt_base,
                           unsigned threads = 1);

/// Fraction of trajectories on each branch at an arbitrary time.
std::vector<double> occupation_at(const std::vector<Trajectory>& trajectories, std::size_t branches, double t);

}  // namespace branchflow
