#include "branchflow/trajectory.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "branchflow/errors.hpp"

namespace branchflow {

namespace {

constexpr double kAlignTolerance = 1e-12;
constexpr std::uint32_t kSubdivisions = 1u << kMaxHalvings;

// Runs fn(i) for i in [0, n) on up to `threads` workers. The first exception by index wins.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::size_t err_index = n;
  std::exception_ptr err;
  std::vector<std::jthread> workers;
  workers.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(err_mutex);
          if (i < err_index) {
            err_index = i;
            err = std::current_exception();
          }
        }
      }
    });
  }
  workers.clear();
  if (err) std::rethrow_exception(err);
}

std::size_t sample_index(std::span<const double> weights, double u) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t n = 0; n < weights.size(); ++n) {
    if (weights[n] <= 0.0) continue;
    last_positive = n;
    cum += weights[n] / total;
    if (u < cum) return n;
  }
  return last_positive;
}

// Chooses the target of a jump out of `current` given that u < sum_m rates(m, current) * scale.
std::size_t jump_target(std::size_t current, const RMatrix& rates, double scale, double u) {
  const auto src = static_cast<Eigen::Index>(current);
  double cum = 0.0;
  std::size_t last = current;
  for (Eigen::Index m = 0; m < rates.rows(); ++m) {
    if (m == src || rates(m, src) <= 0.0) continue;
    cum += rates(m, src) * scale;
    last = static_cast<std::size_t>(m);
    if (u < cum) return last;
  }
  return last;  // roundoff at the top of the cumulative sum
}

}  // namespace

const char* to_string(Diagnostic::Kind kind) {
  switch (kind) {
    case Diagnostic::Kind::low_weight_occupied:
      return "low_weight_occupied";
    case Diagnostic::Kind::rate_cap:
      return "rate_cap";
  }
  return "unknown";
}

TimeGrid::TimeGrid(const Model& model, double dt_base) : dt_base_(dt_base) {
  if (!(dt_base > 0.0) || !std::isfinite(dt_base)) throw ValidationError("dt_base must be positive");
  for (std::size_t s = 0; s + 1 < model.schedule.size(); ++s) {
    const double b = model.schedule[s].t_end;
    const double cells = std::round(b / dt_base);
    if (std::abs(cells * dt_base - b) > kAlignTolerance) {
      std::ostringstream msg;
      msg << "grid misalignment: segment boundary " << b << " is not a multiple of dt_base " << dt_base;
      throw ValidationError(msg.str());
    }
  }
  const double ratio = model.t_max / dt_base;
  double full = std::floor(ratio);
  if (std::abs(std::round(ratio) * dt_base - model.t_max) <= kAlignTolerance) full = std::round(ratio);
  const auto n_full = static_cast<std::size_t>(full);
  times_.reserve(n_full + 2);
  for (std::size_t k = 0; k <= n_full; ++k) times_.push_back(static_cast<double>(k) * dt_base);
  if (model.t_max - times_.back() > kAlignTolerance)
    times_.push_back(model.t_max);
  else
    times_.back() = model.t_max;
  if (times_.size() < 2) throw ValidationError("grid has no cells");
  segments_.reserve(times_.size());
  for (std::size_t k = 0; k < times_.size(); ++k) {
    // Cells never straddle a boundary; classify each by its midpoint (the last point by its left cell).
    const double probe = k + 1 < times_.size() ? 0.5 * (times_[k] + times_[k + 1]) : times_[k];
    segments_.push_back(model.segment_at(probe));
  }
}

RateTable::RateTable(std::shared_ptr<const RateField> field, std::shared_ptr<const TimeGrid> grid, unsigned threads)
    : field_(std::move(field)), grid_(std::move(grid)) {
  base_.resize(grid_->size());
  parallel_for(grid_->size(), threads, [this](std::size_t k) {
    const RatePair rp = field_->at(grid_->times()[k], grid_->cell_segment(k));
    base_[k] = RateSample{rp.rates, rp.weights};
  });
}

double RateTable::sub_time(std::size_t k, std::uint32_t j) const {
  if (j == 0) return grid_->times()[k];
  return grid_->times()[k] + grid_->cell_length(k) * (static_cast<double>(j) / kSubdivisions);
}

RateSample RateTable::evaluate(std::size_t k, std::uint32_t j) const {
  const RatePair rp = field_->at(sub_time(k, j), grid_->cell_segment(k));
  return RateSample{rp.rates, rp.weights};
}

const RateSample& RateTable::sample(std::size_t k, std::uint32_t j) const {
  if (j == 0) return base_.at(k);
  if (k >= grid_->cell_count() || j >= kSubdivisions) throw ValidationError("rate table: sub-grid index out of range");
  const std::uint64_t key = static_cast<std::uint64_t>(k) * kSubdivisions + j;
  {
    std::shared_lock lock(mutex_);
    if (auto it = refined_.find(key); it != refined_.end()) return *it->second;
  }
  auto fresh = std::make_unique<const RateSample>(evaluate(k, j));
  std::unique_lock lock(mutex_);
  auto [it, inserted] = refined_.try_emplace(key, std::move(fresh));
  return *it->second;
}

std::size_t RateTable::refined_count() const {
  std::shared_lock lock(mutex_);
  return refined_.size();
}

std::size_t Trajectory::branch_at(double t) const {
  std::size_t b = initial_branch;
  for (const JumpEvent& j : jumps) {
    if (j.time > t) break;
    b = j.to;
  }
  return b;
}

std::vector<std::size_t> Trajectory::branch_path() const {
  std::vector<std::size_t> path;
  if (!grid) return path;
  path.reserve(grid->size());
  std::size_t b = initial_branch;
  std::size_t next = 0;
  for (double t : grid->times()) {
    while (next < jumps.size() && jumps[next].time <= t) b = jumps[next++].to;
    path.push_back(b);
  }
  return path;
}

std::size_t step(std::size_t current, const RMatrix& rates, double dt, CounterRng& rng) {
  if (!(dt > 0.0)) throw ValidationError("step: dt must be positive");
  if (current >= static_cast<std::size_t>(rates.cols())) throw DimensionError("step: branch index out of range");
  const double exit = rates.col(static_cast<Eigen::Index>(current)).sum() * dt;
  if (!(exit <= kStepHardCap)) {
    std::ostringstream msg;
    msg << "rate cap exceeded: R*dt = " << exit << " > " << kStepHardCap;
    throw RateCapError(msg.str(), 0.0);
  }
  const double u = rng.uniform();
  if (u >= exit) return current;
  return jump_target(current, rates, dt, u);
}

double EnsembleStats::fraction_within(double k) const {
  std::size_t total = 0;
  std::size_t ok = 0;
  for (std::size_t t = 0; t < occupation.size(); ++t)
    for (std::size_t b = 0; b < occupation[t].size(); ++b) {
      ++total;
      if (std::abs(occupation[t][b] - born_weights[t][b]) <= k * standard_error[t][b] + 1e-15) ++ok;
    }
  return total == 0 ? 1.0 : static_cast<double>(ok) / static_cast<double>(total);
}

TrajectorySimulator::TrajectorySimulator(std::shared_ptr<const Model> model, SimulationOptions options)
    : options_(options) {
  grid_ = std::make_shared<const TimeGrid>(*model, options.dt_base);
  auto field = std::make_shared<const RateField>(std::move(model), RateRule::rectified, options.weight_cutoff);
  table_ = std::make_shared<const RateTable>(std::move(field), grid_, options.threads);
}

void TrajectorySimulator::advance(std::size_t k, std::uint32_t j0, int level, std::size_t& branch, bool& low_flag,
                                  CounterRng& rng, Trajectory& out) const {
  const RateSample& s = table_->sample(k, j0);
  const double start = table_->sub_time(k, j0);
  const std::uint32_t units = kSubdivisions >> level;
  const double h = grid_->cell_length(k) * (static_cast<double>(units) / kSubdivisions);

  if (s.weights[branch] <= options_.weight_cutoff) {
    if (!low_flag) out.diagnostics.push_back({Diagnostic::Kind::low_weight_occupied, start, branch, s.weights[branch]});
    low_flag = true;
  } else {
    low_flag = false;
  }

  const double exit_rate = s.rates.col(static_cast<Eigen::Index>(branch)).sum();
  if (!std::isfinite(exit_rate)) {
    std::ostringstream msg;
    msg << "non-finite exit rate from branch " << branch << " at t = " << start;
    throw RateCapError(msg.str(), start);
  }
  if (exit_rate == 0.0) return;

  double prob = exit_rate * h;
  if (prob > kStepTarget && level < kMaxHalvings) {
    advance(k, j0, level + 1, branch, low_flag, rng, out);
    advance(k, j0 + units / 2, level + 1, branch, low_flag, rng, out);
    return;
  }
  double scale = h;
  if (prob > kStepTarget) {
    out.diagnostics.push_back({Diagnostic::Kind::rate_cap, start, branch, prob});
    prob = -std::expm1(-prob);
    scale = prob / exit_rate;
  }
  const double u = rng.uniform();
  if (u >= prob) return;
  const std::size_t to = jump_target(branch, s.rates, scale, u);
  const double end = (j0 + units == kSubdivisions) ? grid_->times()[k + 1] : table_->sub_time(k, j0 + units);
  out.jumps.push_back({end, start, branch, to});
  branch = to;
}

Trajectory TrajectorySimulator::run(std::uint64_t seed, std::uint64_t stream) const {
  CounterRng rng(seed, stream);
  Trajectory out;
  out.seed = seed;
  out.stream = stream;
  out.grid = grid_;
  const Model& m = model();
  if (m.initial_branch) {
    out.initial_branch = *m.initial_branch;
  } else {
    out.initial_branch = sample_index(table_->at_grid(0).weights, rng.uniform());
  }
  std::size_t branch = out.initial_branch;
  bool low_flag = false;
  for (std::size_t k = 0; k < grid_->cell_count(); ++k) advance(k, 0, 0, branch, low_flag, rng, out);
  return out;
}

EnsembleResult TrajectorySimulator::run_ensemble(std::size_t n, std::uint64_t seed, unsigned threads) const {
  if (n == 0) throw ValidationError("ensemble size must be >= 1");
  EnsembleResult result;
  result.trajectories.resize(n);
  parallel_for(n, threads == 0 ? options_.threads : threads,
               [&](std::size_t i) { result.trajectories[i] = run(seed, i); });

  const std::size_t nb = model().branch_count();
  const auto& times = grid_->times();
  std::vector<std::vector<std::size_t>> counts(times.size(), std::vector<std::size_t>(nb, 0));
  for (const Trajectory& tr : result.trajectories) {
    std::size_t b = tr.initial_branch;
    std::size_t next = 0;
    for (std::size_t k = 0; k < times.size(); ++k) {
      while (next < tr.jumps.size() && tr.jumps[next].time <= times[k]) b = tr.jumps[next++].to;
      ++counts[k][b];
    }
  }
  EnsembleStats& st = result.stats;
  st.n_trajectories = n;
  st.times = times;
  const double dn = static_cast<double>(n);
  for (std::size_t k = 0; k < times.size(); ++k) {
    std::vector<double> occ(nb), born(nb), se(nb);
    const std::vector<double>& w = table_->at_grid(k).weights;
    for (std::size_t b = 0; b < nb; ++b) {
      occ[b] = static_cast<double>(counts[k][b]) / dn;
      born[b] = w[b];
      const double p = std::clamp(w[b], 0.0, 1.0);
      se[b] = std::sqrt(p * (1.0 - p) / dn);
    }
    st.occupation.push_back(std::move(occ));
    st.born_weights.push_back(std::move(born));
    st.standard_error.push_back(std::move(se));
  }
  return result;
}

Trajectory run_trajectory(const Model& model, std::uint64_t seed, std::uint64_t stream, double dt_base) {
  TrajectorySimulator sim(std::make_shared<const Model>(model), SimulationOptions{.dt_base = dt_base});
  return sim.run(seed, stream);
}

EnsembleStats run_ensemble(const Model& model, std::size_t n, std::uint64_t seed, double dt_base, unsigned threads) {
  TrajectorySimulator sim(std::make_shared<const Model>(model),
                          SimulationOptions{.dt_base = dt_base, .threads = threads});
  return sim.run_ensemble(n, seed, threads).stats;
}

std::vector<double> occupation_at(const std::vector<Trajectory>& trajectories, std::size_t branches, double t) {
  std::vector<double> occ(branches, 0.0);
  if (trajectories.empty()) return occ;
  for (const Trajectory& tr : trajectories) occ.at(tr.branch_at(t)) += 1.0;
  for (double& f : occ) f /= static_cast<double>(trajectories.size());
  return occ;
}

}  // namespace branchflow
