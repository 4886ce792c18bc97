#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <shared_mutex>
#include <utility>
#include <vector>

#include "branchflow/hilbert.hpp"
#include "branchflow/model.hpp"

namespace branchflow {

inline constexpr double kUnitaryTolerance = 1e-9;

/// exp(-i H dt / hbar) for one schedule segment.
struct Propagator {
  std::size_t dim;
  CMatrix matrix;
  double t_start;
  double t_end;

  StateVector apply(const StateVector& v) const;
};

/// Eigendecomposition H = V diag(lambda) V^dagger of a Hermitian operator.
struct Spectrum {
  Eigen::VectorXd eigenvalues;
  CMatrix eigenvectors;
};

/// Throws NumericalError if the eigensolver does not converge.
Spectrum diagonalize(const HermitianOperator& h);

/// U = V exp(-i Lambda dt / hbar) V^dagger. Requires dt >= 0.
Propagator propagator_for(const HermitianOperator& h, double dt, double hbar = 1.0);
Propagator propagator_for(const Spectrum& spectrum, double dt, double hbar = 1.0);

/// Propagators keyed by (segment, dt). Safe for concurrent readers; each key is built once.
class PropagatorCache {
 public:
  explicit PropagatorCache(std::vector<Spectrum> spectra, double hbar);

  std::shared_ptr<const Propagator> get(std::size_t segment, double dt) const;
  std::size_t size() const;

 private:
  std::vector<Spectrum> spectra_;
  double hbar_;
  mutable std::shared_mutex mutex_;
  mutable std::map<std::pair<std::size_t, std::uint64_t>, std::shared_ptr<const Propagator>> entries_;
};

/// Exact piecewise-constant Schrodinger evolution of a model's initial state.
/// Construction diagonalizes every segment once; state_at() is O(dim^2).
class Evolver {
 public:
  explicit Evolver(std::shared_ptr<const Model> model);

  const Model& model() const noexcept { return *model_; }
  std::shared_ptr<const Model> model_ptr() const noexcept { return model_; }

  /// |Psi(t)> for 0 <= t <= t_max. Throws ValidationError outside that range.
  StateVector state_at(double t) const;
  /// Same, but using the spectrum of a given segment (for evaluation at a segment's right end).
  StateVector state_at(double t, std::size_t segment) const;

  /// |Psi(t)> at each segment start.
  const std::vector<StateVector>& segment_states() const noexcept { return starts_; }
  const Spectrum& spectrum(std::size_t segment) const { return spectra_.at(segment); }
  const PropagatorCache& propagators() const noexcept { return *cache_; }

 private:
  std::shared_ptr<const Model> model_;
  std::vector<Spectrum> spectra_;
  std::vector<CVector> start_coeffs_;  // V_s^dagger |Psi(t_s)>
  std::vector<StateVector> starts_;
  std::unique_ptr<PropagatorCache> cache_;
};

/// |Psi(t)> by multiplying segment propagators in order and splitting the final segment at t.
StateVector evolve(const Model& model, double t);

}  // namespace branchflow
