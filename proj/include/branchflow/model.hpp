#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "branchflow/hilbert.hpp"

namespace branchflow {

/// Complete orthonormal basis {phi_n} of S_C. Branch n is phi_n (x) S_R.
class ExperienceBasis {
 public:
  ExperienceBasis(CompositeSpace space, std::vector<StateVector> vectors);

  static ExperienceBasis standard(const CompositeSpace& space);

  const CompositeSpace& space() const noexcept { return space_; }
  const std::vector<StateVector>& vectors() const noexcept { return vectors_; }
  const StateVector& operator[](std::size_t n) const { return vectors_.at(n); }
  std::size_t size() const noexcept { return vectors_.size(); }

 private:
  CompositeSpace space_;
  std::vector<StateVector> vectors_;
};

/// Orthogonal projectors Pi_m onto the branch subspaces S_m. Idempotent, pairwise
/// orthogonal and complete, each to 1e-10 in max-norm.
class ProjectorFamily {
 public:
  ProjectorFamily(std::vector<HermitianOperator> projectors, std::vector<std::string> labels);

  const std::vector<HermitianOperator>& projectors() const noexcept { return projectors_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return projectors_.size(); }
  std::size_t dim() const noexcept { return projectors_.front().dim(); }

 private:
  std::vector<HermitianOperator> projectors_;
  std::vector<std::string> labels_;
};

/// Pi_n = |phi_n><phi_n| (x) I_R.
ProjectorFamily projectors_from_basis(const ExperienceBasis& basis, std::vector<std::string> labels = {});

/// H is constant on [t_start, t_end].
struct HamiltonianSegment {
  double t_start;
  double t_end;
  HermitianOperator hamiltonian;
};

struct Model {
  std::string name;
  CompositeSpace space;
  std::vector<HamiltonianSegment> schedule;
  StateVector initial_state;
  ExperienceBasis basis;
  /// Fixed starting branch; empty means sample from the Born weights at t = 0.
  std::optional<std::size_t> initial_branch;
  double t_max;
  double hbar = 1.0;
  /// One label per branch, in basis order.
  std::vector<std::string> labels;

  std::size_t branch_count() const noexcept { return basis.size(); }

  /// Index of the segment containing t. Segments are closed on the left; t_max maps to
  /// the last segment.
  std::size_t segment_at(double t) const;
  const HermitianOperator& hamiltonian_at(double t) const { return schedule[segment_at(t)].hamiltonian; }
};

/// Throws ValidationError naming the first violated invariant. Fills default labels.
void validate(Model& model);

/// Model file (JSON) to validated Model. ParseError carries the offending field path.
Model load_model(std::string_view text);
Model load_model_file(const std::string& path);
std::string serialize_model(const Model& model);

/// Two-level Rabi oscillator: H = hbar * omega * sigma_x, start in e_0, t_max = 2 pi / omega.
Model built_in_rabi(double omega, double hbar = 1.0);

/// Von Neumann measurement of an N-outcome observable by an observer with states
/// {ready, saw 1, ..., saw N}. A coupling pulse of length pi / (2 g) takes
/// |ready> (x) sum_n c_n |n> to sum_n (-i) c_n |saw n>|n>.
Model built_in_measurement(const std::vector<Complex>& amplitudes, double coupling);

/// H diagonal in the experience basis, so no probability current ever flows.
/// dim_C = 3, dim_R = 1, H = diag(0, 1, 2), start (1, 1, 0)/sqrt(2), t_max = 2 pi.
Model built_in_diagonal();

/// Random model for fuzzing: dim_C in {2, 3, 4}, dim_R = max_dim / dim_C, Gaussian
/// Hermitian H (one segment), Haar-like random experience basis and initial state.
/// Deterministic in seed.
Model random_model(std::uint64_t seed, std::size_t max_dim = 8, double t_max = 10.0);

}  // namespace branchflow
