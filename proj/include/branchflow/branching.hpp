#pragma once

#include <vector>

#include "branchflow/hilbert.hpp"
#include "branchflow/model.hpp"

namespace branchflow {

/// Weights below this are printed as exactly 0 in reports.
inline constexpr double kReportZeroWeight = 1e-14;

enum class BranchForm {
  basis,      ///< branch_vectors[n] = psi_n over S_R, with Psi = sum_n phi_n (x) psi_n
  projector,  ///< branch_vectors[m] = Pi_m Psi over the full space
};

struct BranchDecomposition {
  double time = 0.0;
  BranchForm form = BranchForm::projector;
  std::vector<StateVector> branch_vectors;
  /// w_n = <psi_n|psi_n>
  std::vector<double> weights;

  std::size_t size() const noexcept { return weights.size(); }
  double total_weight() const;
};

BranchDecomposition decompose_basis(const StateVector& psi, const ExperienceBasis& basis, double time = 0.0);
BranchDecomposition decompose_projectors(const StateVector& psi, const ProjectorFamily& family, double time = 0.0);

/// Just the weights w_n of the experience-basis decomposition.
std::vector<double> born_weights(const StateVector& psi, const ExperienceBasis& basis);

/// Copy of weights with entries below kReportZeroWeight set to 0.
std::vector<double> summary_weights(const std::vector<double>& weights);

/// Count of weights above kReportZeroWeight.
std::size_t occupied_branch_count(const std::vector<double>& weights);

}  // namespace branchflow
