#include "branchflow/branching.hpp"

#include <algorithm>
#include <numeric>

#include "branchflow/errors.hpp"

namespace branchflow {

double BranchDecomposition::total_weight() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

BranchDecomposition decompose_basis(const StateVector& psi, const ExperienceBasis& basis, double time) {
  if (psi.dim() != basis.space().dim()) throw DimensionError("decompose_basis: state does not live in the model space");
  BranchDecomposition out{.time = time, .form = BranchForm::basis, .branch_vectors = {}, .weights = {}};
  out.branch_vectors.reserve(basis.size());
  out.weights.reserve(basis.size());
  for (const StateVector& phi : basis.vectors()) {
    StateVector branch = partial_inner(phi, psi, basis.space());
    out.weights.push_back(branch.norm_squared());
    out.branch_vectors.push_back(std::move(branch));
  }
  return out;
}

BranchDecomposition decompose_projectors(const StateVector& psi, const ProjectorFamily& family, double time) {
  if (psi.dim() != family.dim()) throw DimensionError("decompose_projectors: dimension mismatch");
  BranchDecomposition out{.time = time, .form = BranchForm::projector, .branch_vectors = {}, .weights = {}};
  out.branch_vectors.reserve(family.size());
  out.weights.reserve(family.size());
  for (const HermitianOperator& p : family.projectors()) {
    StateVector branch = apply(p, psi);
    out.weights.push_back(branch.norm_squared());
    out.branch_vectors.push_back(std::move(branch));
  }
  return out;
}

std::vector<double> born_weights(const StateVector& psi, const ExperienceBasis& basis) {
  return decompose_basis(psi, basis).weights;
}

std::vector<double> summary_weights(const std::vector<double>& weights) {
  std::vector<double> out(weights);
  for (double& w : out)
    if (w < kReportZeroWeight) w = 0.0;
  return out;
}

std::size_t occupied_branch_count(const std::vector<double>& weights) {
  return static_cast<std::size_t>(
      std::count_if(weights.begin(), weights.end(), [](double w) { return w >= kReportZeroWeight; }));
}

}  // namespace branchflow
