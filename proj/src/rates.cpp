#include "branchflow/rates.hpp"

#include <algorithm>

#include "branchflow/errors.hpp"

namespace branchflow {

namespace {

// (2 / hbar) Im <v_m|H|v_n> for full-space branch vectors stacked as columns.
RMatrix current_from_columns(const CMatrix& branches, const CMatrix& h, double hbar) {
  const CMatrix gram = branches.adjoint() * (h * branches);
  RMatrix j = (2.0 / hbar) * gram.imag();
  j.diagonal().setZero();  // <v|H|v> is real
  return j;
}

void check_weights(std::span<const double> weights, Eigen::Index n) {
  if (static_cast<Eigen::Index>(weights.size()) != n) throw DimensionError("rate_matrix: weight count mismatch");
  for (double w : weights)
    if (w < 0.0) throw ValidationError("rate_matrix: negative branch weight");
}

}  // namespace

RMatrix current_matrix(const BranchDecomposition& decomp, const HermitianOperator& h, double hbar) {
  if (decomp.form != BranchForm::projector)
    throw ValidationError("current_matrix: needs projector-form branch vectors over the full space");
  const auto dim = static_cast<Eigen::Index>(h.dim());
  CMatrix branches(dim, static_cast<Eigen::Index>(decomp.size()));
  for (std::size_t m = 0; m < decomp.size(); ++m) {
    if (decomp.branch_vectors[m].dim() != h.dim()) throw DimensionError("current_matrix: dimension mismatch");
    branches.col(static_cast<Eigen::Index>(m)) = decomp.branch_vectors[m].amplitudes();
  }
  return current_from_columns(branches, h.matrix(), hbar);
}

RMatrix current_matrix_experience(const BranchDecomposition& decomp, const ExperienceBasis& basis,
                                  const HermitianOperator& h, const CompositeSpace& space, double hbar) {
  if (decomp.form != BranchForm::basis) throw ValidationError("current_matrix_experience: needs basis-form branches");
  if (h.dim() != space.dim() || basis.size() != decomp.size() || !(basis.space() == space))
    throw DimensionError("current_matrix_experience: dimension mismatch");
  CMatrix branches(static_cast<Eigen::Index>(space.dim()), static_cast<Eigen::Index>(decomp.size()));
  for (std::size_t n = 0; n < decomp.size(); ++n) {
    if (decomp.branch_vectors[n].dim() != space.dim_r())
      throw DimensionError("current_matrix_experience: branch vector is not over S_R");
    branches.col(static_cast<Eigen::Index>(n)) = tensor_state(basis[n], decomp.branch_vectors[n], space).amplitudes();
  }
  return current_from_columns(branches, h.matrix(), hbar);
}

RMatrix rate_matrix(const RMatrix& current, std::span<const double> weights, double cutoff) {
  const Eigen::Index n = current.rows();
  check_weights(weights, n);
  RMatrix t = RMatrix::Zero(n, n);
  for (Eigen::Index src = 0; src < n; ++src) {
    const double w = weights[static_cast<std::size_t>(src)];
    if (w <= cutoff) continue;
    for (Eigen::Index dst = 0; dst < n; ++dst)
      if (dst != src) t(dst, src) = std::max(current(dst, src), 0.0) / w;
  }
  return t;
}

RMatrix rate_matrix_unrectified(const RMatrix& current, std::span<const double> weights, double cutoff) {
  const Eigen::Index n = current.rows();
  check_weights(weights, n);
  RMatrix t = RMatrix::Zero(n, n);
  for (Eigen::Index src = 0; src < n; ++src) {
    const double w = weights[static_cast<std::size_t>(src)];
    if (w <= cutoff) continue;
    for (Eigen::Index dst = 0; dst < n; ++dst)
      if (dst != src) t(dst, src) = current(dst, src) / w;
  }
  return t;
}

RateField::RateField(std::shared_ptr<const Model> model, RateRule rule, double cutoff)
    : evolver_(std::move(model)), rule_(rule), cutoff_(cutoff) {}

RatePair RateField::at(double t) const { return at(t, model().segment_at(t)); }

RatePair RateField::at(double t, std::size_t segment) const {
  const Model& m = model();
  const StateVector psi = evolver_.state_at(t, segment);
  const BranchDecomposition decomp = decompose_basis(psi, m.basis, t);
  RMatrix j = current_matrix_experience(decomp, m.basis, m.schedule[segment].hamiltonian, m.space, m.hbar);
  RMatrix rates = rule_ == RateRule::rectified ? rate_matrix(j, decomp.weights, cutoff_)
                                               : rate_matrix_unrectified(j, decomp.weights, cutoff_);
  return {t, std::move(j), std::move(rates), decomp.weights};
}

}  // namespace branchflow
