#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "branchflow/branching.hpp"
#include "branchflow/evolution.hpp"
#include "branchflow/hilbert.hpp"
#include "branchflow/model.hpp"

namespace branchflow {

/// Weights at or below this are treated as unoccupied: their outgoing rates are 0.
inline constexpr double kDefaultWeightCutoff = 1e-12;

/// J and T at one instant. J(m, n) is the net probability current from branch n into
/// branch m; T(m, n) is the jump rate n -> m.
struct RatePair {
  double time = 0.0;
  RMatrix current;
  RMatrix rates;
  std::vector<double> weights;

  std::size_t size() const noexcept { return weights.size(); }
  /// Total rate of leaving branch n, sum_m T(m, n).
  double exit_rate(std::size_t n) const { return rates.col(static_cast<Eigen::Index>(n)).sum(); }
};

/// J_mn = (2 / hbar) Im <psi_m|H|psi_n> with psi_m = Pi_m Psi (projector-form decomposition).
RMatrix current_matrix(const BranchDecomposition& decomp, const HermitianOperator& h, double hbar = 1.0);

/// J_mn = 2 Im[hbar^-1 (<phi_m|<psi_m|) H (|phi_n>|psi_n>)] from a basis-form decomposition.
RMatrix current_matrix_experience(const BranchDecomposition& decomp, const ExperienceBasis& basis,
                                  const HermitianOperator& h, const CompositeSpace& space, double hbar = 1.0);

/// T_mn = max(J_mn, 0) / w_n for w_n > cutoff, otherwise 0. Diagonal is 0.
/// Throws ValidationError on a negative weight.
RMatrix rate_matrix(const RMatrix& current, std::span<const double> weights, double cutoff = kDefaultWeightCutoff);

/// J_mn / w_n without the max(., 0). Not a valid jump process; exists so the
/// equivariance check can be shown to fail without the rectification.
RMatrix rate_matrix_unrectified(const RMatrix& current, std::span<const double> weights,
                                double cutoff = kDefaultWeightCutoff);

enum class RateRule { rectified, unrectified };

/// Evaluates RatePair at arbitrary times of a model from a fresh |Psi(t)>.
class RateField {
 public:
  explicit RateField(std::shared_ptr<const Model> model, RateRule rule = RateRule::rectified,
                     double cutoff = kDefaultWeightCutoff);

  const Model& model() const noexcept { return evolver_.model(); }
  const Evolver& evolver() const noexcept { return evolver_; }
  RateRule rule() const noexcept { return rule_; }
  double cutoff() const noexcept { return cutoff_; }

  RatePair at(double t) const;
  /// Uses segment's Hamiltonian even when t is that segment's right end.
  RatePair at(double t, std::size_t segment) const;

 private:
  Evolver evolver_;
  RateRule rule_;
  double cutoff_;
};

}  // namespace branchflow
