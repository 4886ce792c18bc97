#include "branchflow/evolution.hpp"

#include <bit>
#include <cmath>
#include <mutex>
#include <sstream>

#include "branchflow/errors.hpp"

namespace branchflow {

namespace {

constexpr double kTimeSlack = 1e-12;

void require_time_in_range(const Model& model, double t) {
  if (!(t >= -kTimeSlack && t <= model.t_max + kTimeSlack)) {
    std::ostringstream msg;
    msg << "time " << t << " outside [0, " << model.t_max << "]";
    throw ValidationError(msg.str());
  }
}

CVector phases(const Eigen::VectorXd& eigenvalues, double dt, double hbar) {
  CVector out(eigenvalues.size());
  for (Eigen::Index k = 0; k < eigenvalues.size(); ++k) out(k) = std::polar(1.0, -eigenvalues(k) * dt / hbar);
  return out;
}

}  // namespace

StateVector Propagator::apply(const StateVector& v) const {
  if (v.dim() != dim) throw DimensionError("propagator: dimension mismatch");
  return StateVector(matrix * v.amplitudes());
}

Spectrum diagonalize(const HermitianOperator& h) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h.matrix());
  if (solver.info() != Eigen::Success) throw NumericalError("eigendecomposition did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

Propagator propagator_for(const Spectrum& spectrum, double dt, double hbar) {
  if (!(dt >= 0.0)) throw ValidationError("propagator: dt must be >= 0");
  const CMatrix& v = spectrum.eigenvectors;
  CMatrix u = v * phases(spectrum.eigenvalues, dt, hbar).asDiagonal() * v.adjoint();
  return {static_cast<std::size_t>(u.rows()), std::move(u), 0.0, dt};
}

Propagator propagator_for(const HermitianOperator& h, double dt, double hbar) {
  if (!(dt >= 0.0)) throw ValidationError("propagator: dt must be >= 0");
  return propagator_for(diagonalize(h), dt, hbar);
}

PropagatorCache::PropagatorCache(std::vector<Spectrum> spectra, double hbar)
    : spectra_(std::move(spectra)), hbar_(hbar) {}

std::shared_ptr<const Propagator> PropagatorCache::get(std::size_t segment, double dt) const {
  if (segment >= spectra_.size()) throw ValidationError("propagator cache: segment out of range");
  const auto key = std::make_pair(segment, std::bit_cast<std::uint64_t>(dt));
  {
    std::shared_lock lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) return it->second;
  }
  std::unique_lock lock(mutex_);
  auto& slot = entries_[key];
  if (!slot) slot = std::make_shared<const Propagator>(propagator_for(spectra_[segment], dt, hbar_));
  return slot;
}

std::size_t PropagatorCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

Evolver::Evolver(std::shared_ptr<const Model> model) : model_(std::move(model)) {
  const Model& m = *model_;
  CVector psi = m.initial_state.amplitudes();
  for (std::size_t s = 0; s < m.schedule.size(); ++s) {
    const auto& seg = m.schedule[s];
    spectra_.push_back(diagonalize(seg.hamiltonian));
    starts_.emplace_back(psi);
    const CMatrix& v = spectra_.back().eigenvectors;
    CVector coeffs = v.adjoint() * psi;
    psi = v * phases(spectra_.back().eigenvalues, seg.t_end - seg.t_start, m.hbar).cwiseProduct(coeffs);
    start_coeffs_.push_back(std::move(coeffs));
  }
  cache_ = std::make_unique<PropagatorCache>(spectra_, m.hbar);
}

StateVector Evolver::state_at(double t) const {
  require_time_in_range(*model_, t);
  return state_at(t, model_->segment_at(t));
}

StateVector Evolver::state_at(double t, std::size_t segment) const {
  require_time_in_range(*model_, t);
  const auto& seg = model_->schedule.at(segment);
  const Spectrum& sp = spectra_[segment];
  return StateVector(sp.eigenvectors *
                     phases(sp.eigenvalues, t - seg.t_start, model_->hbar).cwiseProduct(start_coeffs_[segment]));
}

StateVector evolve(const Model& model, double t) {
  require_time_in_range(model, t);
  StateVector psi = model.initial_state;
  for (const auto& seg : model.schedule) {
    if (t <= seg.t_start) break;
    const double dt = std::min(t, seg.t_end) - seg.t_start;
    psi = propagator_for(seg.hamiltonian, dt, model.hbar).apply(psi);
  }
  return psi;
}

}  // namespace branchflow
