#include "branchflow/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <unsupported/Eigen/KroneckerProduct>

#include "branchflow/errors.hpp"
#include "branchflow/random.hpp"

namespace branchflow {

namespace {

constexpr double kProjectorTolerance = 1e-10;
constexpr double kScheduleTolerance = 1e-12;

std::vector<std::string> default_labels(std::size_t n) {
  std::vector<std::string> labels;
  labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) labels.push_back(std::to_string(i));
  return labels;
}

CMatrix random_unitary(std::size_t dim, CounterRng& rng) {
  const auto n = static_cast<Eigen::Index>(dim);
  CMatrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = Complex(rng.normal(), rng.normal());
  Eigen::HouseholderQR<CMatrix> qr(a);
  CMatrix q = qr.householderQ() * CMatrix::Identity(n, n);
  // Fix column phases with R's diagonal so the distribution does not depend on QR conventions.
  const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double mag = std::abs(r(j, j));
    if (mag > 0) q.col(j) *= r(j, j) / mag;
  }
  return q;
}

}  // namespace

ExperienceBasis::ExperienceBasis(CompositeSpace space, std::vector<StateVector> vectors)
    : space_(space), vectors_(std::move(vectors)) {
  if (vectors_.size() != space_.dim_c()) {
    std::ostringstream msg;
    msg << "experience basis incomplete: " << vectors_.size() << " vectors for dim_c = " << space_.dim_c();
    throw ValidationError(msg.str());
  }
  for (std::size_t i = 0; i < vectors_.size(); ++i) {
    if (vectors_[i].dim() != space_.dim_c()) throw DimensionError("experience basis vector has wrong dimension");
    for (std::size_t j = 0; j <= i; ++j) {
      const Complex g = inner_product(vectors_[i], vectors_[j]);
      const double expected = (i == j) ? 1.0 : 0.0;
      if (std::abs(g - expected) > kNormTolerance) {
        std::ostringstream msg;
        msg << "experience basis not orthonormal at (" << i << ", " << j << ")";
        throw ValidationError(msg.str());
      }
    }
  }
}

ExperienceBasis ExperienceBasis::standard(const CompositeSpace& space) {
  std::vector<StateVector> vectors;
  for (std::size_t c = 0; c < space.dim_c(); ++c) vectors.push_back(StateVector::basis(space.dim_c(), c));
  return ExperienceBasis(space, std::move(vectors));
}

ProjectorFamily::ProjectorFamily(std::vector<HermitianOperator> projectors, std::vector<std::string> labels)
    : projectors_(std::move(projectors)), labels_(std::move(labels)) {
  if (projectors_.empty()) throw ValidationError("projector family is empty");
  if (labels_.empty()) labels_ = default_labels(projectors_.size());
  if (labels_.size() != projectors_.size()) throw ValidationError("projector family: label count mismatch");
  const auto n = static_cast<Eigen::Index>(projectors_.front().dim());
  CMatrix sum = CMatrix::Zero(n, n);
  for (std::size_t m = 0; m < projectors_.size(); ++m) {
    const CMatrix& p = projectors_[m].matrix();
    if (p.rows() != n) throw DimensionError("projector family: dimension mismatch");
    if (max_abs_diff(p * p, p) > kProjectorTolerance)
      throw ValidationError("projector " + labels_[m] + " not idempotent");
    for (std::size_t k = 0; k < m; ++k) {
      const CMatrix cross = p * projectors_[k].matrix();
      if (cross.cwiseAbs().maxCoeff() > kProjectorTolerance)
        throw ValidationError("projectors " + labels_[k] + " and " + labels_[m] + " not orthogonal");
    }
    sum += p;
  }
  if (max_abs_diff(sum, CMatrix::Identity(n, n)) > kProjectorTolerance)
    throw ValidationError("projector family incomplete (sum != identity)");
}

ProjectorFamily projectors_from_basis(const ExperienceBasis& basis, std::vector<std::string> labels) {
  const CompositeSpace& space = basis.space();
  const auto dr = static_cast<Eigen::Index>(space.dim_r());
  const CMatrix id_r = CMatrix::Identity(dr, dr);
  std::vector<HermitianOperator> projectors;
  projectors.reserve(basis.size());
  for (const StateVector& phi : basis.vectors()) {
    const CMatrix outer = phi.amplitudes() * phi.amplitudes().adjoint();
    CMatrix p = Eigen::kroneckerProduct(outer, id_r);
    projectors.emplace_back(std::move(p));
  }
  return ProjectorFamily(std::move(projectors), std::move(labels));
}

std::size_t Model::segment_at(double t) const {
  for (std::size_t s = 0; s < schedule.size(); ++s) {
    if (t < schedule[s].t_end) return s;
  }
  return schedule.size() - 1;
}

void validate(Model& model) {
  const std::size_t dim = model.space.dim();
  if (!(model.hbar > 0.0) || !std::isfinite(model.hbar)) throw ValidationError("hbar must be positive");
  if (!(model.t_max > 0.0) || !std::isfinite(model.t_max)) throw ValidationError("t_max must be positive");
  if (model.schedule.empty()) throw ValidationError("hamiltonian schedule is empty");
  double expected_start = 0.0;
  for (std::size_t s = 0; s < model.schedule.size(); ++s) {
    const auto& seg = model.schedule[s];
    std::ostringstream where;
    where << "hamiltonian segment " << s;
    if (seg.hamiltonian.dim() != dim) throw DimensionError(where.str() + ": dimension does not match dim_c * dim_r");
    if (std::abs(seg.t_start - expected_start) > kScheduleTolerance)
      throw ValidationError(where.str() + ": schedule not contiguous from 0");
    if (!(seg.t_end > seg.t_start)) throw ValidationError(where.str() + ": empty or reversed interval");
    expected_start = seg.t_end;
  }
  if (std::abs(expected_start - model.t_max) > kScheduleTolerance)
    throw ValidationError("hamiltonian schedule does not end at t_max");
  if (model.initial_state.dim() != dim) throw DimensionError("initial state dimension does not match dim_c * dim_r");
  model.initial_state.require_normalized("initial state");
  if (!(model.basis.space() == model.space)) throw DimensionError("experience basis space does not match model space");
  if (model.initial_branch && *model.initial_branch >= model.basis.size())
    throw ValidationError("initial branch index out of range");
  if (model.labels.empty()) model.labels = default_labels(model.basis.size());
  if (model.labels.size() != model.basis.size()) throw ValidationError("label count does not match dim_c");
}

Model built_in_rabi(double omega, double hbar) {
  if (!(omega > 0.0)) throw ValidationError("rabi: omega must be positive");
  const CompositeSpace space(2, 1);
  CMatrix sx(2, 2);
  sx << 0.0, 1.0, 1.0, 0.0;
  const double t_max = 2.0 * std::numbers::pi / omega;
  Model m{
      .name = "rabi",
      .space = space,
      .schedule = {{0.0, t_max, HermitianOperator(sx * (hbar * omega))}},
      .initial_state = StateVector::basis(2, 0),
      .basis = ExperienceBasis::standard(space),
      .initial_branch = std::nullopt,
      .t_max = t_max,
      .hbar = hbar,
      .labels = {"0", "1"},
  };
  validate(m);
  return m;
}

Model built_in_measurement(const std::vector<Complex>& amplitudes, double coupling) {
  const std::size_t n = amplitudes.size();
  if (n < 2) throw ValidationError("measurement: need at least two outcomes");
  if (!(coupling > 0.0)) throw ValidationError("measurement: coupling must be positive");
  CVector c(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) c(static_cast<Eigen::Index>(i)) = amplitudes[i];
  const StateVector system(c);
  system.require_normalized("measurement amplitudes");

  const CompositeSpace space(n + 1, n);
  const auto dim = static_cast<Eigen::Index>(space.dim());
  CMatrix h = CMatrix::Zero(dim, dim);
  // g * sum_n (|ready><saw n| + |saw n><ready|) (x) |n><n|
  for (std::size_t k = 0; k < n; ++k) {
    const auto ready = static_cast<Eigen::Index>(space.index(0, k));
    const auto saw = static_cast<Eigen::Index>(space.index(k + 1, k));
    h(ready, saw) = coupling;
    h(saw, ready) = coupling;
  }
  std::vector<std::string> labels{"ready"};
  for (std::size_t k = 1; k <= n; ++k) labels.push_back("saw " + std::to_string(k));

  const double tau = std::numbers::pi / (2.0 * coupling);
  Model m{
      .name = "measurement",
      .space = space,
      .schedule = {{0.0, tau, HermitianOperator(std::move(h))}},
      .initial_state = tensor_state(StateVector::basis(n + 1, 0), system, space),
      .basis = ExperienceBasis::standard(space),
      .initial_branch = std::nullopt,
      .t_max = tau,
      .hbar = 1.0,
      .labels = std::move(labels),
  };
  validate(m);
  return m;
}

Model built_in_diagonal() {
  const CompositeSpace space(3, 1);
  CMatrix h = CMatrix::Zero(3, 3);
  h(1, 1) = 1.0;
  h(2, 2) = 2.0;
  const double s = 1.0 / std::sqrt(2.0);
  Model m{
      .name = "diagonal",
      .space = space,
      .schedule = {{0.0, 2.0 * std::numbers::pi, HermitianOperator(std::move(h))}},
      .initial_state = StateVector{s, s, 0.0},
      .basis = ExperienceBasis::standard(space),
      .initial_branch = std::nullopt,
      .t_max = 2.0 * std::numbers::pi,
      .hbar = 1.0,
      .labels = {"0", "1", "2"},
  };
  validate(m);
  return m;
}

Model random_model(std::uint64_t seed, std::size_t max_dim, double t_max) {
  if (max_dim < 2) throw ValidationError("random_model: max_dim must be >= 2");
  CounterRng rng(seed, 0x5eed);
  const std::size_t c_choices = std::min<std::size_t>(3, max_dim - 1);  // dim_c in 2 .. min(4, max_dim)
  const std::size_t dim_c = 2 + static_cast<std::size_t>(rng.next_u64() % c_choices);
  const std::size_t dim_r = std::max<std::size_t>(1, max_dim / dim_c);
  const CompositeSpace space(dim_c, dim_r);
  const auto dim = static_cast<Eigen::Index>(space.dim());

  CMatrix a(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) a(i, j) = Complex(rng.normal(), rng.normal());
  CMatrix h = 0.5 * (a + a.adjoint());
  h = 0.5 * (h + h.adjoint()).eval();

  const CMatrix u = random_unitary(dim_c, rng);
  std::vector<StateVector> basis;
  for (std::size_t c = 0; c < dim_c; ++c) basis.emplace_back(CVector(u.col(static_cast<Eigen::Index>(c))));

  CVector psi(dim);
  for (Eigen::Index k = 0; k < dim; ++k) psi(k) = Complex(rng.normal(), rng.normal());
  psi.normalize();

  Model m{
      .name = "random-" + std::to_string(seed),
      .space = space,
      .schedule = {{0.0, t_max, HermitianOperator(std::move(h))}},
      .initial_state = StateVector(std::move(psi)),
      .basis = ExperienceBasis(space, std::move(basis)),
      .initial_branch = std::nullopt,
      .t_max = t_max,
      .hbar = 1.0,
      .labels = {},
  };
  validate(m);
  return m;
}

}  // namespace branchflow
