#include "branchflow/hilbert.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "branchflow/errors.hpp"

namespace branchflow {

namespace {

void require_same_dim(std::size_t a, std::size_t b, const char* op) {
  if (a != b) {
    std::ostringstream msg;
    msg << op << ": dimension mismatch (" << a << " vs " << b << ")";
    throw DimensionError(msg.str());
  }
}

}  // namespace

StateVector::StateVector(CVector amplitudes) : amps_(std::move(amplitudes)) {
  if (amps_.size() == 0) throw DimensionError("state vector must have positive dimension");
  for (Eigen::Index k = 0; k < amps_.size(); ++k) {
    if (!std::isfinite(amps_(k).real()) || !std::isfinite(amps_(k).imag()))
      throw ValidationError("state vector has non-finite amplitude");
  }
}

StateVector::StateVector(std::initializer_list<Complex> amplitudes)
    : StateVector(Eigen::Map<const CVector>(amplitudes.begin(),
                                            static_cast<Eigen::Index>(amplitudes.size()))) {}

StateVector StateVector::zero(std::size_t dim) {
  return StateVector(CVector::Zero(static_cast<Eigen::Index>(dim)));
}

StateVector StateVector::basis(std::size_t dim, std::size_t index) {
  if (index >= dim) throw DimensionError("basis index out of range");
  CVector v = CVector::Zero(static_cast<Eigen::Index>(dim));
  v(static_cast<Eigen::Index>(index)) = 1.0;
  return StateVector(std::move(v));
}

bool StateVector::is_normalized(double tol) const { return std::abs(norm_squared() - 1.0) <= tol; }

const StateVector& StateVector::require_normalized(const char* what, double tol) const {
  if (!is_normalized(tol)) {
    std::ostringstream msg;
    msg << what << " not normalized (<v|v> = " << norm_squared() << ")";
    throw ValidationError(msg.str());
  }
  return *this;
}

StateVector StateVector::normalized() const {
  const double n = amps_.norm();
  if (n == 0.0) throw ValidationError("cannot normalize the zero vector");
  return StateVector(amps_ / n);
}

HermitianOperator::HermitianOperator(CMatrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() == 0 || entries_.rows() != entries_.cols())
    throw DimensionError("hamiltonian must be a non-empty square matrix");
  if (!entries_.allFinite()) throw ValidationError("hamiltonian has non-finite entries");
  if (max_abs_diff(entries_, entries_.adjoint()) > kHermitianTolerance)
    throw ValidationError("hamiltonian not Hermitian");
}

HermitianOperator HermitianOperator::zero(std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  return HermitianOperator(CMatrix::Zero(n, n));
}

HermitianOperator HermitianOperator::identity(std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  return HermitianOperator(CMatrix::Identity(n, n));
}

CompositeSpace::CompositeSpace(std::size_t dim_c, std::size_t dim_r) : dim_c_(dim_c), dim_r_(dim_r) {
  if (dim_c == 0 || dim_r == 0) throw ValidationError("composite space dimensions must be >= 1");
}

Complex inner_product(const StateVector& a, const StateVector& b) {
  require_same_dim(a.dim(), b.dim(), "inner_product");
  return a.amplitudes().dot(b.amplitudes());  // Eigen conjugates the left operand
}

StateVector apply(const HermitianOperator& op, const StateVector& v) {
  require_same_dim(op.dim(), v.dim(), "apply");
  return StateVector(op.matrix() * v.amplitudes());
}

StateVector tensor_state(const StateVector& a, const StateVector& b, const CompositeSpace& space) {
  require_same_dim(a.dim(), space.dim_c(), "tensor_state (S_C factor)");
  require_same_dim(b.dim(), space.dim_r(), "tensor_state (S_R factor)");
  CVector out(static_cast<Eigen::Index>(space.dim()));
  for (std::size_t c = 0; c < space.dim_c(); ++c)
    for (std::size_t r = 0; r < space.dim_r(); ++r)
      out(static_cast<Eigen::Index>(space.index(c, r))) = a[c] * b[r];
  return StateVector(std::move(out));
}

StateVector partial_inner(const StateVector& phi, const StateVector& psi, const CompositeSpace& space) {
  require_same_dim(phi.dim(), space.dim_c(), "partial_inner (S_C factor)");
  require_same_dim(psi.dim(), space.dim(), "partial_inner (full space)");
  // Row-major layout: psi viewed as a dim_c x dim_r matrix, result = M^T conj(phi).
  const auto dc = static_cast<Eigen::Index>(space.dim_c());
  const auto dr = static_cast<Eigen::Index>(space.dim_r());
  Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> grid(
      psi.amplitudes().data(), dc, dr);
  CVector out = grid.transpose() * phi.amplitudes().conjugate();
  return StateVector(std::move(out));
}

double max_abs_diff(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("max_abs_diff: shape mismatch");
  if (a.size() == 0) return 0.0;
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace branchflow
