#pragma once

// Dense complex linear algebra over finite-dimensional Hilbert spaces.
//
// Composite spaces S = S_C (x) S_R use the row-major index convention
//   k = c * dim_R + r
// everywhere in the library.

#include <complex>
#include <cstddef>
#include <initializer_list>

#include <Eigen/Dense>

namespace branchflow {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kNormTolerance = 1e-10;
inline constexpr double kHermitianTolerance = 1e-10;

/// Complex amplitude vector. Immutable after construction.
class StateVector {
 public:
  explicit StateVector(CVector amplitudes);
  StateVector(std::initializer_list<Complex> amplitudes);

  static StateVector zero(std::size_t dim);
  static StateVector basis(std::size_t dim, std::size_t index);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(amps_.size()); }
  const CVector& amplitudes() const noexcept { return amps_; }
  Complex operator[](std::size_t k) const { return amps_(static_cast<Eigen::Index>(k)); }

  double norm_squared() const { return amps_.squaredNorm(); }
  bool is_normalized(double tol = kNormTolerance) const;

  /// Throws ValidationError unless |<v|v> - 1| <= tol.
  const StateVector& require_normalized(const char* what, double tol = kNormTolerance) const;

  StateVector normalized() const;
  StateVector scaled(Complex factor) const { return StateVector(amps_ * factor); }

 private:
  CVector amps_;
};

/// Dense Hermitian matrix, checked at construction to kHermitianTolerance (max-norm).
class HermitianOperator {
 public:
  explicit HermitianOperator(CMatrix entries);

  static HermitianOperator zero(std::size_t dim);
  static HermitianOperator identity(std::size_t dim);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
  const CMatrix& matrix() const noexcept { return entries_; }
  Complex operator()(std::size_t row, std::size_t col) const {
    return entries_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
  }

  HermitianOperator scaled(double factor) const { return HermitianOperator(entries_ * factor); }

 private:
  CMatrix entries_;
};

/// S = S_C (x) S_R with dim = dim_c * dim_r.
class CompositeSpace {
 public:
  CompositeSpace(std::size_t dim_c, std::size_t dim_r);

  std::size_t dim_c() const noexcept { return dim_c_; }
  std::size_t dim_r() const noexcept { return dim_r_; }
  std::size_t dim() const noexcept { return dim_c_ * dim_r_; }
  std::size_t index(std::size_t c, std::size_t r) const noexcept { return c * dim_r_ + r; }

  friend bool operator==(const CompositeSpace&, const CompositeSpace&) = default;

 private:
  std::size_t dim_c_;
  std::size_t dim_r_;
};

/// <a|b>, conjugate-linear in a.
Complex inner_product(const StateVector& a, const StateVector& b);

StateVector apply(const HermitianOperator& op, const StateVector& v);

/// a (x) b with a over S_C and b over S_R.
StateVector tensor_state(const StateVector& a, const StateVector& b, const CompositeSpace& space);

/// (<phi| (x) I)|psi>, a vector over S_R.
StateVector partial_inner(const StateVector& phi, const StateVector& psi, const CompositeSpace& space);

/// Max-norm of a - b; dims must agree.
double max_abs_diff(const CMatrix& a, const CMatrix& b);

}  // namespace branchflow
