#pragma once

// Test-only generators and independent oracles. Nothing here calls the library's
// eigendecomposition, branch decomposition or rate code.

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "branchflow/hilbert.hpp"
#include "branchflow/random.hpp"

namespace branchflow::testing {

inline CVector random_vector(CounterRng& rng, std::size_t dim) {
  CVector v(static_cast<Eigen::Index>(dim));
  for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = Complex(rng.normal(), rng.normal());
  return v;
}

inline StateVector random_state(CounterRng& rng, std::size_t dim) {
  return StateVector(random_vector(rng, dim).normalized());
}

inline HermitianOperator random_hermitian(CounterRng& rng, std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  CMatrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = Complex(rng.normal(), rng.normal());
  CMatrix h = 0.5 * (a + a.adjoint());
  return HermitianOperator(0.5 * (h + h.adjoint()));
}

/// Orthonormal columns by modified Gram-Schmidt on random vectors.
inline CMatrix random_orthonormal(CounterRng& rng, std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  CMatrix q(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    CVector v = random_vector(rng, dim);
    for (Eigen::Index k = 0; k < j; ++k) v -= q.col(k).dot(v) * q.col(k);
    q.col(j) = v.normalized();
  }
  return q;
}

/// Sum_k conj(a_k) b_k by explicit loop.
inline Complex brute_inner(const CVector& a, const CVector& b) {
  Complex s = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) s += std::conj(a(k)) * b(k);
  return s;
}

/// exp(-i H dt / hbar) by Taylor series with scaling and squaring.
inline CMatrix taylor_propagator(const CMatrix& h, double dt, double hbar = 1.0) {
  const Eigen::Index n = h.rows();
  CMatrix a = h * Complex(0.0, -dt / hbar);
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  while (norm / std::pow(2.0, squarings) > 0.25) ++squarings;
  a /= std::pow(2.0, squarings);
  CMatrix term = CMatrix::Identity(n, n);
  CMatrix sum = term;
  for (int k = 1; k <= 30; ++k) {
    term = term * a / static_cast<double>(k);
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

/// |Psi(t)> for a single-segment model by the Taylor propagator.
inline CVector taylor_state(const CMatrix& h, const CVector& psi0, double t, double hbar = 1.0) {
  return taylor_propagator(h, t, hbar) * psi0;
}

/// Branch weights with Pi_n = |phi_n><phi_n| (x) I built by explicit index loops.
inline std::vector<double> outer_product_weights(const CVector& psi, const CMatrix& basis_columns, std::size_t dim_r) {
  const Eigen::Index dc = basis_columns.rows();
  std::vector<double> w;
  for (Eigen::Index n = 0; n < basis_columns.cols(); ++n) {
    double total = 0.0;
    for (std::size_t r = 0; r < dim_r; ++r) {
      Complex amp = 0.0;
      for (Eigen::Index c = 0; c < dc; ++c)
        amp += std::conj(basis_columns(c, n)) * psi(c * static_cast<Eigen::Index>(dim_r) + static_cast<Eigen::Index>(r));
      total += std::norm(amp);
    }
    w.push_back(total);
  }
  return w;
}

inline double central_difference(auto&& f, double t, double h) { return (f(t + h) - f(t - h)) / (2.0 * h); }

}  // namespace branchflow::testing
