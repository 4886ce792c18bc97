#include <doctest.h>

#include <cmath>

#include "branchflow/errors.hpp"
#include "branchflow/hilbert.hpp"
#include "support.hpp"

using namespace branchflow;
using branchflow::testing::brute_inner;
using branchflow::testing::random_hermitian;
using branchflow::testing::random_state;

namespace {
const Complex I{0.0, 1.0};
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);
}  // namespace

TEST_CASE("inner_product examples") {
  CHECK(std::abs(inner_product({1.0, 0.0}, {1.0, 0.0}) - 1.0) == 0.0);
  CHECK(std::abs(inner_product({1.0, 0.0}, {0.0, 1.0})) == 0.0);

  const StateVector plus_i{kInvSqrt2, kInvSqrt2 * I};
  const StateVector minus_i{kInvSqrt2, -kInvSqrt2 * I};
  const Complex oracle = brute_inner(plus_i.amplitudes(), minus_i.amplitudes());
  CHECK(std::abs(oracle) < 1e-15);
  CHECK(std::abs(inner_product(plus_i, minus_i) - oracle) < 1e-15);

  SUBCASE("conjugate-linear in the first argument") {
    const StateVector a{I, 0.0};
    const StateVector b{1.0, 0.0};
    CHECK(std::abs(inner_product(a, b) - (-I)) < 1e-15);
  }
  SUBCASE("dimension mismatch") { CHECK_THROWS_AS(inner_product({1.0}, {1.0, 0.0}), DimensionError); }
}

TEST_CASE("apply examples") {
  const StateVector v{0.3, Complex(0.1, 0.2)};
  const auto id = HermitianOperator::identity(2);
  CHECK((apply(id, v).amplitudes() - v.amplitudes()).norm() == 0.0);

  CMatrix sx(2, 2);
  sx << 0.0, 1.0, 1.0, 0.0;
  const StateVector flipped = apply(HermitianOperator(sx), {1.0, 0.0});
  CHECK(flipped[0] == Complex(0.0));
  CHECK(flipped[1] == Complex(1.0));

  CounterRng rng(11, 0);
  const HermitianOperator h = random_hermitian(rng, 4);
  const StateVector col2 = apply(h, StateVector::basis(4, 2));
  for (std::size_t j = 0; j < 4; ++j) CHECK(col2[j] == h(j, 2));

  CHECK_THROWS_AS(apply(id, StateVector{1.0, 0.0, 0.0}), DimensionError);
}

TEST_CASE("hermitian operator validation") {
  CMatrix m(2, 2);
  m << 0.0, 1.0, 0.0, 0.0;
  CHECK_THROWS_WITH_AS(HermitianOperator{m}, "hamiltonian not Hermitian", ValidationError);
  m(1, 0) = 1.0 + 5e-11;  // inside tolerance
  CHECK_NOTHROW(HermitianOperator{m});
  CHECK_THROWS_AS(HermitianOperator(CMatrix(2, 3)), DimensionError);
}

TEST_CASE("state vector normalization") {
  CHECK(StateVector{0.6, 0.8}.is_normalized());
  CHECK_FALSE(StateVector{0.6, 0.81}.is_normalized());
  CHECK_THROWS_AS(StateVector({1.0, 1.0}).require_normalized("psi"), ValidationError);
  CHECK_THROWS_AS(StateVector(CVector(0)), DimensionError);
}

TEST_CASE("tensor_state examples") {
  const CompositeSpace space(2, 2);
  const StateVector a = tensor_state({1.0, 0.0}, {1.0, 0.0}, space);
  const StateVector b = tensor_state({0.0, 1.0}, {0.0, 1.0}, space);
  const StateVector c = tensor_state({kInvSqrt2, kInvSqrt2}, {1.0, 0.0}, space);
  const CVector ea = (CVector(4) << 1.0, 0.0, 0.0, 0.0).finished();
  const CVector eb = (CVector(4) << 0.0, 0.0, 0.0, 1.0).finished();
  const CVector ec = (CVector(4) << kInvSqrt2, 0.0, kInvSqrt2, 0.0).finished();
  CHECK((a.amplitudes() - ea).norm() == 0.0);
  CHECK((b.amplitudes() - eb).norm() == 0.0);
  CHECK((c.amplitudes() - ec).norm() < 1e-16);
  CHECK_THROWS_AS(tensor_state({1.0}, {1.0, 0.0}, space), DimensionError);
}

TEST_CASE("partial_inner examples") {
  const CompositeSpace space(2, 3);
  const StateVector b{0.5, Complex(0.0, 0.5), std::sqrt(0.5)};
  const StateVector psi = tensor_state(StateVector::basis(2, 0), b, space);

  CHECK((partial_inner(StateVector::basis(2, 0), psi, space).amplitudes() - b.amplitudes()).norm() < 1e-15);
  CHECK(partial_inner(StateVector::basis(2, 1), psi, space).norm_squared() == 0.0);

  const StateVector u{1.0, 0.0, 0.0};
  const StateVector v{0.0, I, 0.0};
  const CVector entangled = kInvSqrt2 * (tensor_state(StateVector::basis(2, 0), u, space).amplitudes() +
                                         tensor_state(StateVector::basis(2, 1), v, space).amplitudes());
  const StateVector got = partial_inner({kInvSqrt2, kInvSqrt2}, StateVector(entangled), space);
  // componentwise: sum_c conj(phi_c) Psi_{c*3+r}
  for (std::size_t r = 0; r < 3; ++r) {
    Complex oracle = 0.0;
    for (std::size_t c = 0; c < 2; ++c) oracle += kInvSqrt2 * entangled(static_cast<Eigen::Index>(c * 3 + r));
    CHECK(std::abs(got[r] - oracle) < 1e-15);
    CHECK(std::abs(got[r] - 0.5 * (u[r] + v[r])) < 1e-15);
  }
  CHECK_THROWS_AS(partial_inner({1.0, 0.0}, StateVector{1.0, 0.0}, space), DimensionError);
}

TEST_CASE("hilbert properties on random inputs") {
  CounterRng rng(2024, 1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t dc = 1 + rng.next_u64() % 4;
    const std::size_t dr = 1 + rng.next_u64() % 4;
    const CompositeSpace space(dc, dr);
    const StateVector a = random_state(rng, space.dim());
    const StateVector b = random_state(rng, space.dim());
    const HermitianOperator h = random_hermitian(rng, space.dim());

    CHECK(std::abs(inner_product(a, b)) <= 1.0 + 1e-12);
    const Complex lhs = inner_product(a, apply(h, b));
    const Complex rhs = std::conj(inner_product(b, apply(h, a)));
    CHECK(std::abs(lhs - rhs) < 1e-12);

    double total = 0.0;
    for (std::size_t c = 0; c < dc; ++c) total += partial_inner(StateVector::basis(dc, c), a, space).norm_squared();
    CHECK(std::abs(total - a.norm_squared()) < 1e-10);

    const StateVector phi = random_state(rng, dc);
    const StateVector rest = random_state(rng, dr);
    const StateVector recovered = partial_inner(phi, tensor_state(phi, rest, space), space);
    CHECK((recovered.amplitudes() - rest.amplitudes()).cwiseAbs().maxCoeff() < 1e-12);
  }
}
