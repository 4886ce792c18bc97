#include <doctest.h>

#include <cmath>
#include <numbers>

#include "branchflow/errors.hpp"
#include "branchflow/evolution.hpp"
#include "branchflow/rates.hpp"
#include "support.hpp"

using namespace branchflow;
using namespace branchflow::testing;

namespace {

constexpr double kPi = std::numbers::pi;

RMatrix projector_current(const Model& m, double t) {
  const BranchDecomposition d = decompose_projectors(evolve(m, t), projectors_from_basis(m.basis), t);
  return current_matrix(d, m.hamiltonian_at(t), m.hbar);
}

RMatrix experience_current(const Model& m, double t) {
  const BranchDecomposition d = decompose_basis(evolve(m, t), m.basis, t);
  return current_matrix_experience(d, m.basis, m.hamiltonian_at(t), m.space, m.hbar);
}

double weight(const Model& m, std::size_t n, double t) { return born_weights(evolve(m, t), m.basis)[n]; }

double max_abs(const RMatrix& a) { return a.size() ? a.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

TEST_CASE("current_matrix examples") {
  SUBCASE("H commuting with every projector gives no current") {
    const Model m = built_in_diagonal();
    for (double t : {0.0, 1.0, 4.0}) {
      CHECK(max_abs(projector_current(m, t)) < 1e-15);
      CHECK(max_abs(experience_current(m, t)) < 1e-15);
    }
  }
  SUBCASE("rabi: J_10 = omega sin(2 omega t)") {
    for (double omega : {1.0, 2.5}) {
      const Model m = built_in_rabi(omega);
      for (double t : {0.1, 0.5, 1.2, 2.0, 3.9}) {
        if (t >= m.t_max) continue;
        const RMatrix j = projector_current(m, t);
        // <psi_1|H|psi_0> = (i sin wt)(w)(cos wt), J_10 = 2 w sin cos
        const double hand = 2.0 * omega * std::sin(omega * t) * std::cos(omega * t);
        CHECK(std::abs(j(1, 0) - omega * std::sin(2 * omega * t)) < 1e-12);
        CHECK(std::abs(j(1, 0) - hand) < 1e-12);
        CHECK(std::abs(j(0, 1) + j(1, 0)) < 1e-12);
        const double fd = central_difference([&](double s) { return weight(m, 1, s); }, t, 1e-6);
        CHECK(std::abs(j(1, 0) - fd) < 1e-6);
      }
    }
  }
  SUBCASE("random dimension-6 models: row sums equal dw_m/dt") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const Model m = random_model(seed, 6, 3.0);
      for (double t : {0.4, 1.5, 2.6}) {
        const RMatrix j = projector_current(m, t);
        for (std::size_t b = 0; b < m.branch_count(); ++b) {
          const double fd = central_difference([&](double s) { return weight(m, b, s); }, t, 1e-6);
          CHECK(std::abs(j.row(static_cast<Eigen::Index>(b)).sum() - fd) < 1e-6);
        }
      }
    }
  }
  SUBCASE("wrong decomposition form rejected") {
    const Model m = built_in_rabi(1.0);
    const BranchDecomposition d = decompose_basis(m.initial_state, m.basis);
    CHECK_THROWS_AS(current_matrix(d, m.schedule[0].hamiltonian), ValidationError);
  }
}

TEST_CASE("current_matrix_experience examples") {
  SUBCASE("agrees with the projector form on random models") {
    for (std::uint64_t seed = 100; seed < 120; ++seed) {
      const Model m = random_model(seed, 8, 5.0);
      for (double t : {0.0, 1.7, 4.2}) CHECK(max_abs(experience_current(m, t) - projector_current(m, t)) <= 1e-12);
    }
  }
  SUBCASE("dim_R = 1 reduces to the current on S_C alone") {
    CounterRng rng(4, 4);
    const CompositeSpace space(4, 1);
    const CMatrix q = random_orthonormal(rng, 4);
    std::vector<StateVector> vecs;
    for (Eigen::Index c = 0; c < 4; ++c) vecs.emplace_back(CVector(q.col(c)));
    const ExperienceBasis basis(space, vecs);
    const HermitianOperator h = random_hermitian(rng, 4);
    const StateVector psi = random_state(rng, 4);
    const RMatrix j = current_matrix_experience(decompose_basis(psi, basis), basis, h, space);
    for (Eigen::Index m = 0; m < 4; ++m)
      for (Eigen::Index n = 0; n < 4; ++n) {
        // psi_n is the scalar <phi_n|Psi>
        const Complex am = brute_inner(q.col(m), psi.amplitudes());
        const Complex an = brute_inner(q.col(n), psi.amplitudes());
        const Complex hmn = brute_inner(q.col(m), h.matrix() * q.col(n));
        CHECK(std::abs(j(m, n) - 2.0 * (std::conj(am) * an * hmn).imag()) < 1e-12);
      }
  }
  SUBCASE("measurement mid-pulse with c = (1, 0)") {
    for (double g : {1.0, 1.5}) {
      const Model m = built_in_measurement({1.0, 0.0}, g);
      const double t = m.t_max / 2;
      const RMatrix j = experience_current(m, t);
      CHECK(std::abs(j(1, 0) - g * std::sin(2 * g * t)) < 1e-12);
      CHECK(j(1, 0) > 0.0);
      CHECK(std::abs(j(2, 0)) < 1e-15);
    }
  }
  SUBCASE("mismatches rejected") {
    const Model m = built_in_rabi(1.0);
    const BranchDecomposition d = decompose_basis(m.initial_state, m.basis);
    CHECK_THROWS_AS(current_matrix_experience(d, m.basis, HermitianOperator::identity(3), m.space), DimensionError);
  }
}

TEST_CASE("rate_matrix examples") {
  const std::vector<double> w{0.5, 0.5};
  CHECK(max_abs(rate_matrix(RMatrix::Zero(2, 2), w)) == 0.0);

  const Model m = built_in_rabi(1.0);
  for (double t : {0.1, 0.6, 1.0, 1.4, 1.55}) {
    const RMatrix j = projector_current(m, t);
    const RMatrix rt = rate_matrix(j, born_weights(evolve(m, t), m.basis));
    CHECK(rt(1, 0) == doctest::Approx(2.0 * std::tan(t)).epsilon(1e-10));
    CHECK(rt(1, 0) == doctest::Approx(std::sin(2 * t) / std::pow(std::cos(t), 2)).epsilon(1e-10));
    CHECK(rt(0, 1) == 0.0);
  }
  for (double t : {1.7, 2.2, 3.0}) {
    const RMatrix j = projector_current(m, t);
    const RMatrix rt = rate_matrix(j, born_weights(evolve(m, t), m.basis));
    CHECK(rt(0, 1) == doctest::Approx(-std::sin(2 * t) / std::pow(std::sin(t), 2)).epsilon(1e-10));
    CHECK(rt(1, 0) == 0.0);
  }

  SUBCASE("unoccupied source branch has no outgoing rate") {
    RMatrix j(2, 2);
    j << 0.0, 0.3, -0.3, 0.0;
    const std::vector<double> tiny{0.999999999999, 1e-13};
    const RMatrix rt = rate_matrix(j, tiny);
    CHECK(rt(0, 1) == 0.0);
    CHECK(rt(1, 0) == 0.0);
    const std::vector<double> above{0.9, 0.1};
    CHECK(rate_matrix(j, above)(0, 1) == doctest::Approx(3.0));
  }
  SUBCASE("errors") {
    const std::vector<double> negative{1.1, -0.1};
    CHECK_THROWS_AS(rate_matrix(RMatrix::Zero(2, 2), negative), ValidationError);
    const std::vector<double> three{0.2, 0.3, 0.5};
    CHECK_THROWS_AS(rate_matrix(RMatrix::Zero(2, 2), three), DimensionError);
  }
  SUBCASE("unrectified keeps the sign") {
    RMatrix j(2, 2);
    j << 0.0, 0.3, -0.3, 0.0;
    const RMatrix raw = rate_matrix_unrectified(j, w);
    CHECK(raw(0, 1) == doctest::Approx(0.6));
    CHECK(raw(1, 0) == doctest::Approx(-0.6));
  }
}

TEST_CASE("rate invariants on bundled and random models") {
  std::vector<Model> models{built_in_rabi(1.0), built_in_measurement({0.6, 0.8}, 1.0), built_in_diagonal()};
  for (std::uint64_t seed = 0; seed < 20; ++seed) models.push_back(random_model(seed, 8, 10.0));
  for (const Model& m : models) {
    CAPTURE(m.name);
    const RateField field(std::make_shared<const Model>(m));
    for (int i = 0; i <= 20; ++i) {
      const double t = m.t_max * i / 20.0;
      const RatePair rp = field.at(t);
      const double scale = std::max(max_abs(rp.current), 1e-300);
      CHECK(max_abs(rp.current + rp.current.transpose()) <= 1e-10 * scale);
      CHECK(max_abs(experience_current(m, t) - projector_current(m, t)) <= 1e-12);
      for (std::size_t a = 0; a < rp.size(); ++a) {
        const auto ai = static_cast<Eigen::Index>(a);
        CHECK(rp.current(ai, ai) == 0.0);
        CHECK(rp.rates(ai, ai) == 0.0);
        for (std::size_t b = 0; b < rp.size(); ++b) {
          const auto bi = static_cast<Eigen::Index>(b);
          CHECK(rp.rates(ai, bi) >= 0.0);
          const double forward = rp.rates(ai, bi) * rp.weights[b];
          const double backward = rp.rates(bi, ai) * rp.weights[a];
          CHECK(std::min(forward, backward) <= 1e-10 * scale);
          if (a != b && rp.weights[a] > kDefaultWeightCutoff && rp.weights[b] > kDefaultWeightCutoff)
            CHECK(std::abs(forward - backward - rp.current(ai, bi)) <= 1e-12 * std::max(1.0, scale));
        }
      }
    }
  }
}

TEST_CASE("scaling H scales J and T") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Model m = random_model(seed, 6, 2.0);
    const double lambda = 3.25;
    const StateVector psi = evolve(m, 0.8);
    const BranchDecomposition d = decompose_basis(psi, m.basis);
    const HermitianOperator& h = m.schedule[0].hamiltonian;
    const RMatrix j1 = current_matrix_experience(d, m.basis, h, m.space);
    const RMatrix j2 = current_matrix_experience(d, m.basis, h.scaled(lambda), m.space);
    CHECK(max_abs(j2 - lambda * j1) <= 1e-13 * max_abs(j2));
    const RMatrix t1 = rate_matrix(j1, d.weights);
    const RMatrix t2 = rate_matrix(j2, d.weights);
    CHECK(max_abs(t2 - lambda * t1) <= 1e-13 * max_abs(t2));
  }
}

TEST_CASE("RateField uses the requested segment at a boundary") {
  CounterRng rng(31, 0);
  Model m = built_in_rabi(1.0);
  m.schedule = {{0.0, 1.0, m.schedule[0].hamiltonian}, {1.0, m.t_max, random_hermitian(rng, 2)}};
  validate(m);
  const RateField field(std::make_shared<const Model>(m));
  CHECK(std::abs(field.at(1.0, 0).current(1, 0) - std::sin(2.0)) < 1e-12);
  CHECK(std::abs(field.at(1.0, 1).current(1, 0) - std::sin(2.0)) > 1e-6);
}
