#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "zenolock/hilbert.hpp"

using namespace zenolock;

namespace {

constexpr int G = 0;
constexpr int E = 1;

OperatorMatrix random_hermitian(const BasisPtr& basis, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    const auto d = static_cast<Eigen::Index>(basis->dimension());
    CMatrix m(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) m(i, j) = {gauss(rng), gauss(rng)};
    CMatrix h = 0.5 * (m + m.adjoint());
    return {basis, h};
}

StateVector random_state(const BasisPtr& basis, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    CVector v(static_cast<Eigen::Index>(basis->dimension()));
    for (auto& x : v) x = {gauss(rng), gauss(rng)};
    return StateVector(basis, v).normalized();
}

// Resonant Jaynes-Cummings: one two-level atom, one mode, coupling Omega/2.
OperatorMatrix jaynes_cummings(const BasisPtr& basis, double omega) {
    const auto a = annihilation(basis, 0);
    const auto sp = atomic_projector(basis, 0, E, G);
    return (sp * a + sp.adjoint() * a.adjoint()) * cplx(omega / 2.0);
}

}  // namespace

TEST_CASE("build_basis dimensions and ordering") {
    CHECK(build_basis({SubsystemSpec::atom(2), SubsystemSpec::atom(2), SubsystemSpec::mode(3)})->dimension() == 16);
    CHECK(build_basis({SubsystemSpec::atom(4), SubsystemSpec::atom(4), SubsystemSpec::mode(2), SubsystemSpec::mode(2)})
              ->dimension() == 144);
    CHECK(build_basis({SubsystemSpec::atom(2)})->dimension() == 2);

    auto mixed = build_basis({SubsystemSpec::mode(3), SubsystemSpec::atom(2), SubsystemSpec::atom(3)});
    CHECK(mixed->subsystem(0) == SubsystemSpec::atom(2));
    CHECK(mixed->subsystem(1) == SubsystemSpec::atom(3));
    CHECK(mixed->subsystem(2) == SubsystemSpec::mode(3));
    CHECK(mixed->mode_slot(0) == 2);

    for (std::size_t i = 0; i < mixed->dimension(); ++i) {
        const auto d = mixed->digits(i);
        CHECK(mixed->index(d) == i);
    }

    CHECK_THROWS_AS(build_basis({}), HilbertError);
    CHECK_THROWS_AS(build_basis({SubsystemSpec::mode(0)}), HilbertError);
    CHECK_THROWS_AS(build_basis({SubsystemSpec::atom(0)}), HilbertError);
    CHECK_THROWS_AS(build_basis({SubsystemSpec::atom(5)}), HilbertError);
}

TEST_CASE("annihilation operator") {
    auto basis = build_basis({SubsystemSpec::mode(3)});
    const auto a = annihilation(basis, 0);
    auto two = StateVector::basis_state(basis, {2});
    auto out = a.apply(two);
    CHECK(std::abs(out.amplitude({1}) - std::sqrt(2.0)) < 1e-15);
    CHECK(out.norm() == doctest::Approx(std::sqrt(2.0)));

    CHECK(a.apply(StateVector::basis_state(basis, {0})).norm() == 0.0);
    CHECK(std::abs(expectation(StateVector::basis_state(basis, {3}), a.adjoint() * a) - 3.0) < 1e-14);
    // truncation: a^dagger|cutoff> = 0
    CHECK(a.adjoint().apply(StateVector::basis_state(basis, {3})).norm() == 0.0);

    auto atom_mode = build_basis({SubsystemSpec::atom(2), SubsystemSpec::mode(2)});
    CHECK_THROWS_AS(annihilation(atom_mode, 1), HilbertError);
    CHECK_NOTHROW(annihilation(atom_mode, 0));
}

TEST_CASE("atomic projectors") {
    auto basis = build_basis({SubsystemSpec::atom(2)});
    const auto e = StateVector::basis_state(basis, {E});
    const auto g = StateVector::basis_state(basis, {G});
    const auto pee = atomic_projector(basis, 0, E, E);
    CHECK(std::abs(inner(e, pee.apply(e)) - 1.0) < 1e-15);

    const auto sigma_plus = atomic_projector(basis, 0, E, G);
    CHECK(std::abs(inner(e, sigma_plus.apply(g)) - 1.0) < 1e-15);
    CHECK(sigma_plus.apply(e).norm() == 0.0);
    CHECK(sigma_plus.adjoint().entries() == atomic_projector(basis, 0, G, E).entries());

    CHECK_THROWS_AS(atomic_projector(basis, 0, 2, 0), HilbertError);
    CHECK_THROWS_AS(atomic_projector(basis, 1, 0, 0), HilbertError);
}

TEST_CASE("operator flags") {
    auto basis = build_basis({SubsystemSpec::atom(2), SubsystemSpec::mode(2)});
    CHECK(identity(basis).unitary());
    CHECK(identity(basis).hermitian());
    const auto a = annihilation(basis, 0);
    CHECK_FALSE(a.hermitian());
    CHECK((a + a.adjoint()).hermitian());
    CHECK_FALSE((a + a.adjoint()).unitary());
}

TEST_CASE("evolve: zero Hamiltonian and errors") {
    std::mt19937_64 rng(7);
    auto basis = build_basis({SubsystemSpec::atom(2), SubsystemSpec::mode(2)});
    const auto psi = random_state(basis, rng);
    const auto out = evolve(psi, zero_operator(basis), 3.7);
    CHECK((out.amplitudes() - psi.amplitudes()).norm() == 0.0);

    CHECK_THROWS_AS(evolve(psi, annihilation(basis, 0), 1.0), HilbertError);
    auto other = build_basis({SubsystemSpec::atom(2), SubsystemSpec::mode(3)});
    CHECK_THROWS_AS(evolve(psi, zero_operator(other), 1.0), HilbertError);
}

TEST_CASE("evolve: resonant Jaynes-Cummings Rabi oscillation") {
    // Oracle: the {|E,n>, |G,n+1>} block is a 2x2 matrix with off-diagonal
    // (Omega/2) sqrt(n+1), so P_E(t) = cos^2(Omega sqrt(n+1) t / 2).
    const double omega = 1.3;
    auto basis = build_basis({SubsystemSpec::atom(2), SubsystemSpec::mode(6)});
    const auto h = jaynes_cummings(basis, omega);
    const auto pe = atomic_projector(basis, 0, E, E);
    for (int n : {0, 1, 4}) {
        const auto psi0 = StateVector::basis_state(basis, {E, n});
        for (double t : {0.0, 0.3, 1.1, 2.9, 7.5}) {
            const double expected = std::pow(std::cos(omega * std::sqrt(n + 1.0) * t / 2.0), 2);
            const auto psi = evolve(psi0, h, t);
            CHECK(expectation(psi, pe).real() == doctest::Approx(expected).epsilon(1e-12));
            CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-13));
        }
    }
}

TEST_CASE("evolve: subradiant state is stationary for identical atoms") {
    auto basis = build_basis({SubsystemSpec::atom(2), SubsystemSpec::atom(2), SubsystemSpec::mode(3)});
    const double w = 5.0;
    auto h = (number_operator(basis, 0) + identity(basis) * cplx(0.5)) * cplx(w) +
             atomic_projector(basis, 0, E, E) * cplx(w) + atomic_projector(basis, 1, E, E) * cplx(w);
    const auto a = annihilation(basis, 0);
    for (std::size_t atom : {0u, 1u}) {
        const auto sp = atomic_projector(basis, atom, E, G);
        h = h + (sp * a + sp.adjoint() * a.adjoint()) * cplx(0.75);
    }
    const auto sub = StateVector::superposition(basis, {{{E, G, 0}, 1.0}, {{G, E, 0}, -1.0}});
    for (double t : {0.1, 1.0, 13.0}) {
        CHECK(fidelity(sub, evolve(sub, h, t)) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("evolve: norm preservation and composition (property)") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> time(0.0, 4.0);
    auto basis = build_basis({SubsystemSpec::atom(3), SubsystemSpec::mode(3)});
    for (int trial = 0; trial < 20; ++trial) {
        const auto h = random_hermitian(basis, rng);
        const auto psi = random_state(basis, rng);
        const double t1 = time(rng), t2 = time(rng);
        const auto joint = evolve(psi, h, t1 + t2);
        const auto split = evolve(evolve(psi, h, t1), h, t2);
        CHECK(std::abs(joint.norm() - 1.0) < 1e-12);
        CHECK((joint.amplitudes() - split.amplitudes()).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("blocked evolution matches dense evolution") {
    auto basis = build_basis({SubsystemSpec::atom(2), SubsystemSpec::atom(2), SubsystemSpec::mode(5)});
    auto h = number_operator(basis, 0) * cplx(2.0) + atomic_projector(basis, 0, E, E) * cplx(2.3) +
             atomic_projector(basis, 1, E, E) * cplx(1.7);
    const auto a = annihilation(basis, 0);
    for (std::size_t atom : {0u, 1u}) {
        const auto sp = atomic_projector(basis, atom, E, G);
        h = h + (sp * a + sp.adjoint() * a.adjoint()) * cplx(0.9);
    }
    Propagator blocked(h, Propagator::Strategy::Blocked);
    CHECK(blocked.block_count() > 1);
    CHECK(blocked.largest_block() <= 4);

    std::mt19937_64 rng(99);
    const auto psi = random_state(basis, rng);
    const auto dense = evolve(psi, h, 2.5);
    const auto fast = blocked.apply(psi, 2.5);
    CHECK((dense.amplitudes() - fast.amplitudes()).cwiseAbs().maxCoeff() < 1e-10);
    const auto n = number_operator(basis, 0);
    CHECK(std::abs(expectation(dense, n) - expectation(fast, n)) < 1e-10);

    SegmentUnitary step(blocked, 2.5);
    CHECK((step.apply(psi).amplitudes() - dense.amplitudes()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("excitation-conserving evolution stays in its block") {
    auto basis = build_basis({SubsystemSpec::atom(2), SubsystemSpec::atom(2), SubsystemSpec::mode(6)});
    auto h = number_operator(basis, 0) * cplx(1.0) + atomic_projector(basis, 0, E, E) * cplx(1.2) +
             atomic_projector(basis, 1, E, E) * cplx(0.8);
    const auto a = annihilation(basis, 0);
    for (std::size_t atom : {0u, 1u}) {
        const auto sp = atomic_projector(basis, atom, E, G);
        h = h + (sp * a + sp.adjoint() * a.adjoint()) * cplx(0.6);
    }
    const auto excitations =
        number_operator(basis, 0) + atomic_projector(basis, 0, E, E) + atomic_projector(basis, 1, E, E);
    CHECK(commutes(h, excitations));
    const auto psi = evolve(StateVector::basis_state(basis, {E, G, 3}), h, 4.2);
    double outside = 0.0;
    for (std::size_t i = 0; i < basis->dimension(); ++i) {
        const auto d = basis->digits(i);
        if (d[0] + d[1] + d[2] != 4) outside += std::norm(psi[i]);
    }
    CHECK(outside < 1e-24);
}

TEST_CASE("expectation values") {
    auto basis = build_basis({SubsystemSpec::mode(3)});
    const auto a = annihilation(basis, 0);
    const auto quad = a + a.adjoint();
    CHECK(std::abs(expectation(StateVector::basis_state(basis, {0}), number_operator(basis, 0))) == 0.0);
    CHECK(std::abs(expectation(StateVector::basis_state(basis, {2}), quad)) == 0.0);
    const auto plus = StateVector::superposition(basis, {{{0}, 1.0}, {{1}, 1.0}});
    const cplx q = expectation(plus, quad);
    CHECK(q.real() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(q.imag()) < 1e-12);

    std::mt19937_64 rng(3);
    auto big = build_basis({SubsystemSpec::atom(2), SubsystemSpec::mode(4)});
    const auto h = random_hermitian(big, rng);
    CHECK(std::abs(expectation(random_state(big, rng), h).imag()) < 1e-12);
    CHECK_THROWS_AS(expectation(plus, h), HilbertError);
}

TEST_CASE("photon-number projection") {
    auto basis = build_basis({SubsystemSpec::atom(2), SubsystemSpec::atom(2), SubsystemSpec::mode(5)});
    const int n = 3;
    const auto psi = StateVector::superposition(basis, {{{E, G, n}, 1.0}, {{G, E, n}, -1.0}});
    const auto hit = project_photon_number(psi, 0, n);
    REQUIRE_FALSE(hit.empty());
    CHECK(hit.probability == doctest::Approx(1.0).epsilon(1e-15));
    CHECK((hit.state->amplitudes() - psi.amplitudes()).norm() < 1e-15);

    const auto miss = project_photon_number(psi, 0, n + 1);
    CHECK(miss.empty());
    CHECK(miss.probability == 0.0);
    CHECK_THROWS_AS(project_photon_number(psi, 0, 6), HilbertError);

    // completeness on a random state
    std::mt19937_64 rng(11);
    const auto r = random_state(basis, rng);
    double total = 0.0;
    for (int k = 0; k <= 5; ++k) total += project_photon_number(r, 0, k).probability;
    CHECK(std::abs(total - 1.0) < 1e-12);
}

TEST_CASE("replace_mode_state") {
    auto basis = build_basis({SubsystemSpec::atom(2), SubsystemSpec::atom(2), SubsystemSpec::mode(5)});
    const auto psi = StateVector::superposition(basis, {{{E, G, 0}, 1.0}, {{G, E, 0}, -1.0}});
    const auto injected = replace_mode_state(psi, 0, 4);
    const auto expected = StateVector::superposition(basis, {{{E, G, 4}, 1.0}, {{G, E, 4}, -1.0}});
    CHECK((injected.amplitudes() - expected.amplitudes()).norm() < 1e-15);
    const auto back = replace_mode_state(injected, 0, 0);
    CHECK((back.amplitudes() - psi.amplitudes()).norm() < 1e-15);

    const auto entangled = StateVector::superposition(basis, {{{E, G, 0}, 1.0}, {{G, G, 1}, 1.0}});
    CHECK(mode_purity(entangled, 0) < 0.9);
    CHECK_THROWS_AS(replace_mode_state(entangled, 0, 2), HilbertError);

    // product with a superposed mode factor is still replaceable
    const auto coherent_like = StateVector::superposition(basis, {{{E, G, 0}, 1.0}, {{E, G, 1}, 1.0}});
    CHECK(mode_purity(coherent_like, 0) == doctest::Approx(1.0));
    const auto replaced = replace_mode_state(coherent_like, 0, 2);
    CHECK(std::abs(replaced.amplitude({E, G, 2})) == doctest::Approx(1.0));
}

TEST_CASE("tensor product") {
    auto atoms = build_basis({SubsystemSpec::atom(2), SubsystemSpec::atom(2)});
    auto mode = build_basis({SubsystemSpec::mode(2)});
    const auto a = StateVector::superposition(atoms, {{{E, G}, 1.0}, {{G, E}, -1.0}});
    const auto m = StateVector::basis_state(mode, {1});
    const auto joint = tensor(a, m);
    CHECK(joint.basis()->dimension() == 12);
    CHECK(std::abs(joint.amplitude({E, G, 1}) - 1.0 / std::sqrt(2.0)) < 1e-15);
    CHECK(std::abs(joint.amplitude({G, E, 1}) + 1.0 / std::sqrt(2.0)) < 1e-15);
    CHECK_THROWS_AS(tensor(m, a), HilbertError);
}

TEST_CASE("exchange_coupling equals the ladder-operator product form") {
    auto basis = build_basis({SubsystemSpec::atom(3), SubsystemSpec::atom(2), SubsystemSpec::mode(3), SubsystemSpec::mode(2)});
    for (std::size_t mode : {0u, 1u}) {
        const auto a = annihilation(basis, mode);
        const auto sp = atomic_projector(basis, 0, 2, 0);
        const auto reference = (sp * a + sp.adjoint() * a.adjoint()) * cplx(0.7);
        const auto direct = exchange_coupling(basis, 0, 2, 0, mode, 0.7);
        CHECK((reference.entries() - direct.entries()).cwiseAbs().maxCoeff() < 1e-15);
        CHECK(direct.hermitian());
    }
    CHECK_THROWS_AS(exchange_coupling(basis, 0, 1, 1, 0, 1.0), HilbertError);
}
