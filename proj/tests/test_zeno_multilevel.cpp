#include "doctest.h"

#include <cmath>

#include "zenolock/zeno_multilevel.hpp"

using namespace zenolock;
using namespace four_level;
namespace tl = three_level;

namespace {

// Small cutoffs keep structural checks fast.
FourLevelConfig small_four(int cutoff = 3) {
    FourLevelConfig c;
    c.atom_a = {0.0, 0.3, 121.0, 109.5};
    c.atom_b = {0.1, 0.0, 119.2, 110.1};
    c.fock_cutoff1 = c.fock_cutoff2 = cutoff;
    c.photon_number = 1;
    return c;
}

ThreeLevelConfig small_three(int cutoff = 3) {
    ThreeLevelConfig c;
    c.fock_cutoff1 = c.fock_cutoff2 = cutoff;
    return c;
}

double max_abs_entry(const OperatorMatrix& a) { return a.entries().cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("configuration helpers") {
    auto c = small_four();
    CHECK(c.delta(1) == doctest::Approx(((121.0 - 0.0) - (119.2 - 0.1)) / 2.0));
    CHECK(c.delta(2) == doctest::Approx(((109.5 - 0.3) - (110.1 - 0.0)) / 2.0));
    CHECK_FALSE(c.resonant());

    const auto s = FourLevelConfig::symmetric(2.0, 0.5, 0.001, 1.0);
    CHECK(s.delta(1) == doctest::Approx(2.0));
    CHECK(s.delta(2) == doctest::Approx(0.5));
    CHECK(s.resonant());
    CHECK(s.basis()->dimension() == 4u * 4u * 11u * 11u);
    CHECK(s.cycle_period() == doctest::Approx(0.001));
    CHECK(std::abs(std::cos(s.coupling * s.measure_interval * std::sqrt(8.5))) < 1e-12);

    c.fock_cutoff2 = 3;
    c.photon_number = 1;
    CHECK_NOTHROW(c.validate());
    c.photon_number = 2;
    CHECK_THROWS_AS(c.validate(), ProtocolError);
}

TEST_CASE("three-level Hamiltonian") {
    auto c = small_three();
    c.atom_b.e1 = 121.5;
    const auto h = build_three_level_hamiltonian(c);
    CHECK(h.hermitian());
    for (int k : {1, 2}) CHECK(commutes(h, three_level_excitation_operator(h.basis(), k)));

    // No coupling and identical atoms: the initial state only picks up phases.
    auto bare = small_three();
    bare.coupling = 0.0;
    bare.mode2_frequency = bare.mode1_frequency = 0.0;
    bare.atom_a.e2 = bare.atom_b.e2 = bare.atom_a.e1 = bare.atom_b.e1 = 120.0;
    const auto psi = initial_state_three(bare);
    const auto out = evolve(psi, build_three_level_hamiltonian(bare), 0.37);
    CHECK(fidelity(psi, out) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("four-level Hamiltonian") {
    const auto c = small_four();
    const auto h = build_four_level_hamiltonian(c);
    CHECK(h.hermitian());
    for (int k : {1, 2}) CHECK(commutes(h, four_level_excitation_operator(h.basis(), k)));

    // No element connects a configuration to one in which an atom changed manifold.
    const auto& basis = *h.basis();
    auto manifold = [](int level) { return (level == kG1 || level == kE1) ? 1 : 2; };
    double cross = 0.0;
    for (std::size_t i = 0; i < basis.dimension(); ++i) {
        for (std::size_t j = 0; j < basis.dimension(); ++j) {
            if (manifold(basis.digit(i, 0)) != manifold(basis.digit(j, 0)) ||
                manifold(basis.digit(i, 1)) != manifold(basis.digit(j, 1))) {
                cross = std::max(cross, std::abs(h.entries()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
            }
        }
    }
    CHECK(cross == 0.0);
    CHECK(h.entries()(static_cast<Eigen::Index>(basis.index(std::vector<int>{kE1, kG2, 1, 1})),
                      static_cast<Eigen::Index>(basis.index(std::vector<int>{kG1, kG2, 2, 1}))) != cplx{});
    CHECK(h.entries()(static_cast<Eigen::Index>(basis.index(std::vector<int>{kE1, kG2, 1, 1})),
                      static_cast<Eigen::Index>(basis.index(std::vector<int>{kG2, kG2, 2, 1}))) == cplx{});
    CHECK(max_abs_entry(build_four_level_hamiltonian(c, false) - h) == doctest::Approx(std::sqrt(3.0)));
}

TEST_CASE("initial states") {
    const auto four = initial_state_four(small_four());
    const auto three = initial_state_three(small_three());
    CHECK(four.norm() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(three.norm() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(four.amplitude({kE1, kG1, 0, 0}) - 0.5) < 1e-15);
    CHECK(four.amplitude({kG1, kE1, 0, 0}) == -four.amplitude({kE1, kG1, 0, 0}));
    CHECK(four.amplitude({kG2, kE2, 0, 0}) == -four.amplitude({kE2, kG2, 0, 0}));
    CHECK(three.amplitude({tl::kG, tl::kE2, 0, 0}) == -three.amplitude({tl::kE2, tl::kG, 0, 0}));

    const auto basis = small_four().basis();
    const auto half1 = StateVector::superposition(basis, {{{kE1, kG1, 0, 0}, 1.0}, {{kG1, kE1, 0, 0}, -1.0}});
    const auto half2 = StateVector::superposition(basis, {{{kE2, kG2, 0, 0}, 1.0}, {{kG2, kE2, 0, 0}, -1.0}});
    CHECK(inner(half1, half2) == cplx{});
    CHECK(std::abs(inner(half1, four)) == doctest::Approx(std::sqrt(0.5)));
    CHECK(cross_manifold_population(four) == 0.0);
}

TEST_CASE("three-level leakage versus the four-level analog") {
    const double tm = half_flop_time(2.0, 8);
    const double leak3 = three_level_leakage(ThreeLevelConfig{}, 8, tm);
    const double leak4 = four_level_leakage(FourLevelConfig{}, 8, tm);
    CHECK(leak3 > 1e-6);
    CHECK(leak4 < 1e-12);

    // Vacuum modes: nothing to absorb from mode 2.
    CHECK(three_level_leakage(small_three(), 0, 0.3) < 1e-15);

    // Ordering over a sweep grid.
    for (int n : {1, 2, 3}) {
        for (double omega : {0.5, 2.0, 5.0}) {
            auto c3 = small_three(n + 2);
            c3.coupling = omega;
            auto c4 = FourLevelConfig{};
            c4.fock_cutoff1 = c4.fock_cutoff2 = n + 2;
            c4.coupling = omega;
            const double tau = half_flop_time(omega, n);
            const double l4 = four_level_leakage(c4, n, tau);
            CHECK(l4 < 1e-12);
            CHECK(three_level_leakage(c3, n, tau) > l4);
        }
    }
    CHECK_THROWS_AS(three_level_leakage(small_three(3), 2, 0.1), ProtocolError);
}

TEST_CASE("four-level closed forms") {
    for (double d : {0.5, 2.0}) {
        CHECK(pe_four_level(d, d, 0.001).value == doctest::Approx(pe_analytic(d, 0.001).value).epsilon(1e-15));
        const auto four = ps_four_level(d, d, 0.00099, 0.00001, 30.0);
        const auto two = ps_analytic(d, 0.00099, 0.00001, 30.0);
        CHECK(four.exponential == doctest::Approx(two.exponential).epsilon(1e-15));
        CHECK(four.product == doctest::Approx(two.product).epsilon(1e-15));
    }
    CHECK(pe_four_level(2.0, 0.0, 0.001).value == doctest::Approx(2e-6).epsilon(1e-14));
    // Only manifold 1 populated and Delta_2 = 0: the two-level expression.
    CHECK(pe_four_level(2.0, 0.0, 0.001, 1.0).value == pe_analytic(2.0, 0.001).value);
    CHECK(ps_four_level(0.0, 0.0, 0.01, 0.001, 20.0).product == 1.0);
    CHECK(ps_four_level(0.0, 0.0, 0.01, 0.001, 20.0).exponential == 1.0);
    CHECK(pe_four_level(1.5, 1.5, 1.0).out_of_regime);
}

TEST_CASE("four-level Zeno cycle") {
    SUBCASE("per-cycle error matches the closed form") {
        for (double dt : {1e-3, 1e-2}) {
            auto c = FourLevelConfig::symmetric(dt / 0.000999, dt / 0.000999, 0.001, 1.0, 4, 0.001);
            const FourLevelProtocol protocol(c);
            const auto step = protocol.cycle(initial_state_four(c));
            const double pe = pe_four_level(c.delta(1), c.delta(2), c.free_interval).value;
            CHECK((1.0 - step.success_probability) / pe == doctest::Approx(1.0).epsilon(0.02));
            CHECK(step.cross_population == 0.0);
            CHECK(step.state.norm() == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    SUBCASE("joint photon-number outcomes are complete") {
        auto c = FourLevelConfig::symmetric(3.0, 1.0, 0.01, 1.0, 3);
        const FourLevelProtocol protocol(c);
        const auto measured = protocol.measure(protocol.drift(initial_state_four(c)));
        double total = 0.0;
        for (int k1 = 0; k1 <= c.fock_cutoff1; ++k1) {
            const auto first = project_photon_number(measured, 0, k1);
            if (first.empty()) continue;
            for (int k2 = 0; k2 <= c.fock_cutoff2; ++k2) {
                total += first.probability * project_photon_number(*first.state, 1, k2).probability;
            }
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("preconditions") {
        auto c = FourLevelConfig::symmetric(1.0, 1.0, 0.01, 1.0, 2);
        const FourLevelProtocol protocol(c);
        CHECK_THROWS_AS(protocol.cycle(initial_state_four(c, 1, 0)), ProtocolError);
        CHECK_THROWS_AS(protocol.measure(initial_state_four(c, 0, 2)), ProtocolError);
    }
}

TEST_CASE("run_four_level_protocol") {
    SUBCASE("survival tracks the closed form") {
        const auto c = FourLevelConfig::symmetric(2.0, 2.0, 0.01, 5.0, 4);
        const auto out = run_four_level_protocol(c);
        const auto& trace = out.survival;
        CHECK(trace.valid);
        CHECK(out.resonant);
        CHECK(out.max_cross_population < 1e-12);
        CHECK(std::abs(out.manifold2_residual_cosine) < 1e-12);
        for (std::size_t i = 1; i < trace.p_success.size(); ++i) CHECK(trace.p_success[i] <= trace.p_success[i - 1]);
        CHECK(trace.p_success.back() / trace.analytic_p_s_exp.back() == doctest::Approx(1.0).epsilon(0.05));
        CHECK(trace.analytic_p_s_exp.back() ==
              doctest::Approx(ps_analytic(2.0, c.free_interval, c.measure_interval, 5.0).exponential));
    }
    SUBCASE("no splitting, no decay") {
        const auto c = FourLevelConfig::symmetric(0.0, 0.0, 0.01, 1.0, 3);
        const auto out = run_four_level_protocol(c);
        for (double p : out.survival.p_success) CHECK(p == doctest::Approx(1.0).epsilon(1e-10));
    }
}
