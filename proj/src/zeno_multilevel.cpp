#include "zenolock/zeno_multilevel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace zenolock {

using namespace four_level;

namespace {

void require_vacuum(const StateVector& state, std::size_t mode, const char* where) {
    if (mode_purity(state, mode) < 1.0 - kPurityTolerance) {
        throw ProtocolError(std::string(where) + ": cavity mode " + std::to_string(mode + 1) +
                            " is entangled with the atoms");
    }
    const auto p = photon_distribution(state, mode);
    const double norm2 = state.norm() * state.norm();
    if (p[0] < norm2 * (1.0 - kPurityTolerance)) {
        throw ProtocolError(std::string(where) + ": cavity mode " + std::to_string(mode + 1) + " is not in vacuum");
    }
}

// Population of the given mode's Fock levels from n + 2 upward; never negative.
double truncation_population(const StateVector& state, int photon_number) {
    double total = 0.0;
    for (std::size_t mode : {0u, 1u}) {
        if (photon_number + 2 <= state.basis()->mode_cutoff(mode)) {
            total += population_at_or_above(state, mode, photon_number + 2);
        }
    }
    return total;
}

int manifold_of(int level) { return (level == kG1 || level == kE1) ? 1 : 2; }

// Probability that mode 2 left n after evolving `psi` for tau under `h`.
double mode2_change(const StateVector& psi, const OperatorMatrix& h, int n, double tau) {
    const auto out = Propagator(h).apply(psi, tau);
    const auto p = photon_distribution(out, 1);
    double changed = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        if (static_cast<int>(k) != n) changed += p[k];
    }
    return changed;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

double FourLevelConfig::delta(int manifold) const {
    return (atom_a.transition(manifold) - atom_b.transition(manifold)) / 2.0;
}

double FourLevelConfig::resonance_mismatch(int manifold) const {
    const double mean = (atom_a.transition(manifold) + atom_b.transition(manifold)) / 2.0;
    return std::abs((manifold == 1 ? mode1_frequency : mode2_frequency) - mean);
}

bool FourLevelConfig::resonant(double tolerance) const {
    return resonance_mismatch(1) <= tolerance && resonance_mismatch(2) <= tolerance;
}

void FourLevelConfig::validate() const {
    if (!(free_interval > 0.0)) throw ProtocolError("free_interval (tau) must be > 0");
    if (!(measure_interval >= 0.0)) throw ProtocolError("measure_interval (tau_m) must be >= 0");
    if (!(final_time >= free_interval + measure_interval)) throw ProtocolError("final_time must be >= tau + tau_m");
    if (photon_number < 0) throw ProtocolError("photon_number must be >= 0");
    if (fock_cutoff1 < photon_number + 2 || fock_cutoff2 < photon_number + 2) {
        throw ProtocolError("fock cutoffs must be >= photon_number + 2");
    }
    if (photon_number > 0 && !(coupling > 0.0)) throw ProtocolError("coupling must be > 0 when photons are injected");
}

BasisPtr FourLevelConfig::basis() const {
    return build_basis(
        {SubsystemSpec::atom(4), SubsystemSpec::atom(4), SubsystemSpec::mode(fock_cutoff1), SubsystemSpec::mode(fock_cutoff2)});
}

FourLevelConfig FourLevelConfig::symmetric(double delta1, double delta2, double cycle_period, double final_time,
                                           int photon_number, double measure_fraction) {
    FourLevelConfig c;
    c.atom_a = {0.0, 0.0, 120.0 + delta1, 110.0 + delta2};
    c.atom_b = {0.0, 0.0, 120.0 - delta1, 110.0 - delta2};
    c.mode1_frequency = 120.0;
    c.mode2_frequency = 110.0;
    c.photon_number = photon_number;
    c.fock_cutoff1 = c.fock_cutoff2 = photon_number + 2;
    c.measure_interval = measure_fraction * cycle_period;
    c.free_interval = cycle_period - c.measure_interval;
    c.final_time = final_time;
    c.coupling = std::numbers::pi / (2.0 * c.measure_interval * std::sqrt(photon_number + 0.5));
    return c;
}

BasisPtr ThreeLevelConfig::basis() const {
    return build_basis(
        {SubsystemSpec::atom(3), SubsystemSpec::atom(3), SubsystemSpec::mode(fock_cutoff1), SubsystemSpec::mode(fock_cutoff2)});
}

// ---------------------------------------------------------------------------
// Hamiltonians and states

OperatorMatrix build_three_level_hamiltonian(const ThreeLevelConfig& config, bool coupled) {
    namespace tl = three_level;
    const auto basis = config.basis();
    const std::size_t m1 = basis->mode_slot(0), m2 = basis->mode_slot(1);
    auto energy = [](const ThreeLevelAtom& a, int level) { return level == tl::kG ? a.g : level == tl::kE1 ? a.e1 : a.e2; };
    auto h = diagonal_operator(basis, [&](std::size_t i) {
        double e = config.mode1_frequency * (basis->digit(i, m1) + 0.5) +
                   config.mode2_frequency * (basis->digit(i, m2) + 0.5);
        e += energy(config.atom_a, basis->digit(i, 0)) + energy(config.atom_b, basis->digit(i, 1));
        return cplx(e, 0.0);
    });
    if (coupled) {
        for (std::size_t atom : {0u, 1u}) {
            h = h + exchange_coupling(basis, atom, tl::kE1, tl::kG, 0, config.coupling / 2.0);
            h = h + exchange_coupling(basis, atom, tl::kE2, tl::kG, 1, config.coupling / 2.0);
        }
    }
    return h;
}

OperatorMatrix build_four_level_hamiltonian(const FourLevelConfig& config, bool coupled) {
    const auto basis = config.basis();
    const std::size_t m1 = basis->mode_slot(0), m2 = basis->mode_slot(1);
    auto energy = [](const FourLevelAtom& a, int level) {
        switch (level) {
            case kG1: return a.g1;
            case kG2: return a.g2;
            case kE1: return a.e1;
            default: return a.e2;
        }
    };
    auto h = diagonal_operator(basis, [&](std::size_t i) {
        double e = config.mode1_frequency * (basis->digit(i, m1) + 0.5) +
                   config.mode2_frequency * (basis->digit(i, m2) + 0.5);
        e += energy(config.atom_a, basis->digit(i, 0)) + energy(config.atom_b, basis->digit(i, 1));
        return cplx(e, 0.0);
    });
    if (coupled) {
        for (std::size_t atom : {0u, 1u}) {
            h = h + exchange_coupling(basis, atom, kE1, kG1, 0, config.coupling / 2.0);
            h = h + exchange_coupling(basis, atom, kE2, kG2, 1, config.coupling / 2.0);
        }
    }
    return h;
}

OperatorMatrix three_level_excitation_operator(const BasisPtr& basis, int manifold) {
    const int level = manifold == 1 ? three_level::kE1 : three_level::kE2;
    return atomic_projector(basis, 0, level, level) + atomic_projector(basis, 1, level, level) +
           number_operator(basis, static_cast<std::size_t>(manifold - 1));
}

OperatorMatrix four_level_excitation_operator(const BasisPtr& basis, int manifold) {
    const int level = manifold == 1 ? kE1 : kE2;
    return atomic_projector(basis, 0, level, level) + atomic_projector(basis, 1, level, level) +
           number_operator(basis, static_cast<std::size_t>(manifold - 1));
}

StateVector initial_state_three(const ThreeLevelConfig& config, int photons1, int photons2) {
    namespace tl = three_level;
    const int a = photons1, b = photons2;
    return StateVector::superposition(
        config.basis(), {{{tl::kE1, tl::kG, a, b}, 1.0}, {{tl::kG, tl::kE1, a, b}, -1.0}, {{tl::kE2, tl::kG, a, b}, 1.0}, {{tl::kG, tl::kE2, a, b}, -1.0}});
}

StateVector initial_state_four(const FourLevelConfig& config, int photons1, int photons2) {
    const int a = photons1, b = photons2;
    return StateVector::superposition(config.basis(), {{{kE1, kG1, a, b}, 1.0},
                                                       {{kG1, kE1, a, b}, -1.0},
                                                       {{kE2, kG2, a, b}, 1.0},
                                                       {{kG2, kE2, a, b}, -1.0}});
}

double three_level_leakage(const ThreeLevelConfig& config, int photon_number, double measure_interval) {
    namespace tl = three_level;
    if (photon_number < 0) throw ProtocolError("three_level_leakage: photon_number must be >= 0");
    if (config.fock_cutoff1 < photon_number + 2 || config.fock_cutoff2 < photon_number + 2) {
        throw ProtocolError("three_level_leakage: fock cutoffs must be >= photon_number + 2");
    }
    const int n = photon_number;
    const auto psi = StateVector::superposition(config.basis(), {{{tl::kE1, tl::kG, n, n}, 1.0}, {{tl::kG, tl::kE1, n, n}, -1.0}});
    return mode2_change(psi, build_three_level_hamiltonian(config), n, measure_interval);
}

double four_level_leakage(const FourLevelConfig& config, int photon_number, double measure_interval) {
    if (photon_number < 0) throw ProtocolError("four_level_leakage: photon_number must be >= 0");
    if (config.fock_cutoff1 < photon_number + 2 || config.fock_cutoff2 < photon_number + 2) {
        throw ProtocolError("four_level_leakage: fock cutoffs must be >= photon_number + 2");
    }
    const int n = photon_number;
    const auto psi = StateVector::superposition(config.basis(), {{{kE1, kG1, n, n}, 1.0}, {{kG1, kE1, n, n}, -1.0}});
    return mode2_change(psi, build_four_level_hamiltonian(config), n, measure_interval);
}

double cross_manifold_population(const StateVector& state) {
    const auto& basis = *state.basis();
    double total = 0.0;
    for (std::size_t i = 0; i < basis.dimension(); ++i) {
        if (manifold_of(basis.digit(i, 0)) != manifold_of(basis.digit(i, 1))) total += std::norm(state[i]);
    }
    return total;
}

ClosedForm pe_four_level(double delta1, double delta2, double free_interval, double manifold1_weight) {
    const double w = manifold1_weight;
    const double pe = (w * delta1 * delta1 + (1.0 - w) * delta2 * delta2) * free_interval * free_interval;
    return {pe, pe > 1.0};
}

SurvivalClosedForm ps_four_level(double delta1, double delta2, double free_interval, double measure_interval,
                                 double final_time) {
    const auto pe = pe_four_level(delta1, delta2, free_interval);
    const double period = free_interval + measure_interval;
    SurvivalClosedForm out;
    out.out_of_regime = pe.out_of_regime;
    out.product = pe.out_of_regime ? std::numeric_limits<double>::quiet_NaN()
                                   : std::pow(1.0 - pe.value, final_time / period);
    out.exponential = std::exp(-0.5 * (delta1 * delta1 + delta2 * delta2) * period * final_time);
    return out;
}

// ---------------------------------------------------------------------------
// Protocol

FourLevelProtocol::FourLevelProtocol(const FourLevelConfig& config)
    : config_((config.validate(), config)),
      basis_(config.basis()),
      uncoupled_(build_four_level_hamiltonian(config, false)),
      coupled_(build_four_level_hamiltonian(config, true)),
      drift_step_(uncoupled_, config.free_interval),
      measure_step_(coupled_, config.measure_interval) {}

StateVector FourLevelProtocol::drift(const StateVector& state) const {
    require_vacuum(state, 0, "free_drift");
    require_vacuum(state, 1, "free_drift");
    return drift_step_.apply(state);
}

StateVector FourLevelProtocol::drift_for(const StateVector& state, double duration) const {
    require_vacuum(state, 0, "free_drift");
    require_vacuum(state, 1, "free_drift");
    return uncoupled_.apply(state, duration);
}

StateVector FourLevelProtocol::measure(const StateVector& state) const {
    require_vacuum(state, 0, "measurement_segment");
    require_vacuum(state, 1, "measurement_segment");
    const int n = config_.photon_number;
    return measure_step_.apply(replace_mode_state(replace_mode_state(state, 0, n), 1, n));
}

FourLevelCycle FourLevelProtocol::cycle(const StateVector& state) const {
    const int n = config_.photon_number;
    // Drift keeps the modes in vacuum, so one check covers both segments.
    require_vacuum(state, 0, "zeno_cycle");
    require_vacuum(state, 1, "zeno_cycle");
    const auto drifted = drift_step_.apply(state);
    const auto measured = measure_step_.apply(replace_mode_state(replace_mode_state(drifted, 0, n), 1, n));
    const double truncated = truncation_population(measured, n);
    const double cross = cross_manifold_population(measured);
    auto first = project_photon_number(measured, 0, n);
    if (first.empty()) throw ProtocolError("zeno_cycle: success branch has zero probability");
    auto second = project_photon_number(*first.state, 1, n);
    if (second.empty()) throw ProtocolError("zeno_cycle: success branch has zero probability");
    auto reset = replace_mode_state(replace_mode_state(*second.state, 0, 0), 1, 0);
    return {std::move(reset), first.probability * second.probability, truncated, cross};
}

FourLevelTrace run_four_level_protocol(const FourLevelConfig& config) {
    const FourLevelProtocol protocol(config);
    const double period = config.cycle_period();
    const auto cycles = static_cast<long>(std::floor(config.final_time / period * (1.0 + 1e-12)));
    const double d1 = config.delta(1), d2 = config.delta(2);

    FourLevelTrace out;
    out.resonant = config.resonant();
    out.manifold2_residual_cosine =
        config.photon_number > 0
            ? std::cos(config.coupling * config.measure_interval * std::sqrt(config.photon_number + 0.5))
            : 1.0;
    auto& trace = out.survival;
    trace.out_of_regime = pe_four_level(d1, d2, config.free_interval).out_of_regime;
    trace.times.reserve(static_cast<std::size_t>(cycles) + 2);
    auto record = [&](double t, double ps, double pe_cycle) {
        const auto closed = ps_four_level(d1, d2, config.free_interval, config.measure_interval, t);
        trace.times.push_back(t);
        trace.p_success.push_back(ps);
        trace.p_error_per_cycle.push_back(pe_cycle);
        trace.analytic_p_s.push_back(closed.product);
        trace.analytic_p_s_exp.push_back(closed.exponential);
    };

    StateVector state = initial_state_four(config);
    out.max_cross_population = cross_manifold_population(state);
    double ps = 1.0;
    record(0.0, ps, 0.0);
    for (long c = 1; c <= cycles; ++c) {
        auto step = protocol.cycle(state);
        ps *= step.success_probability;
        trace.max_truncation_population = std::max(trace.max_truncation_population, step.truncation_population);
        out.max_cross_population = std::max(out.max_cross_population, step.cross_population);
        state = std::move(step.state);
        record(static_cast<double>(c) * period, ps, 1.0 - step.success_probability);
    }
    const double leftover = config.final_time - static_cast<double>(cycles) * period;
    if (leftover > 1e-12 * config.final_time) {
        state = protocol.drift_for(state, leftover);
        record(config.final_time, ps, 0.0);
    }
    trace.valid = trace.max_truncation_population < kTruncationLimit;
    trace.final_state = std::move(state);
    return out;
}

}  // namespace zenolock
