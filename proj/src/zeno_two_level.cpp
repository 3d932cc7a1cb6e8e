#include "zenolock/zeno_two_level.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace zenolock {

using two_level::kE;
using two_level::kG;

void TwoLevelConfig::validate() const {
    if (!(free_interval > 0.0)) throw ProtocolError("free_interval (tau) must be > 0");
    if (!(measure_interval >= 0.0)) throw ProtocolError("measure_interval (tau_m) must be >= 0");
    if (!(final_time >= free_interval + measure_interval)) {
        throw ProtocolError("final_time must be >= tau + tau_m");
    }
    if (photon_number < 0) throw ProtocolError("photon_number must be >= 0");
    if (fock_cutoff < photon_number + 2) throw ProtocolError("fock_cutoff must be >= photon_number + 2");
    if (photon_number > 0 && !(coupling > 0.0)) throw ProtocolError("coupling must be > 0 when photons are injected");
}

BasisPtr TwoLevelConfig::basis() const {
    return build_basis({SubsystemSpec::atom(2), SubsystemSpec::atom(2), SubsystemSpec::mode(fock_cutoff)});
}

TwoLevelConfig TwoLevelConfig::with_schedule(double half_difference, double cycle_period, double final_time,
                                             int photon_number, double measure_fraction) {
    TwoLevelConfig c;
    c.half_difference = half_difference;
    c.photon_number = photon_number;
    c.measure_interval = measure_fraction * cycle_period;
    c.free_interval = cycle_period - c.measure_interval;
    c.final_time = final_time;
    c.fock_cutoff = photon_number + 3;
    c.coupling = std::numbers::pi / (2.0 * c.measure_interval * std::sqrt(photon_number + 0.5));
    return c;
}

OperatorMatrix build_two_level_hamiltonian(const TwoLevelConfig& config, bool coupled) {
    const auto basis = config.basis();
    const double w = config.cavity_frequency;
    const double wa = config.omega_a();
    const double wb = config.omega_b();
    const std::size_t mode = basis->mode_slot(0);
    auto h = diagonal_operator(basis, [&](std::size_t i) {
        const int n = basis->digit(i, mode);
        double e = w * (n + 0.5);
        if (basis->digit(i, 0) == kE) e += wa;
        if (basis->digit(i, 1) == kE) e += wb;
        return cplx(e, 0.0);
    });
    if (coupled) {
        for (std::size_t atom : {0u, 1u}) {
            h = h + exchange_coupling(basis, atom, kE, kG, 0, config.coupling / 2.0);
        }
    }
    return h;
}

OperatorMatrix two_level_excitation_operator(const BasisPtr& basis) {
    return atomic_projector(basis, 0, kE, kE) + atomic_projector(basis, 1, kE, kE) + number_operator(basis, 0);
}

StateVector subradiant_state(const TwoLevelConfig& config, int photons) {
    return StateVector::superposition(config.basis(), {{{kE, kG, photons}, 1.0}, {{kG, kE, photons}, -1.0}});
}

StateVector superradiant_state(const TwoLevelConfig& config, int photons) {
    return StateVector::superposition(config.basis(), {{{kE, kG, photons}, 1.0}, {{kG, kE, photons}, 1.0}});
}

double half_flop_time(double coupling, int photon_number) {
    if (!(coupling > 0.0)) throw ProtocolError("half_flop_time: coupling must be > 0");
    if (photon_number < 0) throw ProtocolError("half_flop_time: photon_number must be >= 0");
    return std::numbers::pi / (2.0 * coupling * std::sqrt(photon_number + 0.5));
}

// ---------------------------------------------------------------------------

namespace {

void require_vacuum(const StateVector& state, const char* where) {
    if (mode_purity(state, 0) < 1.0 - kPurityTolerance) {
        throw ProtocolError(std::string(where) + ": cavity mode is entangled with the atoms");
    }
    const auto p = photon_distribution(state, 0);
    const double norm2 = state.norm() * state.norm();
    if (p[0] < norm2 * (1.0 - kPurityTolerance)) {
        throw ProtocolError(std::string(where) + ": cavity mode is not in vacuum");
    }
}

}  // namespace

TwoLevelProtocol::TwoLevelProtocol(const TwoLevelConfig& config)
    : config_((config.validate(), config)),
      basis_(config.basis()),
      uncoupled_(build_two_level_hamiltonian(config, false)),
      coupled_(build_two_level_hamiltonian(config, true)),
      drift_step_(uncoupled_, config.free_interval),
      measure_step_(coupled_, config.measure_interval) {}

StateVector TwoLevelProtocol::drift(const StateVector& state) const {
    require_vacuum(state, "free_drift");
    return drift_step_.apply(state);
}

StateVector TwoLevelProtocol::drift_for(const StateVector& state, double duration) const {
    require_vacuum(state, "free_drift");
    return uncoupled_.apply(state, duration);
}

StateVector TwoLevelProtocol::measure(const StateVector& state) const {
    require_vacuum(state, "measurement_segment");
    return measure_step_.apply(replace_mode_state(state, 0, config_.photon_number));
}

CycleResult TwoLevelProtocol::cycle(const StateVector& state) const {
    const auto measured = measure(drift(state));
    const double truncated = population_at_or_above(measured, 0, config_.photon_number + 2);
    auto hit = project_photon_number(measured, 0, config_.photon_number);
    if (hit.empty()) {
        throw ProtocolError("zeno_cycle: success branch has zero probability");
    }
    return {replace_mode_state(*hit.state, 0, 0), hit.probability, truncated};
}

StateVector free_drift(const StateVector& state, const TwoLevelConfig& config) {
    return TwoLevelProtocol(config).drift(state);
}

StateVector measurement_segment(const StateVector& state, const TwoLevelConfig& config) {
    return TwoLevelProtocol(config).measure(state);
}

CycleResult zeno_cycle(const StateVector& state, const TwoLevelConfig& config) {
    return TwoLevelProtocol(config).cycle(state);
}

SurvivalTrace run_protocol(const TwoLevelConfig& config) {
    const TwoLevelProtocol protocol(config);
    const double period = config.cycle_period();
    const auto cycles = static_cast<long>(std::floor(config.final_time / period * (1.0 + 1e-12)));
    const auto pe = pe_analytic(config.half_difference, config.free_interval);

    SurvivalTrace trace;
    trace.out_of_regime = pe.out_of_regime;
    trace.times.reserve(static_cast<std::size_t>(cycles) + 2);
    auto record = [&](double t, double ps, double pe_cycle) {
        const auto closed = ps_analytic(config.half_difference, config.free_interval, config.measure_interval, t);
        trace.times.push_back(t);
        trace.p_success.push_back(ps);
        trace.p_error_per_cycle.push_back(pe_cycle);
        trace.analytic_p_s.push_back(closed.product);
        trace.analytic_p_s_exp.push_back(closed.exponential);
    };

    StateVector state = subradiant_state(config, 0);
    double ps = 1.0;
    record(0.0, ps, 0.0);
    for (long c = 1; c <= cycles; ++c) {
        auto step = protocol.cycle(state);
        ps *= step.success_probability;
        trace.max_truncation_population = std::max(trace.max_truncation_population, step.truncation_population);
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
    return trace;
}

ClosedForm pe_analytic(double half_difference, double free_interval) {
    const double pe = half_difference * half_difference * free_interval * free_interval;
    return {pe, pe > 1.0};
}

SurvivalClosedForm ps_analytic(double half_difference, double free_interval, double measure_interval,
                               double final_time) {
    const auto pe = pe_analytic(half_difference, free_interval);
    const double period = free_interval + measure_interval;
    SurvivalClosedForm out;
    out.out_of_regime = pe.out_of_regime;
    out.product = pe.out_of_regime ? std::numeric_limits<double>::quiet_NaN()
                                   : std::pow(1.0 - pe.value, final_time / period);
    out.exponential = std::exp(-half_difference * half_difference * period * final_time);
    return out;
}

}  // namespace zenolock
