// zeno_two_level.hpp - two two-level atoms in one cavity mode, locked in the
// subradiant state by periodic photon-injection measurements.
//
// Basis: [Atom(2) A, Atom(2) B, Mode(fock_cutoff)], level 0 = G, level 1 = E.
// Frequencies are angular and dimensionless, hbar = 1.

#pragma once

#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "zenolock/hilbert.hpp"

namespace zenolock {

class ProtocolError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace two_level {
inline constexpr int kG = 0;
inline constexpr int kE = 1;
}  // namespace two_level

struct TwoLevelConfig {
    double cavity_frequency = 10.0;  // omega
    double common_offset = 0.0;      // delta
    double half_difference = 2.0;    // Delta: omega_A = omega + delta + Delta, omega_B = omega + delta - Delta
    double coupling = 2.0;           // Omega
    int photon_number = 12;          // n
    double free_interval = 0.001;    // tau
    double measure_interval = 0.0;   // tau_m
    double final_time = 1.0;         // t_f
    int fock_cutoff = 15;

    double omega_a() const { return cavity_frequency + common_offset + half_difference; }
    double omega_b() const { return cavity_frequency + common_offset - half_difference; }
    double cycle_period() const { return free_interval + measure_interval; }
    void validate() const;
    BasisPtr basis() const;

    /// Schedule with cycle period tau + tau_m and tau_m set to `measure_fraction` of it;
    /// Omega is chosen so tau_m is exactly one half flop at photon number n.
    static TwoLevelConfig with_schedule(double half_difference, double cycle_period, double final_time,
                                        int photon_number = 12, double measure_fraction = 0.005);
};

/// Rotating-wave Hamiltonian of both atoms and the mode; coupled = false drops the atom-field terms.
OperatorMatrix build_two_level_hamiltonian(const TwoLevelConfig& config, bool coupled);

/// Total excitation number |E><E|_A + |E><E|_B + n.
OperatorMatrix two_level_excitation_operator(const BasisPtr& basis);

/// (|EG> - |GE>)/sqrt2 (x) |k>.
StateVector subradiant_state(const TwoLevelConfig& config, int photons);
/// (|EG> + |GE>)/sqrt2 (x) |k>.
StateVector superradiant_state(const TwoLevelConfig& config, int photons);

/// Smallest positive zero of cos(Omega tau_m sqrt(n + 1/2)).
double half_flop_time(double coupling, int photon_number);

/// Evolution under the uncoupled Hamiltonian for tau; the mode must be in vacuum.
StateVector free_drift(const StateVector& state, const TwoLevelConfig& config);

/// Injects n photons (mode must be unentangled vacuum) and evolves the coupled
/// Hamiltonian for tau_m. The returned state is generally atom-field entangled.
StateVector measurement_segment(const StateVector& state, const TwoLevelConfig& config);

struct CycleResult {
    StateVector state;           // renormalised success branch, mode back in vacuum
    double success_probability;  // Born probability of finding n photons
    double truncation_population;  // population in Fock levels >= n+2 before projection
};

CycleResult zeno_cycle(const StateVector& state, const TwoLevelConfig& config);

struct SurvivalTrace {
    std::vector<double> times;
    std::vector<double> p_success;
    std::vector<double> p_error_per_cycle;
    std::vector<double> analytic_p_s;      // product form (1 - P_E)^{t / (tau + tau_m)}
    std::vector<double> analytic_p_s_exp;  // exponential form
    bool out_of_regime = false;
    bool valid = true;                     // Fock truncation check passed
    double max_truncation_population = 0.0;
    std::optional<StateVector> final_state;  // success branch at t_f
};

inline constexpr double kTruncationLimit = 1e-8;

/// Iterates zeno_cycle up to t_f. A trailing interval shorter than one cycle is
/// applied as free drift only and recorded at t_f with unchanged P_S.
SurvivalTrace run_protocol(const TwoLevelConfig& config);

struct ClosedForm {
    double value;
    bool out_of_regime;  // P_E > 1: closed forms meaningless
};

/// P_E = Delta^2 tau^2.
ClosedForm pe_analytic(double half_difference, double free_interval);

struct SurvivalClosedForm {
    double product;      // (1 - P_E)^{t_f / (tau + tau_m)}, NaN when out of regime
    double exponential;  // exp(-Delta^2 (tau + tau_m) t_f)
    bool out_of_regime;
};

SurvivalClosedForm ps_analytic(double half_difference, double free_interval, double measure_interval,
                               double final_time);

/// Precomputed drift / measurement propagators for repeated cycles.
class TwoLevelProtocol {
public:
    explicit TwoLevelProtocol(const TwoLevelConfig& config);

    const TwoLevelConfig& config() const { return config_; }
    const BasisPtr& basis() const { return basis_; }
    StateVector drift(const StateVector& state) const;
    StateVector drift_for(const StateVector& state, double duration) const;
    StateVector measure(const StateVector& state) const;
    CycleResult cycle(const StateVector& state) const;

private:
    TwoLevelConfig config_;
    BasisPtr basis_;
    Propagator uncoupled_;
    Propagator coupled_;
    SegmentUnitary drift_step_;
    SegmentUnitary measure_step_;
};

}  // namespace zenolock
