// zeno_multilevel.hpp - three-level V atoms (to exhibit the shared-ground-state
// leakage) and four-level atoms locked by two cavity modes.
//
// Four-level basis: [Atom(4) A, Atom(4) B, Mode 1, Mode 2] with levels
// G1 = 0, G2 = 1, E1 = 2, E2 = 3. Mode 1 couples E1 <-> G1, mode 2 couples E2 <-> G2.
// Three-level basis: [Atom(3) A, Atom(3) B, Mode 1, Mode 2] with G = 0, E1 = 1, E2 = 2.

#pragma once

#include "zenolock/zeno_two_level.hpp"

namespace zenolock {

namespace four_level {
inline constexpr int kG1 = 0;
inline constexpr int kG2 = 1;
inline constexpr int kE1 = 2;
inline constexpr int kE2 = 3;
}  // namespace four_level

namespace three_level {
inline constexpr int kG = 0;
inline constexpr int kE1 = 1;
inline constexpr int kE2 = 2;
}  // namespace three_level

struct FourLevelAtom {
    double g1 = 0.0;
    double g2 = 0.0;
    double e1 = 120.0;
    double e2 = 110.0;

    double transition(int manifold) const { return manifold == 1 ? e1 - g1 : e2 - g2; }
};

struct FourLevelConfig {
    double mode1_frequency = 120.0;
    double mode2_frequency = 110.0;
    FourLevelAtom atom_a;
    FourLevelAtom atom_b;
    double coupling = 2.0;
    int photon_number = 8;
    double free_interval = 0.001;
    double measure_interval = 0.0;
    double final_time = 1.0;
    int fock_cutoff1 = 10;
    int fock_cutoff2 = 10;

    /// Delta_k = [(E_kA - G_kA) - (E_kB - G_kB)] / 2 for manifold k in {1, 2}.
    double delta(int manifold) const;
    /// |omega_k - mean transition k|.
    double resonance_mismatch(int manifold) const;
    bool resonant(double tolerance = 1e-9) const;
    double cycle_period() const { return free_interval + measure_interval; }
    void validate() const;
    BasisPtr basis() const;

    /// Atoms split symmetrically by Delta_1, Delta_2 about transitions 120 and 110 with
    /// resonant modes; tau_m is `measure_fraction` of the period and one half flop.
    static FourLevelConfig symmetric(double delta1, double delta2, double cycle_period, double final_time,
                                     int photon_number = 8, double measure_fraction = 0.005);
};

struct ThreeLevelAtom {
    double g = 0.0;
    double e1 = 120.0;
    double e2 = 110.0;
};

struct ThreeLevelConfig {
    double mode1_frequency = 120.0;
    double mode2_frequency = 110.0;
    ThreeLevelAtom atom_a;
    ThreeLevelAtom atom_b;
    double coupling = 2.0;
    int fock_cutoff1 = 10;
    int fock_cutoff2 = 10;

    BasisPtr basis() const;
};

/// V system: E1 <-> G through mode 1 and E2 <-> G through mode 2, coupling Omega/2 each.
OperatorMatrix build_three_level_hamiltonian(const ThreeLevelConfig& config, bool coupled = true);
/// E1 <-> G1 through mode 1 and E2 <-> G2 through mode 2 only.
OperatorMatrix build_four_level_hamiltonian(const FourLevelConfig& config, bool coupled = true);

/// Excitation number of manifold k: atoms in E_k plus photons in mode k.
OperatorMatrix three_level_excitation_operator(const BasisPtr& basis, int manifold);
OperatorMatrix four_level_excitation_operator(const BasisPtr& basis, int manifold);

/// [(|E1 G> - |G E1>) + (|E2 G> - |G E2>)] / 2 with both modes at k1, k2 photons.
StateVector initial_state_three(const ThreeLevelConfig& config, int photons1 = 0, int photons2 = 0);
/// [(|E1 G1> - |G1 E1>) + (|E2 G2> - |G2 E2>)] / 2 with both modes at k1, k2 photons.
StateVector initial_state_four(const FourLevelConfig& config, int photons1 = 0, int photons2 = 0);

/// (|E1 G> - |G E1>)/sqrt2 |n>|n>, evolved for tau_m; returns the probability that
/// mode 2 no longer holds n photons (absorption into |E1 E2>, |E2 E1> and onward).
double three_level_leakage(const ThreeLevelConfig& config, int photon_number, double measure_interval);
/// The same quantity for four-level atoms prepared in (|E1 G1> - |G1 E1>)/sqrt2 |n>|n>.
double four_level_leakage(const FourLevelConfig& config, int photon_number, double measure_interval);

/// Population with one atom in {G1, E1} and the other in {G2, E2}.
double cross_manifold_population(const StateVector& state);

/// P_E = (w Delta_1^2 + (1 - w) Delta_2^2) tau^2 where w is the weight of manifold 1
/// in the initial superposition (1/2 for the balanced state).
ClosedForm pe_four_level(double delta1, double delta2, double free_interval, double manifold1_weight = 0.5);
SurvivalClosedForm ps_four_level(double delta1, double delta2, double free_interval, double measure_interval,
                                 double final_time);

struct FourLevelCycle {
    StateVector state;
    double success_probability;  // both modes found with n photons
    double truncation_population;
    double cross_population;
};

class FourLevelProtocol {
public:
    explicit FourLevelProtocol(const FourLevelConfig& config);

    const FourLevelConfig& config() const { return config_; }
    const BasisPtr& basis() const { return basis_; }
    StateVector drift(const StateVector& state) const;
    StateVector drift_for(const StateVector& state, double duration) const;
    /// Injects n photons into both (vacuum) modes and evolves the coupled Hamiltonian for tau_m.
    StateVector measure(const StateVector& state) const;
    FourLevelCycle cycle(const StateVector& state) const;

private:
    FourLevelConfig config_;
    BasisPtr basis_;
    Propagator uncoupled_;
    Propagator coupled_;
    SegmentUnitary drift_step_;
    SegmentUnitary measure_step_;
};

struct FourLevelTrace {
    SurvivalTrace survival;
    double max_cross_population = 0.0;
    /// cos(Omega tau_m sqrt(n + 1/2)) for manifold 2 with manifold 1's tau_m.
    double manifold2_residual_cosine = 0.0;
    bool resonant = true;
};

FourLevelTrace run_four_level_protocol(const FourLevelConfig& config);

}  // namespace zenolock
