// readout.hpp - clock readout for a locked four-level pair: phase accumulation,
// conversion to superradiant states, ground-level mixing, post-selection and the
// field emitted in a laser-assisted Raman transition.
//
// Atom-only states live on [Atom(4) A, Atom(4) B]; emission adds one Mode(cutoff).
// Levels follow four_level: G1 = 0, G2 = 1, E1 = 2, E2 = 3.
//
// Emission frame: the laser sits Delta' below E2 <-> G1 and the emission mode is
// Raman resonant (Delta' below E1 <-> G1), so in the rotating frame both excited
// levels are at Delta' and the ground level G1 at 0. Quadratures are referenced to
// the laser, which puts the emitted carrier near E1 - E2 (averaged energies).

#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "zenolock/zeno_multilevel.hpp"

namespace zenolock {

class ReadoutError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ReadoutConfig {
    FourLevelAtom atom_a;
    FourLevelAtom atom_b;
    double elapsed_time = 0.0;  // t_f
    double detuning = 10.0;     // Delta'
    double drive = 1.0;         // A
    double coupling = 2.0;      // Omega
    int emission_cutoff = 2;
    std::vector<double> readout_times = uniform_grid(12.0, 1201);
    /// End of the phase-fit window; <= 0 selects the first envelope maximum on the grid.
    double fit_window = 0.0;

    /// Level energies averaged over the two atoms.
    FourLevelAtom averaged() const;
    /// (E1 + G1 - E2 - G2) of the averaged levels.
    double clock_frequency() const;
    void validate() const;

    static std::vector<double> uniform_grid(double end, std::size_t points);
};

BasisPtr readout_atom_basis();

/// [(|E1 G1> - |G1 E1>) + (|E2 G2> - |G2 E2>)] / 2 on the atom-only basis.
StateVector locked_pair_state();

/// Free evolution for t_f under the averaged level energies, with the global phase
/// fixed so the |E1 G1> amplitude is real and positive.
StateVector accumulate_clock_phase(const StateVector& state, double elapsed_time, const ReadoutConfig& config);

/// Multiplies every component with atom B in `level` by -1.
StateVector flip_sign_atom_b(const StateVector& state, int level);

/// G1 -> (G1 + G2)/sqrt2, G2 -> (G2 - G1)/sqrt2 on both atoms.
StateVector mix_ground_levels(const StateVector& state);

struct PostSelection {
    StateVector state;
    double probability;
};

/// Keeps components with neither atom in G2 and renormalises.
PostSelection postselect_not_g2(const StateVector& state);

enum class EmissionModel {
    Full,       // exact evolution of atoms + emission mode under the driven Hamiltonian
    Effective,  // adiabatic elimination onto the singly-excited manifold
};

struct FieldTrace {
    std::vector<double> times;
    std::vector<double> quadrature;  // <a + a^dagger>
    std::vector<double> envelope;    // 2 |<a>|
    double fitted_phase = std::numeric_limits<double>::quiet_NaN();      // (-pi, pi]
    double fitted_frequency = std::numeric_limits<double>::quiet_NaN();  // carrier of the quadrature
    double fit_window = 0.0;
    /// Largest population with two or more photons in the emission mode.
    double max_multiphoton_population = 0.0;

    bool has_fit() const { return !std::isnan(fitted_phase); }
};

inline constexpr double kEmissionCutoffLimit = 1e-3;

/// Evolves the post-selected pair with the emission mode in vacuum. Throws when the
/// top Fock level of the emission mode gets more than kEmissionCutoffLimit.
/// The fit is skipped (NaN) when the trace vanishes.
FieldTrace emit_field_trace(const StateVector& state, const ReadoutConfig& config,
                            EmissionModel model = EmissionModel::Full);

/// Least squares of env(t) [c1 cos(w t) + c2 sin(w t)] on samples with t <= window_end;
/// returns phi with values ~ sin(w t + phi). An empty envelope means env = 1.
double extract_phase(std::span<const double> times, std::span<const double> values, double frequency,
                     double window_end, std::span<const double> envelope = {});

/// Carrier frequency from the slope of the unwrapped phase of a complex trace,
/// weighted by its magnitude, over [window_end / 4, window_end].
double carrier_frequency(std::span<const double> times, std::span<const std::complex<double>> field,
                         double window_end);

struct ReadoutRun {
    StateVector accumulated;   // relative phase omega_clock t_f
    StateVector superradiant;  // after the sign flips on atom B
    StateVector mixed;
    PostSelection selected;
    FieldTrace trace;
};

/// Full chain starting from locked_pair_state().
ReadoutRun run_readout(const ReadoutConfig& config, EmissionModel model = EmissionModel::Full);

/// Largest max-norm deviation of the effective trace from the full one over the fit
/// window, relative to the largest full quadrature there.
double effective_model_deviation(const ReadoutConfig& config);

/// Wraps to (-pi, pi].
double wrap_phase(double phase);

}  // namespace zenolock
