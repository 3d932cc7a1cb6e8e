#include "zenolock/readout.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>

namespace zenolock {

using namespace four_level;

namespace {

constexpr std::size_t kAtomA = 0;
constexpr std::size_t kAtomB = 1;

void require_pair_basis(const StateVector& state, const char* where) {
    const auto& b = *state.basis();
    if (b.atom_count() != 2 || b.mode_count() != 0 || b.atom_levels(0) != 4 || b.atom_levels(1) != 4) {
        throw ReadoutError(std::string(where) + ": expected two four-level atoms and no modes");
    }
}

double level_energy(const FourLevelAtom& a, int level) {
    switch (level) {
        case kG1: return a.g1;
        case kG2: return a.g2;
        case kE1: return a.e1;
        default: return a.e2;
    }
}

bool excited(int level) { return level == kE1 || level == kE2; }

// u acting on one atom of an atoms-first basis.
StateVector apply_atom_unitary(const StateVector& state, std::size_t atom_index, const Eigen::Matrix4cd& u) {
    const auto& basis = *state.basis();
    const std::size_t slot = basis.atom_slot(atom_index);
    const std::size_t stride = basis.stride(slot);
    CVector out = CVector::Zero(state.amplitudes().size());
    for (std::size_t i = 0; i < basis.dimension(); ++i) {
        const cplx a = state[i];
        if (a == cplx{}) continue;
        const int from = basis.digit(i, slot);
        const std::size_t base = i - static_cast<std::size_t>(from) * stride;
        for (int to = 0; to < 4; ++to) {
            out[static_cast<Eigen::Index>(base + static_cast<std::size_t>(to) * stride)] += u(to, from) * a;
        }
    }
    return {state.basis(), std::move(out)};
}

CMatrix submatrix(const CMatrix& m, const std::vector<Eigen::Index>& rows, const std::vector<Eigen::Index>& cols) {
    CMatrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m(rows[r], cols[c]);
        }
    }
    return out;
}

CVector gather(const CVector& v, const std::vector<Eigen::Index>& idx) {
    CVector out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) out[static_cast<Eigen::Index>(k)] = v[idx[k]];
    return out;
}

// exp(-i H t) for a small Hermitian matrix, via its eigensystem.
class SmallPropagator {
public:
    explicit SmallPropagator(const CMatrix& h) : solver_(0.5 * (h + h.adjoint())) {}

    CVector apply(const CVector& v, double t) const {
        const CVector c = solver_.eigenvectors().adjoint() * v;
        const Eigen::VectorXd& w = solver_.eigenvalues();
        CVector phased(c.size());
        for (Eigen::Index k = 0; k < c.size(); ++k) phased[k] = std::polar(1.0, -w[k] * t) * c[k];
        return solver_.eigenvectors() * phased;
    }

private:
    Eigen::SelfAdjointEigenSolver<CMatrix> solver_;
};

struct EmissionSystem {
    BasisPtr basis;
    OperatorMatrix hamiltonian;
    OperatorMatrix lowering;
};

EmissionSystem emission_system(const ReadoutConfig& config) {
    auto basis = build_basis({SubsystemSpec::atom(4), SubsystemSpec::atom(4), SubsystemSpec::mode(config.emission_cutoff)});
    const FourLevelAtom avg = config.averaged();
    const double g2 = avg.g2 - avg.g1;
    auto h = zero_operator(basis);
    for (std::size_t atom : {kAtomA, kAtomB}) {
        h = h + atomic_projector(basis, atom, kE1, kE1) * config.detuning +
            atomic_projector(basis, atom, kE2, kE2) * config.detuning + atomic_projector(basis, atom, kG2, kG2) * g2 +
            exchange_coupling(basis, atom, kE1, kG1, 0, config.coupling / 2.0) +
            (atomic_projector(basis, atom, kE2, kG1) + atomic_projector(basis, atom, kG1, kE2)) * (config.drive / 2.0);
    }
    return {basis, std::move(h), annihilation(basis, 0)};
}

// Second-order Schrieffer-Wolff model. P holds the states with one excited atom
// (rotating-frame energy Delta'), Q the rest (0 or 2 Delta'). With R the first-order
// admixture of Q into P, psi(t) = e^{S} exp(-i H_eff t) e^{-S} psi(0).
class EffectiveEmission {
public:
    EffectiveEmission(const EmissionSystem& sys, const ReadoutConfig& config, const CVector& initial)
        : dim_(static_cast<Eigen::Index>(sys.basis->dimension())) {
        const auto& basis = *sys.basis;
        std::vector<int> excitations(basis.dimension());
        for (std::size_t i = 0; i < basis.dimension(); ++i) {
            const int n = excited(basis.digit(i, 0)) + excited(basis.digit(i, 1));
            excitations[i] = n;
            (n == 1 ? p_ : q_).push_back(static_cast<Eigen::Index>(i));
        }
        const CMatrix& h = sys.hamiltonian.entries();
        const CMatrix hpp = submatrix(h, p_, p_);
        const CMatrix hpq = submatrix(h, p_, q_);
        const CMatrix hqq = submatrix(h, q_, q_);
        const auto np = static_cast<Eigen::Index>(p_.size());
        const auto nq = static_cast<Eigen::Index>(q_.size());

        const double delta = config.detuning;
        r_ = (delta * CMatrix::Identity(nq, nq) - hqq).partialPivLu().solve(hpq.adjoint());
        const CMatrix heff = hpp + hpq * r_;

        // Q states shift through their own virtual excursions into P.
        CMatrix hqe = hqq;
        for (int level : {0, 2}) {
            std::vector<Eigen::Index> block;
            for (Eigen::Index k = 0; k < nq; ++k) {
                if (excitations[static_cast<std::size_t>(q_[static_cast<std::size_t>(k)])] == level) block.push_back(k);
            }
            if (block.empty()) continue;
            const double e = level * delta;
            CMatrix coupling(np, static_cast<Eigen::Index>(block.size()));
            for (std::size_t c = 0; c < block.size(); ++c) coupling.col(static_cast<Eigen::Index>(c)) = hpq.col(block[c]);
            const CMatrix shift =
                coupling.adjoint() * (e * CMatrix::Identity(np, np) - hpp).partialPivLu().solve(coupling);
            for (std::size_t a = 0; a < block.size(); ++a) {
                for (std::size_t b = 0; b < block.size(); ++b) {
                    hqe(block[a], block[b]) += shift(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
                }
            }
        }
        norm_ = CMatrix::Identity(np, np) - 0.5 * r_.adjoint() * r_;
        p_prop_.emplace(heff);
        q_prop_.emplace(hqe);
        const CVector initial_p = gather(initial, p_);
        dressed_p_ = norm_ * initial_p;
        dressed_q_ = -(r_ * initial_p);
    }

    CVector state_at(double t) const {
        const CVector ep = p_prop_->apply(dressed_p_, t);
        const CVector eq = q_prop_->apply(dressed_q_, t);
        const CVector sp = norm_ * ep - r_.adjoint() * eq;
        const CVector sq = r_ * ep + eq - 0.5 * r_ * (r_.adjoint() * eq);
        CVector out = CVector::Zero(dim_);
        for (std::size_t k = 0; k < p_.size(); ++k) out[p_[k]] = sp[static_cast<Eigen::Index>(k)];
        for (std::size_t k = 0; k < q_.size(); ++k) out[q_[k]] = sq[static_cast<Eigen::Index>(k)];
        return out;
    }

private:
    Eigen::Index dim_;
    std::vector<Eigen::Index> p_, q_;
    CMatrix r_, norm_;
    std::optional<SmallPropagator> p_prop_, q_prop_;
    CVector dressed_p_, dressed_q_;
};

struct ComplexTrace {
    std::vector<cplx> field;  // <a>, laser-referenced
    double max_multiphoton = 0.0;
    double max_top = 0.0;
};

ComplexTrace evolve_field(const StateVector& pair, const ReadoutConfig& config, EmissionModel model) {
    const auto sys = emission_system(config);
    const auto vacuum = StateVector::basis_state(build_basis({SubsystemSpec::mode(config.emission_cutoff)}), {0});
    const StateVector initial = tensor(pair, vacuum);
    const FourLevelAtom avg = config.averaged();
    const double beat = avg.e1 - avg.e2;

    std::optional<Propagator> full;
    std::optional<EffectiveEmission> effective;
    if (model == EmissionModel::Full) {
        full.emplace(sys.hamiltonian, Propagator::Strategy::Blocked);
    } else {
        effective.emplace(sys, config, initial.amplitudes());
    }

    ComplexTrace out;
    out.field.reserve(config.readout_times.size());
    for (double t : config.readout_times) {
        const StateVector psi = full ? full->apply(initial, t) : StateVector(sys.basis, effective->state_at(t));
        out.field.push_back(expectation(psi, sys.lowering) * std::polar(1.0, -beat * t));
        out.max_multiphoton = std::max(out.max_multiphoton, population_at_or_above(psi, 0, 2));
        out.max_top = std::max(out.max_top, population_at_or_above(psi, 0, config.emission_cutoff));
    }
    return out;
}

double resolve_window(const ReadoutConfig& config, const std::vector<double>& envelope) {
    if (config.fit_window > 0.0) return config.fit_window;
    const auto peak = std::max_element(envelope.begin(), envelope.end());
    return config.readout_times[static_cast<std::size_t>(peak - envelope.begin())];
}

}  // namespace

FourLevelAtom ReadoutConfig::averaged() const {
    return {(atom_a.g1 + atom_b.g1) / 2.0, (atom_a.g2 + atom_b.g2) / 2.0, (atom_a.e1 + atom_b.e1) / 2.0,
            (atom_a.e2 + atom_b.e2) / 2.0};
}

double ReadoutConfig::clock_frequency() const {
    const auto a = averaged();
    return a.e1 + a.g1 - a.e2 - a.g2;
}

void ReadoutConfig::validate() const {
    if (!(detuning != 0.0) || !std::isfinite(detuning)) throw ReadoutError("detuning must be finite and nonzero");
    if (!std::isfinite(drive) || !std::isfinite(coupling)) throw ReadoutError("drive and coupling must be finite");
    if (emission_cutoff < 1) throw ReadoutError("emission cutoff must be at least 1");
    if (readout_times.empty()) throw ReadoutError("readout time grid is empty");
    for (std::size_t i = 0; i < readout_times.size(); ++i) {
        if (!(readout_times[i] >= 0.0) || !std::isfinite(readout_times[i]) ||
            (i > 0 && readout_times[i] <= readout_times[i - 1])) {
            throw ReadoutError("readout times must be finite, non-negative and increasing");
        }
    }
    if (!std::isfinite(elapsed_time) || !std::isfinite(fit_window)) throw ReadoutError("non-finite time");
}

std::vector<double> ReadoutConfig::uniform_grid(double end, std::size_t points) {
    std::vector<double> grid(points);
    for (std::size_t k = 0; k < points; ++k) {
        grid[k] = points > 1 ? end * static_cast<double>(k) / static_cast<double>(points - 1) : 0.0;
    }
    return grid;
}

BasisPtr readout_atom_basis() { return build_basis({SubsystemSpec::atom(4), SubsystemSpec::atom(4)}); }

StateVector locked_pair_state() {
    return StateVector::superposition(readout_atom_basis(),
                                      {{{kE1, kG1}, 1.0}, {{kG1, kE1}, -1.0}, {{kE2, kG2}, 1.0}, {{kG2, kE2}, -1.0}});
}

StateVector accumulate_clock_phase(const StateVector& state, double elapsed_time, const ReadoutConfig& config) {
    require_pair_basis(state, "accumulate_clock_phase");
    const auto avg = config.averaged();
    const auto& basis = *state.basis();
    CVector out = state.amplitudes();
    for (std::size_t i = 0; i < basis.dimension(); ++i) {
        const double e = level_energy(avg, basis.digit(i, 0)) + level_energy(avg, basis.digit(i, 1));
        out[static_cast<Eigen::Index>(i)] *= std::polar(1.0, -e * elapsed_time);
    }
    const cplx ref = out[static_cast<Eigen::Index>(basis.index(std::vector<int>{kE1, kG1}))];
    if (std::abs(ref) > 0.0) out *= std::conj(ref) / std::abs(ref);
    return {state.basis(), std::move(out)};
}

StateVector flip_sign_atom_b(const StateVector& state, int level) {
    require_pair_basis(state, "flip_sign_atom_b");
    if (level < 0 || level > 3) throw ReadoutError("flip_sign_atom_b: level must be in 0..3");
    Eigen::Matrix4cd u = Eigen::Matrix4cd::Identity();
    u(level, level) = -1.0;
    return apply_atom_unitary(state, kAtomB, u);
}

StateVector mix_ground_levels(const StateVector& state) {
    require_pair_basis(state, "mix_ground_levels");
    const double s = std::numbers::sqrt2 / 2.0;
    Eigen::Matrix4cd u = Eigen::Matrix4cd::Identity();
    u(kG1, kG1) = s;
    u(kG2, kG1) = s;
    u(kG1, kG2) = -s;
    u(kG2, kG2) = s;
    return apply_atom_unitary(apply_atom_unitary(state, kAtomA, u), kAtomB, u);
}

PostSelection postselect_not_g2(const StateVector& state) {
    require_pair_basis(state, "postselect_not_g2");
    const auto& basis = *state.basis();
    CVector kept = state.amplitudes();
    for (std::size_t i = 0; i < basis.dimension(); ++i) {
        if (basis.digit(i, 0) == kG2 || basis.digit(i, 1) == kG2) kept[static_cast<Eigen::Index>(i)] = 0.0;
    }
    const double p = kept.squaredNorm();
    if (p < kZeroProbability) throw ReadoutError("post-selection outcome has zero probability");
    return {StateVector(state.basis(), kept / std::sqrt(p)), p};
}

double wrap_phase(double phase) {
    constexpr double pi = std::numbers::pi;
    double w = std::remainder(phase, 2.0 * pi);
    if (w <= -pi) w += 2.0 * pi;
    return w;
}

double extract_phase(std::span<const double> times, std::span<const double> values, double frequency,
                     double window_end, std::span<const double> envelope) {
    if (times.size() != values.size() || (!envelope.empty() && envelope.size() != times.size())) {
        throw ReadoutError("extract_phase: length mismatch");
    }
    Eigen::Matrix2d normal = Eigen::Matrix2d::Zero();
    Eigen::Vector2d rhs = Eigen::Vector2d::Zero();
    double scale = 0.0;
    for (std::size_t k = 0; k < times.size() && times[k] <= window_end; ++k) {
        const double env = envelope.empty() ? 1.0 : envelope[k];
        const Eigen::Vector2d basis{env * std::cos(frequency * times[k]), env * std::sin(frequency * times[k])};
        normal += basis * basis.transpose();
        rhs += basis * values[k];
        scale = std::max(scale, std::abs(values[k]));
    }
    if (!(scale > 1e-14) || std::abs(normal.determinant()) <= 1e-12 * normal.squaredNorm()) {
        throw ReadoutError("extract_phase: degenerate fit");
    }
    const Eigen::Vector2d c = normal.ldlt().solve(rhs);
    return wrap_phase(std::atan2(c[0], c[1]));
}

double carrier_frequency(std::span<const double> times, std::span<const std::complex<double>> field,
                         double window_end) {
    if (times.size() != field.size()) throw ReadoutError("carrier_frequency: length mismatch");
    double sw = 0, st = 0, sp = 0, stt = 0, stp = 0;
    double unwrapped = 0.0, previous = 0.0;
    bool started = false;
    for (std::size_t k = 0; k < times.size() && times[k] <= window_end; ++k) {
        if (times[k] < window_end / 4.0) continue;
        const double arg = std::arg(field[k]);
        unwrapped = started ? unwrapped + wrap_phase(arg - previous) : arg;
        previous = arg;
        started = true;
        const double w = std::abs(field[k]);
        sw += w;
        st += w * times[k];
        sp += w * unwrapped;
        stt += w * times[k] * times[k];
        stp += w * times[k] * unwrapped;
    }
    const double det = sw * stt - st * st;
    if (!(det > 0.0)) throw ReadoutError("carrier_frequency: too few samples in the window");
    return -(sw * stp - st * sp) / det;
}

FieldTrace emit_field_trace(const StateVector& state, const ReadoutConfig& config, EmissionModel model) {
    require_pair_basis(state, "emit_field_trace");
    config.validate();
    const auto field = evolve_field(state, config, model);
    if (field.max_top > kEmissionCutoffLimit) {
        throw ReadoutError("emission mode population reaches the Fock cutoff; raise emission_cutoff");
    }
    FieldTrace trace;
    trace.times = config.readout_times;
    trace.max_multiphoton_population = field.max_multiphoton;
    double peak = 0.0;
    for (const cplx z : field.field) {
        trace.quadrature.push_back(2.0 * z.real());
        trace.envelope.push_back(2.0 * std::abs(z));
        peak = std::max(peak, std::abs(z));
    }
    trace.fit_window = resolve_window(config, trace.envelope);
    if (peak <= 1e-14) return trace;
    trace.fitted_frequency = carrier_frequency(trace.times, field.field, trace.fit_window);
    trace.fitted_phase =
        extract_phase(trace.times, trace.quadrature, trace.fitted_frequency, trace.fit_window, trace.envelope);
    return trace;
}

ReadoutRun run_readout(const ReadoutConfig& config, EmissionModel model) {
    config.validate();
    auto accumulated = accumulate_clock_phase(locked_pair_state(), config.elapsed_time, config);
    auto superradiant = flip_sign_atom_b(flip_sign_atom_b(accumulated, kE1), kE2);
    auto mixed = mix_ground_levels(superradiant);
    auto selected = postselect_not_g2(mixed);
    auto trace = emit_field_trace(selected.state, config, model);
    return {std::move(accumulated), std::move(superradiant), std::move(mixed), std::move(selected), std::move(trace)};
}

double effective_model_deviation(const ReadoutConfig& config) {
    const auto selected = postselect_not_g2(
        mix_ground_levels(flip_sign_atom_b(flip_sign_atom_b(
            accumulate_clock_phase(locked_pair_state(), config.elapsed_time, config), kE1), kE2)));
    const auto full = emit_field_trace(selected.state, config, EmissionModel::Full);
    const auto effective = emit_field_trace(selected.state, config, EmissionModel::Effective);
    double diff = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < full.times.size() && full.times[k] <= full.fit_window; ++k) {
        diff = std::max(diff, std::abs(full.quadrature[k] - effective.quadrature[k]));
        scale = std::max(scale, std::abs(full.quadrature[k]));
    }
    if (!(scale > 0.0)) throw ReadoutError("effective_model_deviation: full trace vanishes");
    return diff / scale;
}

}  // namespace zenolock
