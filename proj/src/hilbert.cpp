#include "zenolock/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

namespace zenolock {

namespace {

using Index = Eigen::Index;

Index as_index(std::size_t i) { return static_cast<Index>(i); }

void require_same_basis(const BasisPtr& a, const BasisPtr& b, const char* what) {
    if (a != b && !(*a == *b)) {
        throw HilbertError(std::string(what) + ": basis mismatch");
    }
}

// Embeds a local operator given as (row, col, value) triples on one slot.
struct LocalEntry {
    int row;
    int col;
    cplx value;
};

OperatorMatrix embed(const BasisPtr& basis, std::size_t slot, std::span<const LocalEntry> local) {
    const std::size_t dim = basis->dimension();
    const std::size_t stride = basis->stride(slot);
    CMatrix m = CMatrix::Zero(as_index(dim), as_index(dim));
    for (std::size_t i = 0; i < dim; ++i) {
        const int d = basis->digit(i, slot);
        for (const auto& e : local) {
            if (e.col != d) continue;
            const std::size_t target = i + stride * static_cast<std::size_t>(e.row) - stride * static_cast<std::size_t>(d);
            m(as_index(target), as_index(i)) += e.value;
        }
    }
    return {basis, std::move(m)};
}

template <typename Expr>
double max_abs(const Expr& m) {
    return m.size() == 0 ? 0.0 : std::sqrt(m.cwiseAbs2().maxCoeff());
}

// Union-find over the nonzero off-diagonal pattern of H.
std::vector<std::vector<Index>> connected_blocks(const CMatrix& h) {
    const Index n = h.rows();
    std::vector<Index> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), Index{0});
    auto find = [&](Index x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            auto& p = parent[static_cast<std::size_t>(x)];
            p = parent[static_cast<std::size_t>(p)];
            x = p;
        }
        return x;
    };
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < n; ++i) {
            if (i != j && h(i, j) != cplx{0.0, 0.0}) {
                const Index a = find(i), b = find(j);
                if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
            }
        }
    }
    std::vector<std::vector<Index>> groups(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) groups[static_cast<std::size_t>(find(i))].push_back(i);
    std::vector<std::vector<Index>> blocks;
    for (auto& g : groups) {
        if (!g.empty()) blocks.push_back(std::move(g));
    }
    return blocks;
}

Propagator::Block diagonalize(const CMatrix& h, std::vector<Index> indices) {
    const Index k = static_cast<Index>(indices.size());
    CMatrix sub(k, k);
    for (Index a = 0; a < k; ++a) {
        for (Index b = 0; b < k; ++b) sub(a, b) = h(indices[a], indices[b]);
    }
    Propagator::Block block;
    block.indices = std::move(indices);
    if (k == 1) {
        block.energies = Eigen::VectorXd::Constant(1, sub(0, 0).real());
        block.vectors = CMatrix::Identity(1, 1);
        return block;
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(sub);
    if (solver.info() != Eigen::Success) {
        throw HilbertError("evolve: eigendecomposition failed");
    }
    block.energies = solver.eigenvalues();
    block.vectors = solver.eigenvectors();
    return block;
}

// Calls f(base) for every index whose digit at `slot` is 0; base + m * stride
// then runs over the slot's occupancies with the other digits fixed.
template <typename F>
void for_each_fiber(const ProductBasis& basis, std::size_t slot, F&& f) {
    const std::size_t stride = basis.stride(slot);
    const std::size_t block = stride * static_cast<std::size_t>(basis.subsystem(slot).dimension());
    for (std::size_t hi = 0; hi < basis.dimension(); hi += block) {
        for (std::size_t lo = 0; lo < stride; ++lo) f(hi + lo);
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// ProductBasis

ProductBasis::ProductBasis(std::vector<SubsystemSpec> specs) {
    if (specs.empty()) throw HilbertError("build_basis: empty subsystem list");
    for (const auto& s : specs) {
        if (s.kind == SubsystemKind::Atom && (s.size < 2 || s.size > 4)) {
            throw HilbertError("build_basis: atom level count must be 2, 3 or 4 (got " + std::to_string(s.size) + ")");
        }
        if (s.kind == SubsystemKind::Mode && s.size < 1) {
            throw HilbertError("build_basis: mode cutoff must be >= 1 (got " + std::to_string(s.size) + ")");
        }
    }
    std::stable_partition(specs.begin(), specs.end(),
                          [](const SubsystemSpec& s) { return s.kind == SubsystemKind::Atom; });
    specs_ = std::move(specs);
    atom_count_ = static_cast<std::size_t>(std::count_if(
        specs_.begin(), specs_.end(), [](const SubsystemSpec& s) { return s.kind == SubsystemKind::Atom; }));
    strides_.assign(specs_.size(), 1);
    dimension_ = 1;
    for (std::size_t k = specs_.size(); k-- > 0;) {
        strides_[k] = dimension_;
        dimension_ *= static_cast<std::size_t>(specs_[k].dimension());
    }
}

std::size_t ProductBasis::atom_slot(std::size_t atom_index) const {
    if (atom_index >= atom_count_) {
        throw HilbertError("atom index " + std::to_string(atom_index) + " does not name an atom");
    }
    return atom_index;
}

std::size_t ProductBasis::mode_slot(std::size_t mode_index) const {
    if (mode_index >= mode_count()) {
        throw HilbertError("mode index " + std::to_string(mode_index) + " does not name a mode");
    }
    return atom_count_ + mode_index;
}

std::vector<int> ProductBasis::digits(std::size_t index) const {
    std::vector<int> out(specs_.size());
    for (std::size_t k = 0; k < specs_.size(); ++k) out[k] = digit(index, k);
    return out;
}

std::size_t ProductBasis::index(std::span<const int> digits) const {
    if (digits.size() != specs_.size()) throw HilbertError("multi-index has wrong arity");
    std::size_t idx = 0;
    for (std::size_t k = 0; k < specs_.size(); ++k) {
        if (digits[k] < 0 || digits[k] >= specs_[k].dimension()) {
            throw HilbertError("multi-index digit out of range at slot " + std::to_string(k));
        }
        idx += strides_[k] * static_cast<std::size_t>(digits[k]);
    }
    return idx;
}

BasisPtr build_basis(std::vector<SubsystemSpec> specs) {
    return std::make_shared<const ProductBasis>(std::move(specs));
}

// ---------------------------------------------------------------------------
// StateVector

StateVector::StateVector(BasisPtr basis, CVector amplitudes)
    : basis_(std::move(basis)), amplitudes_(std::move(amplitudes)) {
    if (!basis_) throw HilbertError("state without basis");
    if (static_cast<std::size_t>(amplitudes_.size()) != basis_->dimension()) {
        throw HilbertError("state length does not match basis dimension");
    }
}

StateVector StateVector::basis_state(BasisPtr basis, std::initializer_list<int> digits) {
    CVector v = CVector::Zero(as_index(basis->dimension()));
    v[as_index(basis->index(std::span<const int>(digits.begin(), digits.size())))] = 1.0;
    return {std::move(basis), std::move(v)};
}

StateVector StateVector::superposition(
    BasisPtr basis, std::initializer_list<std::pair<std::initializer_list<int>, cplx>> terms) {
    CVector v = CVector::Zero(as_index(basis->dimension()));
    for (const auto& [digits, weight] : terms) {
        v[as_index(basis->index(std::span<const int>(digits.begin(), digits.size())))] += weight;
    }
    return StateVector(std::move(basis), std::move(v)).normalized();
}

cplx StateVector::amplitude(std::initializer_list<int> digits) const {
    return amplitudes_[as_index(basis_->index(std::span<const int>(digits.begin(), digits.size())))];
}

StateVector StateVector::normalized() const {
    const double n = norm();
    if (n == 0.0) throw HilbertError("cannot normalise the zero vector");
    return {basis_, amplitudes_ / n};
}

cplx inner(const StateVector& bra, const StateVector& ket) {
    require_same_basis(bra.basis(), ket.basis(), "inner");
    return bra.amplitudes().dot(ket.amplitudes());
}

double fidelity(const StateVector& a, const StateVector& b) { return std::abs(inner(a, b)); }

StateVector tensor(const StateVector& left, const StateVector& right) {
    std::vector<SubsystemSpec> specs;
    const auto& lb = *left.basis();
    const auto& rb = *right.basis();
    if (lb.mode_count() > 0 && rb.atom_count() > 0) {
        throw HilbertError("tensor: right factor atoms would be reordered before left factor modes");
    }
    for (std::size_t k = 0; k < lb.subsystem_count(); ++k) specs.push_back(lb.subsystem(k));
    for (std::size_t k = 0; k < rb.subsystem_count(); ++k) specs.push_back(rb.subsystem(k));
    auto basis = build_basis(std::move(specs));
    CVector v(as_index(basis->dimension()));
    const Index rd = as_index(rb.dimension());
    for (Index i = 0; i < left.amplitudes().size(); ++i) {
        v.segment(i * rd, rd) = left.amplitudes()[i] * right.amplitudes();
    }
    return {std::move(basis), std::move(v)};
}

// ---------------------------------------------------------------------------
// OperatorMatrix

OperatorMatrix::OperatorMatrix(BasisPtr basis, CMatrix entries)
    : basis_(std::move(basis)), entries_(std::move(entries)) {
    if (!basis_) throw HilbertError("operator without basis");
    const auto dim = as_index(basis_->dimension());
    if (entries_.rows() != dim || entries_.cols() != dim) {
        throw HilbertError("operator shape does not match basis dimension");
    }
    hermitian_ = max_abs(entries_ - entries_.adjoint()) < kFlagTolerance;
    // Column norms first: rules out almost every non-unitary matrix in O(n^2).
    const bool unit_columns =
        dim == 0 || (entries_.colwise().squaredNorm().array() - 1.0).abs().maxCoeff() < kFlagTolerance;
    unitary_ = unit_columns && max_abs(entries_.adjoint() * entries_ - CMatrix::Identity(dim, dim)) < kFlagTolerance;
}

StateVector OperatorMatrix::apply(const StateVector& state) const {
    require_same_basis(basis_, state.basis(), "apply");
    return {basis_, entries_ * state.amplitudes()};
}

OperatorMatrix OperatorMatrix::operator+(const OperatorMatrix& rhs) const {
    require_same_basis(basis_, rhs.basis_, "operator+");
    return {basis_, entries_ + rhs.entries_};
}

OperatorMatrix OperatorMatrix::operator-(const OperatorMatrix& rhs) const {
    require_same_basis(basis_, rhs.basis_, "operator-");
    return {basis_, entries_ - rhs.entries_};
}

OperatorMatrix OperatorMatrix::operator*(const OperatorMatrix& rhs) const {
    require_same_basis(basis_, rhs.basis_, "operator*");
    return {basis_, entries_ * rhs.entries_};
}

OperatorMatrix identity(const BasisPtr& basis) {
    const auto dim = as_index(basis->dimension());
    return {basis, CMatrix::Identity(dim, dim)};
}

OperatorMatrix zero_operator(const BasisPtr& basis) {
    const auto dim = as_index(basis->dimension());
    return {basis, CMatrix::Zero(dim, dim)};
}

OperatorMatrix annihilation(const BasisPtr& basis, std::size_t mode_index) {
    const std::size_t slot = basis->mode_slot(mode_index);
    const int cutoff = basis->subsystem(slot).size;
    std::vector<LocalEntry> local;
    for (int k = 1; k <= cutoff; ++k) local.push_back({k - 1, k, std::sqrt(static_cast<double>(k))});
    return embed(basis, slot, local);
}

OperatorMatrix creation(const BasisPtr& basis, std::size_t mode_index) {
    return annihilation(basis, mode_index).adjoint();
}

OperatorMatrix number_operator(const BasisPtr& basis, std::size_t mode_index) {
    const std::size_t slot = basis->mode_slot(mode_index);
    return diagonal_operator(basis, [&](std::size_t i) { return cplx(basis->digit(i, slot), 0.0); });
}

OperatorMatrix atomic_projector(const BasisPtr& basis, std::size_t atom_index, int i, int j) {
    const std::size_t slot = basis->atom_slot(atom_index);
    const int levels = basis->subsystem(slot).size;
    if (i < 0 || j < 0 || i >= levels || j >= levels) {
        throw HilbertError("atomic_projector: level index out of range");
    }
    const LocalEntry e{i, j, 1.0};
    return embed(basis, slot, std::span<const LocalEntry>(&e, 1));
}

OperatorMatrix exchange_coupling(const BasisPtr& basis, std::size_t atom_index, int upper, int lower,
                                 std::size_t mode_index, double strength) {
    const std::size_t aslot = basis->atom_slot(atom_index);
    const std::size_t mslot = basis->mode_slot(mode_index);
    const int levels = basis->subsystem(aslot).size;
    if (upper < 0 || lower < 0 || upper >= levels || lower >= levels || upper == lower) {
        throw HilbertError("exchange_coupling: invalid transition levels");
    }
    const int cutoff = basis->subsystem(mslot).size;
    const std::size_t astride = basis->stride(aslot);
    const std::size_t mstride = basis->stride(mslot);
    const auto dim = as_index(basis->dimension());
    CMatrix m = CMatrix::Zero(dim, dim);
    for (std::size_t i = 0; i < basis->dimension(); ++i) {
        // |lower, k> -> |upper, k-1> with amplitude sqrt(k); the adjoint fills the mirror entry.
        if (basis->digit(i, aslot) != lower) continue;
        const int k = basis->digit(i, mslot);
        if (k == 0 || k > cutoff) continue;
        const std::size_t j = i + astride * static_cast<std::size_t>(upper) - astride * static_cast<std::size_t>(lower) - mstride;
        const double v = strength * std::sqrt(static_cast<double>(k));
        m(as_index(j), as_index(i)) += v;
        m(as_index(i), as_index(j)) += v;
    }
    return {basis, std::move(m)};
}

bool commutes(const OperatorMatrix& a, const OperatorMatrix& b, double tol) {
    require_same_basis(a.basis(), b.basis(), "commutes");
    return max_abs(a.entries() * b.entries() - b.entries() * a.entries()) < tol;
}

// ---------------------------------------------------------------------------
// Evolution

Propagator::Propagator(const OperatorMatrix& hamiltonian, Strategy strategy) : basis_(hamiltonian.basis()) {
    if (!hamiltonian.hermitian()) throw HilbertError("evolve: Hamiltonian is not Hermitian");
    const CMatrix& h = hamiltonian.entries();
    if (strategy == Strategy::Dense) {
        std::vector<Index> all(static_cast<std::size_t>(h.rows()));
        std::iota(all.begin(), all.end(), Index{0});
        blocks_.push_back(diagonalize(h, std::move(all)));
    } else {
        for (auto& idx : connected_blocks(h)) blocks_.push_back(diagonalize(h, std::move(idx)));
    }
}

std::size_t Propagator::largest_block() const {
    std::size_t best = 0;
    for (const auto& b : blocks_) best = std::max(best, b.indices.size());
    return best;
}

StateVector Propagator::apply(const StateVector& state, double duration) const {
    require_same_basis(basis_, state.basis(), "evolve");
    const CVector& in = state.amplitudes();
    CVector out(in.size());
    for (const auto& b : blocks_) {
        const Index k = static_cast<Index>(b.indices.size());
        CVector local(k);
        for (Index a = 0; a < k; ++a) local[a] = in[b.indices[static_cast<std::size_t>(a)]];
        CVector coeffs = b.vectors.adjoint() * local;
        for (Index a = 0; a < k; ++a) coeffs[a] *= std::polar(1.0, -b.energies[a] * duration);
        local = b.vectors * coeffs;
        for (Index a = 0; a < k; ++a) out[b.indices[static_cast<std::size_t>(a)]] = local[a];
    }
    return {basis_, std::move(out)};
}

SegmentUnitary::SegmentUnitary(const Propagator& propagator, double duration) : basis_(propagator.basis_) {
    for (const auto& b : propagator.blocks_) {
        const Index k = static_cast<Index>(b.indices.size());
        CVector phases(k);
        for (Index a = 0; a < k; ++a) phases[a] = std::polar(1.0, -b.energies[a] * duration);
        blocks_.push_back({b.indices, b.vectors * phases.asDiagonal() * b.vectors.adjoint()});
    }
}

StateVector SegmentUnitary::apply(const StateVector& state) const {
    require_same_basis(basis_, state.basis(), "evolve");
    const CVector& in = state.amplitudes();
    CVector out(in.size());
    for (const auto& b : blocks_) {
        const Index k = static_cast<Index>(b.indices.size());
        if (k == 1) {
            out[b.indices[0]] = b.unitary(0, 0) * in[b.indices[0]];
            continue;
        }
        CVector local(k);
        for (Index a = 0; a < k; ++a) local[a] = in[b.indices[static_cast<std::size_t>(a)]];
        local = b.unitary * local;
        for (Index a = 0; a < k; ++a) out[b.indices[static_cast<std::size_t>(a)]] = local[a];
    }
    return {basis_, std::move(out)};
}

StateVector evolve(const StateVector& state, const OperatorMatrix& hamiltonian, double duration) {
    require_same_basis(state.basis(), hamiltonian.basis(), "evolve");
    return Propagator(hamiltonian, Propagator::Strategy::Dense).apply(state, duration);
}

StateVector evolve_blocked(const StateVector& state, const OperatorMatrix& hamiltonian, double duration) {
    require_same_basis(state.basis(), hamiltonian.basis(), "evolve");
    return Propagator(hamiltonian, Propagator::Strategy::Blocked).apply(state, duration);
}

// ---------------------------------------------------------------------------
// Observables and measurement

cplx expectation(const StateVector& state, const OperatorMatrix& op) {
    require_same_basis(state.basis(), op.basis(), "expectation");
    return state.amplitudes().dot(op.entries() * state.amplitudes());
}

std::vector<double> photon_distribution(const StateVector& state, std::size_t mode_index) {
    const auto& basis = *state.basis();
    const std::size_t slot = basis.mode_slot(mode_index);
    const std::size_t d = static_cast<std::size_t>(basis.subsystem(slot).dimension());
    const std::size_t stride = basis.stride(slot);
    std::vector<double> p(d, 0.0);
    for_each_fiber(basis, slot, [&](std::size_t base) {
        for (std::size_t m = 0; m < d; ++m) p[m] += std::norm(state[base + m * stride]);
    });
    return p;
}

double population_at_or_above(const StateVector& state, std::size_t mode_index, int level) {
    const auto p = photon_distribution(state, mode_index);
    double total = 0.0;
    for (std::size_t k = static_cast<std::size_t>(std::max(level, 0)); k < p.size(); ++k) total += p[k];
    return total;
}

ProjectionResult project_photon_number(const StateVector& state, std::size_t mode_index, int k) {
    const auto& basis = *state.basis();
    const std::size_t slot = basis.mode_slot(mode_index);
    if (k < 0 || k > basis.subsystem(slot).size) {
        throw HilbertError("project_photon_number: outcome outside the truncated range");
    }
    CVector v = CVector::Zero(state.amplitudes().size());
    double probability = 0.0;
    const std::size_t offset = basis.stride(slot) * static_cast<std::size_t>(k);
    for_each_fiber(basis, slot, [&](std::size_t base) {
        const cplx a = state[base + offset];
        v[as_index(base + offset)] = a;
        probability += std::norm(a);
    });
    ProjectionResult result;
    result.probability = probability;
    if (probability > kZeroProbability) {
        result.state = StateVector(state.basis(), v / std::sqrt(probability));
    }
    return result;
}

namespace {

// rho_mode(m, m') = sum_rest psi(rest, m) psi*(rest, m').
CMatrix reduced_mode_density(const StateVector& state, std::size_t slot) {
    const auto& basis = *state.basis();
    const Index d = basis.subsystem(slot).dimension();
    const std::size_t stride = basis.stride(slot);
    CMatrix rho = CMatrix::Zero(d, d);
    for_each_fiber(basis, slot, [&](std::size_t i) {
        for (Index m = 0; m < d; ++m) {
            const cplx am = state[i + stride * static_cast<std::size_t>(m)];
            if (am == cplx{}) continue;
            for (Index n = 0; n < d; ++n) {
                rho(m, n) += am * std::conj(state[i + stride * static_cast<std::size_t>(n)]);
            }
        }
    });
    return rho;
}

}  // namespace

double mode_purity(const StateVector& state, std::size_t mode_index) {
    const std::size_t slot = state.basis()->mode_slot(mode_index);
    const CMatrix rho = reduced_mode_density(state, slot);
    const double tr = rho.trace().real();
    return (rho * rho).trace().real() / (tr * tr);
}

StateVector replace_mode_state(const StateVector& state, std::size_t mode_index, int k) {
    const auto& basis = *state.basis();
    const std::size_t slot = basis.mode_slot(mode_index);
    if (k < 0 || k > basis.subsystem(slot).size) {
        throw HilbertError("replace_mode_state: target occupancy outside the truncated range");
    }
    const CMatrix rho = reduced_mode_density(state, slot);
    const double tr = rho.trace().real();
    const double purity = (rho * rho).trace().real() / (tr * tr);
    if (purity < 1.0 - kPurityTolerance) {
        throw HilbertError("replace_mode_state: mode is entangled with the rest of the system (purity " +
                           std::to_string(purity) + ")");
    }
    Index dominant = 0;
    rho.diagonal().real().maxCoeff(&dominant);
    const double weight = std::sqrt(rho(dominant, dominant).real());
    const std::size_t stride = basis.stride(slot);
    CVector v = CVector::Zero(state.amplitudes().size());
    for_each_fiber(basis, slot, [&](std::size_t i) {
        v[as_index(i + stride * static_cast<std::size_t>(k))] =
            state[i + stride * static_cast<std::size_t>(dominant)] / weight * std::sqrt(tr);
    });
    return {state.basis(), std::move(v)};
}

}  // namespace zenolock
