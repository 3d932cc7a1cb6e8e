// hilbert.hpp - tensor-product Hilbert spaces of atoms and truncated Fock modes,
// dense operators, projective photon counting and exact piecewise-constant evolution.
//
// Units: hbar = 1. Index layout is row-major over the subsystem list, so the
// first subsystem is the most significant digit. Atoms always precede modes.

#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace zenolock {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

/// Raised for malformed bases, mismatched operands and violated preconditions.
class HilbertError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class SubsystemKind { Atom, Mode };

struct SubsystemSpec {
    SubsystemKind kind;
    int size;  // level count for atoms, highest representable occupancy for modes

    static SubsystemSpec atom(int levels) { return {SubsystemKind::Atom, levels}; }
    static SubsystemSpec mode(int cutoff) { return {SubsystemKind::Mode, cutoff}; }

    int dimension() const { return kind == SubsystemKind::Atom ? size : size + 1; }
    bool operator==(const SubsystemSpec&) const = default;
};

class ProductBasis {
public:
    /// Atoms are stably moved in front of modes; levels must be 2..4, cutoffs >= 1.
    explicit ProductBasis(std::vector<SubsystemSpec> specs);

    std::size_t dimension() const { return dimension_; }
    std::size_t subsystem_count() const { return specs_.size(); }
    const SubsystemSpec& subsystem(std::size_t slot) const { return specs_.at(slot); }
    std::size_t atom_count() const { return atom_count_; }
    std::size_t mode_count() const { return specs_.size() - atom_count_; }

    /// Slot of the k-th atom / k-th mode in the subsystem list.
    std::size_t atom_slot(std::size_t atom_index) const;
    std::size_t mode_slot(std::size_t mode_index) const;
    int mode_cutoff(std::size_t mode_index) const { return specs_[mode_slot(mode_index)].size; }
    int atom_levels(std::size_t atom_index) const { return specs_[atom_slot(atom_index)].size; }

    std::vector<int> digits(std::size_t index) const;
    std::size_t index(std::span<const int> digits) const;
    /// Single digit of `index` at `slot`, without materialising the full multi-index.
    int digit(std::size_t index, std::size_t slot) const {
        return static_cast<int>((index / strides_[slot]) % static_cast<std::size_t>(specs_[slot].dimension()));
    }
    std::size_t stride(std::size_t slot) const { return strides_[slot]; }

    bool operator==(const ProductBasis& other) const { return specs_ == other.specs_; }

private:
    std::vector<SubsystemSpec> specs_;
    std::vector<std::size_t> strides_;
    std::size_t dimension_ = 0;
    std::size_t atom_count_ = 0;
};

using BasisPtr = std::shared_ptr<const ProductBasis>;

BasisPtr build_basis(std::vector<SubsystemSpec> specs);

class StateVector {
public:
    StateVector(BasisPtr basis, CVector amplitudes);

    /// Product basis state; `digits` follows the basis slot order.
    static StateVector basis_state(BasisPtr basis, std::initializer_list<int> digits);
    /// Normalised superposition of basis states with the given (unnormalised) weights.
    static StateVector superposition(BasisPtr basis,
                                     std::initializer_list<std::pair<std::initializer_list<int>, cplx>> terms);

    const BasisPtr& basis() const { return basis_; }
    const CVector& amplitudes() const { return amplitudes_; }
    cplx operator[](std::size_t i) const { return amplitudes_[static_cast<Eigen::Index>(i)]; }
    cplx amplitude(std::initializer_list<int> digits) const;

    double norm() const { return amplitudes_.norm(); }
    StateVector normalized() const;
    StateVector scaled(cplx factor) const { return {basis_, amplitudes_ * factor}; }

private:
    BasisPtr basis_;
    CVector amplitudes_;
};

cplx inner(const StateVector& bra, const StateVector& ket);
/// |<a|b>|, i.e. overlap insensitive to global phase.
double fidelity(const StateVector& a, const StateVector& b);
StateVector tensor(const StateVector& left, const StateVector& right);

class OperatorMatrix {
public:
    OperatorMatrix(BasisPtr basis, CMatrix entries);

    const BasisPtr& basis() const { return basis_; }
    const CMatrix& entries() const { return entries_; }
    bool hermitian() const { return hermitian_; }
    bool unitary() const { return unitary_; }

    OperatorMatrix adjoint() const { return {basis_, entries_.adjoint()}; }
    StateVector apply(const StateVector& state) const;

    OperatorMatrix operator+(const OperatorMatrix& rhs) const;
    OperatorMatrix operator-(const OperatorMatrix& rhs) const;
    OperatorMatrix operator*(const OperatorMatrix& rhs) const;
    OperatorMatrix operator*(cplx scale) const { return {basis_, entries_ * scale}; }

private:
    BasisPtr basis_;
    CMatrix entries_;
    bool hermitian_ = false;
    bool unitary_ = false;
};

inline constexpr double kFlagTolerance = 1e-12;

OperatorMatrix identity(const BasisPtr& basis);
OperatorMatrix zero_operator(const BasisPtr& basis);
/// Truncated ladder operator a|k> = sqrt(k)|k-1> on the given mode (0-based among modes).
OperatorMatrix annihilation(const BasisPtr& basis, std::size_t mode_index);
OperatorMatrix creation(const BasisPtr& basis, std::size_t mode_index);
OperatorMatrix number_operator(const BasisPtr& basis, std::size_t mode_index);
/// |i><j| on the given atom (0-based among atoms).
OperatorMatrix atomic_projector(const BasisPtr& basis, std::size_t atom_index, int i, int j);
/// g (|upper><lower|_atom a + |lower><upper|_atom a^dagger): rotating-wave exchange
/// between one atomic transition and one mode, built without dense products.
OperatorMatrix exchange_coupling(const BasisPtr& basis, std::size_t atom_index, int upper, int lower,
                                 std::size_t mode_index, double strength);
/// Diagonal operator from a per-basis-index function.
template <typename F>
OperatorMatrix diagonal_operator(const BasisPtr& basis, F&& value_at) {
    CMatrix m = CMatrix::Zero(static_cast<Eigen::Index>(basis->dimension()),
                              static_cast<Eigen::Index>(basis->dimension()));
    for (std::size_t i = 0; i < basis->dimension(); ++i) {
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = value_at(i);
    }
    return {basis, std::move(m)};
}

bool commutes(const OperatorMatrix& a, const OperatorMatrix& b, double tol = 1e-12);

/// exp(-i H t)|state>, dense eigendecomposition of H.
StateVector evolve(const StateVector& state, const OperatorMatrix& hamiltonian, double duration);
/// Same map, decomposing H into its connected (excitation) blocks first.
StateVector evolve_blocked(const StateVector& state, const OperatorMatrix& hamiltonian, double duration);

/// Eigensystem of a Hermitian H, either dense or split into the connected
/// components of its coupling graph. Reusable across durations.
class Propagator {
public:
    enum class Strategy { Dense, Blocked };

    explicit Propagator(const OperatorMatrix& hamiltonian, Strategy strategy = Strategy::Blocked);

    StateVector apply(const StateVector& state, double duration) const;
    std::size_t block_count() const { return blocks_.size(); }
    std::size_t largest_block() const;

    struct Block {
        std::vector<Eigen::Index> indices;
        Eigen::VectorXd energies;
        CMatrix vectors;
    };

private:
    BasisPtr basis_;
    std::vector<Block> blocks_;
    friend class SegmentUnitary;
};

/// exp(-i H t) for one fixed t, stored blockwise; cheap to apply repeatedly.
class SegmentUnitary {
public:
    SegmentUnitary(const Propagator& propagator, double duration);

    StateVector apply(const StateVector& state) const;

private:
    struct Block {
        std::vector<Eigen::Index> indices;
        CMatrix unitary;
    };
    BasisPtr basis_;
    std::vector<Block> blocks_;
};

cplx expectation(const StateVector& state, const OperatorMatrix& op);

struct ProjectionResult {
    std::optional<StateVector> state;  // empty when the outcome has zero probability
    double probability = 0.0;

    bool empty() const { return !state.has_value(); }
};

inline constexpr double kZeroProbability = 1e-300;

/// Born probability and normalised post-measurement state for "mode holds exactly k photons".
ProjectionResult project_photon_number(const StateVector& state, std::size_t mode_index, int k);
/// Photon-number distribution of one mode; sums to the squared norm.
std::vector<double> photon_distribution(const StateVector& state, std::size_t mode_index);
/// Population in occupancies >= `level` of one mode.
double population_at_or_above(const StateVector& state, std::size_t mode_index, int level);

/// Tr(rho_mode^2) for the reduced state of one mode.
double mode_purity(const StateVector& state, std::size_t mode_index);

inline constexpr double kPurityTolerance = 1e-10;

/// Replaces the (unentangled) factor state of a mode by |k>. The replaced factor's
/// phase is taken from its dominant Fock component. Throws when the mode is entangled.
StateVector replace_mode_state(const StateVector& state, std::size_t mode_index, int k);

}  // namespace zenolock
