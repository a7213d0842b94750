#pragma once

// Complex state-vector simulator: gate application, circuit execution, and
// extraction of a circuit's full unitary matrix.
//
// Bit-ordering contract: qubit 0 is the MOST significant bit of a basis-state
// index. For n qubits, |q0 q1 ... q_{n-1}> has index
//     q0 * 2^(n-1) + q1 * 2^(n-2) + ... + q_{n-1}.
// Consequently CNOT(control=0, target=1) on two qubits swaps the amplitudes
// of |10> (index 2) and |11> (index 3).
//
// Gates are applied by stride iteration over amplitude pairs; full matrices
// are only materialized by circuit_unitary.

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdd {

using cplx = std::complex<double>;

inline constexpr int kMaxUnitaryQubits = 12;  // circuit_unitary capacity guard

struct StateVector {
    int n_qubits = 0;
    std::vector<cplx> amps;  // 2^n_qubits amplitudes, unit L2 norm

    StateVector() = default;

    /// |0...0> on n qubits.
    explicit StateVector(int nq) : n_qubits(nq) {
        if (nq < 0 || nq > 30) throw std::invalid_argument("StateVector: qubit count out of range");
        amps.assign(std::size_t(1) << nq, cplx(0.0, 0.0));
        amps[0] = 1.0;
    }

    static StateVector basis(int nq, std::size_t index) {
        StateVector s(nq);
        if (index >= s.amps.size()) throw std::out_of_range("StateVector::basis: index out of range");
        s.amps[0] = 0.0;
        s.amps[index] = 1.0;
        return s;
    }

    std::size_t dim() const { return amps.size(); }

    double norm() const {
        double s = 0.0;
        for (const cplx& a : amps) s += std::norm(a);
        return std::sqrt(s);
    }

    double probability(std::size_t basis_index) const { return std::norm(amps[basis_index]); }
};

enum class GateKind { RX, RY, RZ, Rot, Cnot };

// One circuit element. Rotation gates own their angle slots; `fixed` marks
// embedding gates whose angles are data rather than trainable parameters.
// Rot is the Z-Y-Z Euler decomposition: matrix RZ(a) * RY(b) * RZ(c).
struct Gate {
    GateKind kind = GateKind::RX;
    int q0 = 0;  // rotation target, or CNOT control
    int q1 = 0;  // CNOT target
    std::array<double, 3> angles{};
    bool fixed = false;

    static Gate rx(int q, double a = 0.0, bool fixed = false) { return {GateKind::RX, q, 0, {a, 0, 0}, fixed}; }
    static Gate ry(int q, double a = 0.0, bool fixed = false) { return {GateKind::RY, q, 0, {a, 0, 0}, fixed}; }
    static Gate rz(int q, double a = 0.0, bool fixed = false) { return {GateKind::RZ, q, 0, {a, 0, 0}, fixed}; }
    static Gate rot(int q, double a = 0.0, double b = 0.0, double c = 0.0, bool fixed = false) {
        return {GateKind::Rot, q, 0, {a, b, c}, fixed};
    }
    static Gate cnot(int control, int target) { return {GateKind::Cnot, control, target, {}, false}; }

    int angle_count() const {
        switch (kind) {
            case GateKind::Rot: return 3;
            case GateKind::Cnot: return 0;
            default: return 1;
        }
    }

    /// Trainable angles contributed to a circuit's flat parameter vector.
    int param_count() const { return fixed ? 0 : angle_count(); }

    void check_targets(int n_qubits) const {
        if (q0 < 0 || q0 >= n_qubits) throw std::out_of_range("gate target out of range");
        if (kind == GateKind::Cnot) {
            if (q1 < 0 || q1 >= n_qubits) throw std::out_of_range("gate target out of range");
            if (q0 == q1) throw std::invalid_argument("CNOT control equals target");
        }
    }
};

// Ordered gate list with layer structure. layer_boundaries[i] is the index
// one past the last gate of layer i; the final boundary equals gates.size().
struct CircuitSpec {
    int n_qubits = 0;
    std::vector<Gate> gates;
    std::vector<std::size_t> layer_boundaries;

    std::size_t param_count() const {
        std::size_t n = 0;
        for (const Gate& g : gates) n += std::size_t(g.param_count());
        return n;
    }

    std::size_t layer_count() const { return layer_boundaries.size(); }

    void close_layer() { layer_boundaries.push_back(gates.size()); }

    void validate() const {
        for (const Gate& g : gates) g.check_targets(n_qubits);
        std::size_t prev = 0;
        for (std::size_t i = 0; i < layer_boundaries.size(); ++i) {
            const std::size_t b = layer_boundaries[i];
            if (b < prev || b > gates.size())
                throw std::invalid_argument("layer boundaries must be non-decreasing and within the gate list");
            if (i > 0 && b == prev) throw std::invalid_argument("layer boundaries must be strictly increasing");
            prev = b;
        }
        if (!gates.empty() && (layer_boundaries.empty() || layer_boundaries.back() != gates.size()))
            throw std::invalid_argument("layer boundaries must cover the gate list");
    }
};

namespace detail {

struct Mat2 {
    cplx m00, m01, m10, m11;
};

inline Mat2 rx_matrix(double theta) {
    const double c = std::cos(theta / 2), s = std::sin(theta / 2);
    return {cplx(c, 0), cplx(0, -s), cplx(0, -s), cplx(c, 0)};
}

inline Mat2 ry_matrix(double theta) {
    const double c = std::cos(theta / 2), s = std::sin(theta / 2);
    return {cplx(c, 0), cplx(-s, 0), cplx(s, 0), cplx(c, 0)};
}

inline Mat2 rz_matrix(double theta) {
    const cplx e_neg = std::polar(1.0, -theta / 2), e_pos = std::polar(1.0, theta / 2);
    return {e_neg, cplx(0, 0), cplx(0, 0), e_pos};
}

inline Mat2 matmul2(const Mat2& a, const Mat2& b) {
    return {a.m00 * b.m00 + a.m01 * b.m10, a.m00 * b.m01 + a.m01 * b.m11,
            a.m10 * b.m00 + a.m11 * b.m10, a.m10 * b.m01 + a.m11 * b.m11};
}

inline Mat2 rot_matrix(double a, double b, double c) {
    return matmul2(rz_matrix(a), matmul2(ry_matrix(b), rz_matrix(c)));
}

inline Mat2 gate_matrix(GateKind kind, const std::array<double, 3>& ang) {
    switch (kind) {
        case GateKind::RX: return rx_matrix(ang[0]);
        case GateKind::RY: return ry_matrix(ang[0]);
        case GateKind::RZ: return rz_matrix(ang[0]);
        case GateKind::Rot: return rot_matrix(ang[0], ang[1], ang[2]);
        default: throw std::logic_error("gate_matrix: not a rotation gate");
    }
}

/// Applies a 2x2 matrix to the qubit at MSB-numbered position q.
inline void apply_single_qubit(std::vector<cplx>& amps, int n_qubits, int q, const Mat2& m) {
    const std::size_t stride = std::size_t(1) << (n_qubits - 1 - q);
    const std::size_t block = stride << 1;
    const std::size_t dim = amps.size();
    for (std::size_t base = 0; base < dim; base += block) {
        for (std::size_t ofs = 0; ofs < stride; ++ofs) {
            cplx& a0 = amps[base + ofs];
            cplx& a1 = amps[base + ofs + stride];
            const cplx t0 = m.m00 * a0 + m.m01 * a1;
            const cplx t1 = m.m10 * a0 + m.m11 * a1;
            a0 = t0;
            a1 = t1;
        }
    }
}

inline void apply_cnot(std::vector<cplx>& amps, int n_qubits, int control, int target) {
    const std::size_t cbit = std::size_t(1) << (n_qubits - 1 - control);
    const std::size_t tbit = std::size_t(1) << (n_qubits - 1 - target);
    const std::size_t dim = amps.size();
    for (std::size_t i = 0; i < dim; ++i) {
        if ((i & cbit) && !(i & tbit)) std::swap(amps[i], amps[i | tbit]);
    }
}

}  // namespace detail

inline void apply_gate_in_place(StateVector& state, const Gate& gate) {
    gate.check_targets(state.n_qubits);
    if (gate.kind == GateKind::Cnot) {
        detail::apply_cnot(state.amps, state.n_qubits, gate.q0, gate.q1);
    } else {
        detail::apply_single_qubit(state.amps, state.n_qubits, gate.q0,
                                   detail::gate_matrix(gate.kind, gate.angles));
    }
}

/// Value-semantics gate application; the input state is left untouched.
inline StateVector apply_gate(const StateVector& state, const Gate& gate) {
    StateVector out = state;
    apply_gate_in_place(out, gate);
    return out;
}

/// Runs the circuit, binding `params` to the trainable rotation angles in
/// gate order. Fixed gates keep their stored angles.
inline StateVector apply_circuit(const StateVector& state, const CircuitSpec& circuit,
                                 std::span<const double> params) {
    if (params.size() != circuit.param_count())
        throw std::invalid_argument("apply_circuit: expected " + std::to_string(circuit.param_count()) +
                                    " parameters, got " + std::to_string(params.size()));
    if (circuit.n_qubits != state.n_qubits)
        throw std::invalid_argument("apply_circuit: circuit/state qubit count mismatch");
    StateVector out = state;
    std::size_t cursor = 0;
    for (const Gate& g : circuit.gates) {
        if (g.kind == GateKind::Cnot || g.fixed) {
            apply_gate_in_place(out, g);
            continue;
        }
        Gate bound = g;
        for (int k = 0; k < g.angle_count(); ++k) bound.angles[std::size_t(k)] = params[cursor++];
        apply_gate_in_place(out, bound);
    }
    return out;
}

// 2^n x 2^n row-major complex matrix.
struct UnitaryMatrix {
    std::size_t dim = 0;
    std::vector<cplx> entries;

    UnitaryMatrix() = default;
    explicit UnitaryMatrix(std::size_t d) : dim(d), entries(d * d, cplx(0, 0)) {}

    static UnitaryMatrix identity(std::size_t d) {
        UnitaryMatrix u(d);
        for (std::size_t i = 0; i < d; ++i) u.at(i, i) = 1.0;
        return u;
    }

    cplx& at(std::size_t row, std::size_t col) { return entries[row * dim + col]; }
    const cplx& at(std::size_t row, std::size_t col) const { return entries[row * dim + col]; }

    std::vector<cplx> apply(std::span<const cplx> v) const {
        if (v.size() != dim) throw std::invalid_argument("UnitaryMatrix::apply: dimension mismatch");
        std::vector<cplx> out(dim, cplx(0, 0));
        for (std::size_t i = 0; i < dim; ++i) {
            const cplx* row = entries.data() + i * dim;
            cplx acc(0, 0);
            for (std::size_t j = 0; j < dim; ++j) acc += row[j] * v[j];
            out[i] = acc;
        }
        return out;
    }

    UnitaryMatrix multiply(const UnitaryMatrix& rhs) const {
        if (rhs.dim != dim) throw std::invalid_argument("UnitaryMatrix::multiply: dimension mismatch");
        UnitaryMatrix out(dim);
        // ikj order keeps the inner loop contiguous in both operands.
        for (std::size_t i = 0; i < dim; ++i) {
            const cplx* lrow = entries.data() + i * dim;
            cplx* orow = out.entries.data() + i * dim;
            for (std::size_t k = 0; k < dim; ++k) {
                const cplx l = lrow[k];
                if (l == cplx(0, 0)) continue;
                const cplx* rrow = rhs.entries.data() + k * dim;
                for (std::size_t j = 0; j < dim; ++j) orow[j] += l * rrow[j];
            }
        }
        return out;
    }

    /// max_ij |(U^H U - I)_ij|. O(dim^3); intended for dim <= 2^8 checks.
    double unitarity_error() const {
        double worst = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            for (std::size_t j = 0; j < dim; ++j) {
                cplx s(0, 0);
                for (std::size_t k = 0; k < dim; ++k) s += std::conj(at(k, i)) * at(k, j);
                if (i == j) s -= 1.0;
                worst = std::max(worst, std::abs(s));
            }
        }
        return worst;
    }
};

/// Full matrix of the circuit: column j is apply_circuit on basis state |j>.
inline UnitaryMatrix circuit_unitary(const CircuitSpec& circuit, std::span<const double> params) {
    if (circuit.n_qubits > kMaxUnitaryQubits)
        throw std::invalid_argument("circuit_unitary: capacity guard exceeded (max " +
                                    std::to_string(kMaxUnitaryQubits) + " qubits)");
    const std::size_t dim = std::size_t(1) << circuit.n_qubits;
    UnitaryMatrix u(dim);
    for (std::size_t col = 0; col < dim; ++col) {
        const StateVector out = apply_circuit(StateVector::basis(circuit.n_qubits, col), circuit, params);
        for (std::size_t row = 0; row < dim; ++row) u.at(row, col) = out.amps[row];
    }
    return u;
}

}  // namespace qdd
