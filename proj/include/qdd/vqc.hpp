#pragma once

// Strongly entangling layer stacks, label re-uploading, and measurement
// readout with truncation and norm rescaling.
//
// Layer l (1-based) applies one ROT per qubit followed by a CNOT ring where
// qubit i targets (i + r) mod n with range r = ((l-1) mod (n-1)) + 1: adjacent
// targets in layer 1, distance 2 in layer 2, and cycling once r would reach n
// (a self-CNOT is never produced).

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "qdd/state.hpp"

namespace qdd {

struct EntanglingStack {
    int n_qubits = 0;
    int n_layers = 0;
    std::vector<double> params;          // shaped (n_layers x n_qubits x 3), flat
    std::vector<int> reupload_points;    // layer indices in [0, n_layers)

    EntanglingStack() = default;
    EntanglingStack(int nq, int nl, std::vector<double> p = {}, std::vector<int> reups = {})
        : n_qubits(nq), n_layers(nl), params(std::move(p)), reupload_points(std::move(reups)) {
        if (params.empty()) params.assign(param_count_for(nq, nl), 0.0);
        if (params.size() != param_count_for(nq, nl))
            throw std::invalid_argument("EntanglingStack: expected " +
                                        std::to_string(param_count_for(nq, nl)) + " parameters, got " +
                                        std::to_string(params.size()));
        for (int r : reupload_points)
            if (r < 0 || r >= n_layers)
                throw std::invalid_argument("EntanglingStack: re-upload point outside [0, n_layers)");
    }

    static std::size_t param_count_for(int nq, int nl) { return std::size_t(nl) * 3 * std::size_t(nq); }
    std::size_t param_count() const { return param_count_for(n_qubits, n_layers); }
};

/// n_reuploads layer indices evenly spaced in (0, n_layers).
inline std::vector<int> evenly_spaced_reuploads(int n_layers, int n_reuploads) {
    if (n_reuploads < 0) throw std::invalid_argument("negative re-upload count");
    if (n_reuploads >= n_layers && n_reuploads > 0)
        throw std::invalid_argument("re-upload count must be smaller than the layer count");
    std::vector<int> points;
    points.reserve(std::size_t(n_reuploads));
    for (int k = 1; k <= n_reuploads; ++k) points.push_back(k * n_layers / (n_reuploads + 1));
    return points;
}

namespace detail {

inline void append_entangling_layers(CircuitSpec& circuit, const EntanglingStack& stack,
                                     int angle_qubit, double angle) {
    const int n = stack.n_qubits;
    for (int l = 1; l <= stack.n_layers; ++l) {
        if (angle_qubit >= 0 &&
            std::find(stack.reupload_points.begin(), stack.reupload_points.end(), l - 1) !=
                stack.reupload_points.end())
            circuit.gates.push_back(Gate::rx(angle_qubit, angle, true));
        for (int q = 0; q < n; ++q) circuit.gates.push_back(Gate::rot(q));
        const int range = (l - 1) % (n - 1) + 1;
        for (int q = 0; q < n; ++q) circuit.gates.push_back(Gate::cnot(q, (q + range) % n));
        circuit.close_layer();
    }
}

}  // namespace detail

/// ROT+CNOT stack as a circuit; trainable angles bind at execution time.
inline CircuitSpec build_entangling_circuit(const EntanglingStack& stack) {
    if (stack.n_qubits < 2) throw std::invalid_argument("build_entangling_circuit: need at least 2 qubits");
    CircuitSpec circuit;
    circuit.n_qubits = stack.n_qubits;
    detail::append_entangling_layers(circuit, stack, -1, 0.0);
    circuit.validate();
    return circuit;
}

/// Same stack with a fixed RX(angle) on angle_qubit inserted before each
/// layer listed in stack.reupload_points (label re-uploading), and optionally
/// once before the first layer (used when the label embedding itself is part
/// of the circuit rather than the state preparation).
inline CircuitSpec build_entangling_circuit(const EntanglingStack& stack, int angle_qubit, double angle,
                                            bool prepend_embedding = false) {
    if (stack.n_qubits < 2) throw std::invalid_argument("build_entangling_circuit: need at least 2 qubits");
    if (angle_qubit < 0 || angle_qubit >= stack.n_qubits)
        throw std::out_of_range("build_entangling_circuit: angle qubit out of range");
    CircuitSpec circuit;
    circuit.n_qubits = stack.n_qubits;
    if (prepend_embedding) circuit.gates.push_back(Gate::rx(angle_qubit, angle, true));
    detail::append_entangling_layers(circuit, stack, angle_qubit, angle);
    if (circuit.layer_boundaries.empty() && !circuit.gates.empty()) circuit.close_layer();
    circuit.validate();
    return circuit;
}

/// Joint probabilities of the first n_measured qubits (the rest marginalized),
/// truncated to the first n_outputs entries and scaled by input_norm.
inline std::vector<double> readout(const StateVector& state, int n_measured, int n_outputs,
                                   double input_norm) {
    if (n_measured < 0 || n_measured > state.n_qubits)
        throw std::invalid_argument("readout: n_measured out of range");
    const std::size_t n_joint = std::size_t(1) << n_measured;
    if (n_outputs < 0 || std::size_t(n_outputs) > n_joint)
        throw std::invalid_argument("readout: n_outputs exceeds 2^n_measured");
    const std::size_t block = std::size_t(1) << (state.n_qubits - n_measured);
    std::vector<double> out(std::size_t(n_outputs), 0.0);
    for (std::size_t j = 0; j < out.size(); ++j) {
        double p = 0.0;
        const std::size_t base = j * block;
        for (std::size_t k = 0; k < block; ++k) p += std::norm(state.amps[base + k]);
        out[j] = p * input_norm;
    }
    return out;
}

}  // namespace qdd
