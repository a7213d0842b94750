#pragma once

// Line-oriented text format for CircuitSpec.
//
//   qubits N
//   ROT q a b c
//   RX q a        (likewise RY, RZ)
//   CNOT c t
//   FIXED <rotation line>    -- non-trainable angle-embedding gate
//   LAYER                    -- closes the current layer
//
// Blank lines and lines starting with '#' are ignored. Angles are radians
// printed with full double precision. A trailing unterminated layer is
// closed implicitly on parse.

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "qdd/state.hpp"

namespace qdd {

inline std::string circuit_to_text(const CircuitSpec& circuit) {
    std::ostringstream os;
    os.precision(17);
    os << "qubits " << circuit.n_qubits << "\n";
    std::size_t layer = 0;
    for (std::size_t i = 0; i < circuit.gates.size(); ++i) {
        while (layer < circuit.layer_boundaries.size() && circuit.layer_boundaries[layer] == i) {
            os << "LAYER\n";
            ++layer;
        }
        const Gate& g = circuit.gates[i];
        if (g.fixed) os << "FIXED ";
        switch (g.kind) {
            case GateKind::RX: os << "RX " << g.q0 << " " << g.angles[0]; break;
            case GateKind::RY: os << "RY " << g.q0 << " " << g.angles[0]; break;
            case GateKind::RZ: os << "RZ " << g.q0 << " " << g.angles[0]; break;
            case GateKind::Rot:
                os << "ROT " << g.q0 << " " << g.angles[0] << " " << g.angles[1] << " " << g.angles[2];
                break;
            case GateKind::Cnot: os << "CNOT " << g.q0 << " " << g.q1; break;
        }
        os << "\n";
    }
    while (layer < circuit.layer_boundaries.size()) {
        os << "LAYER\n";
        ++layer;
    }
    return os.str();
}

inline CircuitSpec circuit_from_text(const std::string& text) {
    CircuitSpec circuit;
    bool saw_header = false;
    std::istringstream is(text);
    std::string line;
    int line_no = 0;
    auto fail = [&](const std::string& why) {
        throw std::invalid_argument("circuit text line " + std::to_string(line_no) + ": " + why);
    };
    while (std::getline(is, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok) || tok[0] == '#') continue;
        bool fixed = false;
        if (tok == "FIXED") {
            fixed = true;
            if (!(ls >> tok)) fail("FIXED without a gate");
        }
        if (tok == "qubits") {
            int n = 0;
            if (!(ls >> n) || n <= 0) fail("bad qubit count");
            circuit.n_qubits = n;
            saw_header = true;
            continue;
        }
        if (!saw_header) fail("expected 'qubits N' header first");
        if (tok == "LAYER") {
            circuit.close_layer();
            continue;
        }
        Gate g;
        if (tok == "ROT") {
            double a, b, c;
            int q;
            if (!(ls >> q >> a >> b >> c)) fail("ROT expects: q a b c");
            g = Gate::rot(q, a, b, c, fixed);
        } else if (tok == "RX" || tok == "RY" || tok == "RZ") {
            double a;
            int q;
            if (!(ls >> q >> a)) fail(tok + " expects: q a");
            g = tok == "RX" ? Gate::rx(q, a, fixed) : tok == "RY" ? Gate::ry(q, a, fixed) : Gate::rz(q, a, fixed);
        } else if (tok == "CNOT") {
            int c, t;
            if (!(ls >> c >> t)) fail("CNOT expects: c t");
            if (fixed) fail("CNOT cannot be FIXED");
            g = Gate::cnot(c, t);
        } else {
            fail("unknown token '" + tok + "'");
        }
        circuit.gates.push_back(g);
    }
    if (!saw_header) throw std::invalid_argument("circuit text: missing 'qubits N' header");
    if (!circuit.gates.empty() &&
        (circuit.layer_boundaries.empty() || circuit.layer_boundaries.back() != circuit.gates.size()))
        circuit.close_layer();
    circuit.validate();
    return circuit;
}

inline void save_circuit(const std::string& path, const CircuitSpec& circuit) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << circuit_to_text(circuit);
}

inline CircuitSpec load_circuit(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return circuit_from_text(os.str());
}

}  // namespace qdd
