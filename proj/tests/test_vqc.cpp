#include <catch2/catch_amalgamated.hpp>

#include "qdd/embed.hpp"
#include "qdd/vqc.hpp"
#include "support/oracles.hpp"

using namespace qdd;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<std::pair<int, int>> cnots_of_layer(const CircuitSpec& c, std::size_t layer) {
    const std::size_t begin = layer == 0 ? 0 : c.layer_boundaries[layer - 1];
    const std::size_t end = c.layer_boundaries[layer];
    std::vector<std::pair<int, int>> out;
    for (std::size_t i = begin; i < end; ++i)
        if (c.gates[i].kind == GateKind::Cnot) out.emplace_back(c.gates[i].q0, c.gates[i].q1);
    return out;
}

}  // namespace

TEST_CASE("two-qubit single layer wiring", "[vqc]") {
    const CircuitSpec c = build_entangling_circuit(EntanglingStack(2, 1));
    REQUIRE(c.gates.size() == 4);
    CHECK(c.gates[0].kind == GateKind::Rot);
    CHECK(c.gates[1].kind == GateKind::Rot);
    CHECK(cnots_of_layer(c, 0) == std::vector<std::pair<int, int>>{{0, 1}, {1, 0}});
}

TEST_CASE("layer 2 on four qubits targets at distance two", "[vqc]") {
    const CircuitSpec c = build_entangling_circuit(EntanglingStack(4, 2));
    CHECK(cnots_of_layer(c, 0) == std::vector<std::pair<int, int>>{{0, 1}, {1, 2}, {2, 3}, {3, 0}});
    CHECK(cnots_of_layer(c, 1) == std::vector<std::pair<int, int>>{{0, 2}, {1, 3}, {2, 0}, {3, 1}});
}

TEST_CASE("CNOT range cycles beyond n-1 layers without self-targets", "[vqc]") {
    const CircuitSpec c = build_entangling_circuit(EntanglingStack(3, 5));
    for (std::size_t l = 0; l < 5; ++l) {
        const int expected_range = int(l % 2) + 1;
        for (const auto& [control, target] : cnots_of_layer(c, l)) {
            CHECK(target == (control + expected_range) % 3);
            CHECK(control != target);
        }
    }
}

TEST_CASE("gate and parameter counts for a 47-layer stack", "[vqc]") {
    const EntanglingStack stack(4, 47);
    const CircuitSpec c = build_entangling_circuit(stack);
    CHECK(c.gates.size() == 47 * 8);
    CHECK(c.param_count() == 564);
    CHECK(stack.param_count() == 564);
    CHECK(c.layer_count() == 47);
}

TEST_CASE("stack validation", "[vqc]") {
    CHECK_THROWS_AS(build_entangling_circuit(EntanglingStack(1, 3)), std::invalid_argument);
    CHECK_THROWS_AS(EntanglingStack(3, 2, std::vector<double>(5, 0.0)), std::invalid_argument);
    CHECK_THROWS_AS(EntanglingStack(3, 2, {}, {5}), std::invalid_argument);
}

TEST_CASE("re-upload points are evenly spaced interior layers", "[vqc]") {
    CHECK(evenly_spaced_reuploads(47, 7) == std::vector<int>{5, 11, 17, 23, 29, 35, 41});
    CHECK(evenly_spaced_reuploads(10, 0).empty());
    CHECK_THROWS_AS(evenly_spaced_reuploads(3, 3), std::invalid_argument);

    const EntanglingStack stack(3, 6, {}, evenly_spaced_reuploads(6, 2));
    const CircuitSpec c = build_entangling_circuit(stack, 2, 1.25);
    int fixed_rx = 0;
    for (const Gate& g : c.gates)
        if (g.fixed && g.kind == GateKind::RX) {
            ++fixed_rx;
            CHECK(g.q0 == 2);
            CHECK(g.angles[0] == 1.25);
        }
    CHECK(fixed_rx == 2);
    CHECK(c.param_count() == stack.param_count());  // fixed gates are not trainable
}

TEST_CASE("readout of |00>", "[vqc]") {
    const std::vector<double> out = readout(StateVector(2), 2, 4, 1.0);
    CHECK(out == std::vector<double>{1, 0, 0, 0});
}

TEST_CASE("readout of a fresh embedding is squared normalized pixels times norm", "[vqc]") {
    Rng rng(3);
    std::vector<double> pixels(16);
    double sq = 0.0;
    for (double& p : pixels) {
        p = uniform_real(rng, 0.1, 1.0);
        sq += p * p;
    }
    const Embedded e = amplitude_embed(pixels, 4);
    const std::vector<double> out = readout(e.state, 4, 16, e.norm);
    for (std::size_t i = 0; i < pixels.size(); ++i)
        CHECK_THAT(out[i], WithinAbs(pixels[i] * pixels[i] / std::sqrt(sq), 1e-12));
}

TEST_CASE("marginalization over unmeasured qubits matches the brute-force sum", "[vqc]") {
    Rng rng(21);
    const StateVector s = oracle::random_state(7, rng);
    const double norm = 2.75;
    const std::vector<double> out = readout(s, 6, 64, norm);

    double total = 0.0;
    for (std::size_t j = 0; j < 64; ++j) {
        double expect = 0.0;
        for (std::size_t i = 0; i < 128; ++i)
            if ((i >> 1) == j) expect += std::norm(s.amps[i]);  // qubit 6 (ancilla) is the LSB
        CHECK_THAT(out[j], WithinAbs(expect * norm, 1e-12));
        total += out[j];
    }
    CHECK_THAT(total, WithinAbs(norm, 1e-9));  // no truncation: scaled sum is the norm
}

TEST_CASE("pre-truncation probabilities sum to one", "[vqc]") {
    Rng rng(22);
    const StateVector s = oracle::random_state(5, rng);
    double total = 0.0;
    for (double p : readout(s, 3, 8, 1.0)) total += p;
    CHECK_THAT(total, WithinAbs(1.0, 1e-10));
}

TEST_CASE("readout validation", "[vqc]") {
    CHECK_THROWS_AS(readout(StateVector(2), 1, 3, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(readout(StateVector(2), 3, 1, 1.0), std::invalid_argument);
}
