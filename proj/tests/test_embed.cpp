#include <catch2/catch_amalgamated.hpp>

#include <numbers>

#include "qdd/embed.hpp"
#include "qdd/rng.hpp"

using namespace qdd;
using Catch::Matchers::WithinAbs;

TEST_CASE("amplitude embedding of a basis-like input", "[embed]") {
    const Embedded e = amplitude_embed(std::vector<double>{1, 0, 0, 0}, 2);
    CHECK_THAT(std::abs(e.state.amps[0] - cplx(1, 0)), WithinAbs(0.0, 1e-15));
    CHECK(e.norm == 1.0);
}

TEST_CASE("3-4-5 embedding", "[embed]") {
    const Embedded e = amplitude_embed(std::vector<double>{3, 4}, 1);
    CHECK_THAT(e.state.amps[0].real(), WithinAbs(0.6, 1e-15));
    CHECK_THAT(e.state.amps[1].real(), WithinAbs(0.8, 1e-15));
    CHECK_THAT(e.norm, WithinAbs(5.0, 1e-15));
}

TEST_CASE("embedding round trip reproduces squared normalized pixels", "[embed]") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> pixels(64);
        double sq = 0.0;
        for (double& p : pixels) {
            p = uniform_real(rng);
            sq += p * p;
        }
        const Embedded e = amplitude_embed(pixels, 6);
        CHECK_THAT(e.state.norm(), WithinAbs(1.0, 1e-12));
        for (std::size_t i = 0; i < pixels.size(); ++i)
            CHECK_THAT(e.state.probability(i), WithinAbs(pixels[i] * pixels[i] / sq, 1e-12));
    }
}

TEST_CASE("embedding input validation", "[embed]") {
    CHECK_THROWS_AS(amplitude_embed(std::vector<double>{}, 2), std::invalid_argument);
    CHECK_THROWS_AS(amplitude_embed(std::vector<double>{0, 0, 0}, 2), std::invalid_argument);
    CHECK_THROWS_AS(amplitude_embed(std::vector<double>(5, 1.0), 2), std::invalid_argument);
}

TEST_CASE("label angles", "[embed]") {
    CHECK(label_angle(0, 2) == 0.0);
    CHECK_THAT(label_angle(1, 2), WithinAbs(std::numbers::pi, 1e-15));
    CHECK(label_angle(0, 7) == 0.0);
    CHECK_THAT(label_angle(3, 10), WithinAbs(3.0 * std::numbers::pi / 5.0, 1e-15));
    CHECK_THROWS_AS(label_angle(2, 2), std::out_of_range);
    CHECK_THROWS_AS(label_angle(-1, 2), std::out_of_range);

    // injective over class indices for fixed n_classes
    for (int k = 2; k <= 10; ++k)
        for (int a = 0; a < k; ++a)
            for (int b = a + 1; b < k; ++b) CHECK(label_angle(a, k) != label_angle(b, k));
}

TEST_CASE("guided embedding places the ancilla last", "[embed]") {
    const std::vector<double> pixels{3, 4};

    SECTION("class 0 keeps the ancilla in |0>") {
        const Embedded e = embed_guided(pixels, 1, 0, 2);
        REQUIRE(e.state.n_qubits == 2);
        CHECK_THAT(e.state.amps[0].real(), WithinAbs(0.6, 1e-15));
        CHECK_THAT(std::abs(e.state.amps[1]), WithinAbs(0.0, 1e-15));
        CHECK_THAT(e.state.amps[2].real(), WithinAbs(0.8, 1e-15));
        CHECK_THAT(std::abs(e.state.amps[3]), WithinAbs(0.0, 1e-15));
    }

    SECTION("class 1 of 2 rotates the ancilla to |1> up to phase") {
        const Embedded e = embed_guided(pixels, 1, 1, 2);
        CHECK_THAT(std::abs(e.state.amps[0]), WithinAbs(0.0, 1e-12));
        CHECK_THAT(std::abs(e.state.amps[1]), WithinAbs(0.6, 1e-12));
        CHECK_THAT(std::abs(e.state.amps[3]), WithinAbs(0.8, 1e-12));
    }

    SECTION("class 1 of 4 gives ancilla (cos pi/4, -i sin pi/4)") {
        const Embedded e = embed_guided(pixels, 1, 1, 4);
        const double c = std::cos(std::numbers::pi / 4), s = std::sin(std::numbers::pi / 4);
        CHECK_THAT(std::abs(e.state.amps[0] - cplx(0.6 * c, 0)), WithinAbs(0.0, 1e-12));
        CHECK_THAT(std::abs(e.state.amps[1] - cplx(0, -0.6 * s)), WithinAbs(0.0, 1e-12));
        CHECK_THAT(std::abs(e.state.amps[2] - cplx(0.8 * c, 0)), WithinAbs(0.0, 1e-12));
        CHECK_THAT(std::abs(e.state.amps[3] - cplx(0, -0.8 * s)), WithinAbs(0.0, 1e-12));
    }
}
