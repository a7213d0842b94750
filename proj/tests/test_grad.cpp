#include <catch2/catch_amalgamated.hpp>

#include <numbers>

#include "qdd/embed.hpp"
#include "qdd/grad.hpp"
#include "qdd/vqc.hpp"
#include "support/oracles.hpp"

using namespace qdd;
using Catch::Matchers::WithinAbs;

namespace {

// p(|0>) of a single-qubit RX circuit: cos^2(theta/2).
OutputLossFn rx_prob_loss() {
    OutputLossFn fn;
    fn.outputs = [](std::span<const double> p) {
        const CircuitSpec c{1, {Gate::rx(0)}, {1}};
        const StateVector out = apply_circuit(StateVector(1), c, p);
        return std::vector<double>{out.probability(0)};
    };
    fn.loss = [](std::span<const double> out) { return out[0]; };
    fn.loss_grad = [](std::span<const double> out) { return std::vector<double>{1.0}; };
    return fn;
}

}  // namespace

TEST_CASE("shift rule on cos^2(theta/2)", "[grad]") {
    const OutputLossFn fn = rx_prob_loss();
    CHECK_THAT(parameter_shift_grad(fn, std::vector<double>{0.0})[0], WithinAbs(0.0, 1e-12));
    CHECK_THAT(parameter_shift_grad(fn, std::vector<double>{std::numbers::pi / 2})[0],
               WithinAbs(-0.5, 1e-12));
    // the scalar variant is exact here too: the loss IS a circuit output
    CHECK_THAT(parameter_shift_scalar_grad([&](std::span<const double> p) { return fn(p); },
                                           std::vector<double>{std::numbers::pi / 2})[0],
               WithinAbs(-0.5, 1e-12));
}

TEST_CASE("shift rule matches finite differences on entangled MSE losses", "[grad]") {
    Rng rng(17);
    for (int trial = 0; trial < 6; ++trial) {
        const int n = uniform_int(rng, 2, 4);
        const int layers = uniform_int(rng, 1, 3);
        const CircuitSpec circuit = build_entangling_circuit(EntanglingStack(n, layers));
        std::vector<double> pixels(std::size_t(1) << n);
        std::vector<double> target(pixels.size());
        for (double& p : pixels) p = uniform_real(rng, 0.05, 1.0);
        for (double& t : target) t = uniform_real(rng);
        const Embedded in = amplitude_embed(pixels, n);

        OutputLossFn fn;
        fn.outputs = [&](std::span<const double> p) {
            return readout(apply_circuit(in.state, circuit, p), n, int(pixels.size()), in.norm);
        };
        fn.loss = [&](std::span<const double> out) {
            double s = 0.0;
            for (std::size_t k = 0; k < out.size(); ++k) {
                const double d = out[k] - target[k];
                s += d * d;
            }
            return s / double(out.size());
        };
        fn.loss_grad = [&](std::span<const double> out) {
            std::vector<double> g(out.size());
            for (std::size_t k = 0; k < out.size(); ++k)
                g[k] = 2.0 * (out[k] - target[k]) / double(out.size());
            return g;
        };

        const auto theta = oracle::random_params(circuit.param_count(), rng);
        const auto ps = parameter_shift_grad(fn, theta);
        const auto fd = finite_diff_grad([&](std::span<const double> p) { return fn(p); }, theta);
        double scale = 0.0, worst = 0.0;
        for (std::size_t j = 0; j < theta.size(); ++j) {
            scale = std::max(scale, std::abs(fd[j]));
            worst = std::max(worst, std::abs(ps[j] - fd[j]));
        }
        CHECK(worst <= 1e-5 * std::max(scale, 1e-12));

        // adjoint fast path computes the same gradient
        auto cotangent = [&](const StateVector& psi) {
            const std::vector<double> out = readout(psi, n, int(pixels.size()), in.norm);
            const std::vector<double> dl = fn.loss_grad(out);
            std::vector<cplx> w(psi.dim());
            for (std::size_t i = 0; i < psi.dim(); ++i) w[i] = dl[i] * in.norm * psi.amps[i];
            return w;
        };
        const auto aj = adjoint_state_grad(circuit, in.state, theta, cotangent);
        for (std::size_t j = 0; j < theta.size(); ++j) CHECK_THAT(aj[j], WithinAbs(ps[j], 1e-9));
    }
}

TEST_CASE("finite differences sanity", "[grad]") {
    const auto zero = finite_diff_grad([](std::span<const double>) { return 3.5; },
                                       std::vector<double>{0.3, -1.0});
    CHECK(zero == std::vector<double>{0.0, 0.0});
    const auto sq = finite_diff_grad([](std::span<const double> p) { return p[0] * p[0]; },
                                     std::vector<double>{1.0});
    CHECK_THAT(sq[0], WithinAbs(2.0, 1e-6));
    CHECK_THROWS_AS(finite_diff_grad([](std::span<const double>) { return 0.0; },
                                     std::vector<double>{1.0}, 0.0),
                    std::invalid_argument);
}

TEST_CASE("adam update", "[grad]") {
    SECTION("zero gradient leaves values, bumps the step count") {
        ParamStore s(std::vector<double>{0.5, -0.5});
        s = adam_step(std::move(s), std::vector<double>{0, 0}, 0.1);
        CHECK(s.values == std::vector<double>{0.5, -0.5});
        CHECK(s.step_count == 1);
    }
    SECTION("first step moves by about lr") {
        ParamStore s(std::vector<double>{1.0});
        s = adam_step(std::move(s), std::vector<double>{1.0}, 0.1);
        CHECK_THAT(s.values[0], WithinAbs(0.9, 1e-6));
    }
    SECTION("values drifting past pi wrap into [-pi, pi)") {
        ParamStore s(std::vector<double>{std::numbers::pi - 1e-4});
        // large gradient pushes the value below -pi before remapping
        s = adam_step(std::move(s), std::vector<double>{-1.0}, 1.0);
        CHECK(s.values[0] >= -std::numbers::pi);
        CHECK(s.values[0] < std::numbers::pi);
    }
    SECTION("non-finite gradients are rejected") {
        ParamStore s(std::vector<double>{0.0});
        CHECK_THROWS_AS(adam_step(std::move(s), std::vector<double>{std::nan("")}, 0.1),
                        std::runtime_error);
    }
}

TEST_CASE("remap", "[grad]") {
    CHECK(remap_angle(0.0) == 0.0);
    CHECK_THAT(remap_angle(3 * std::numbers::pi / 2), WithinAbs(-std::numbers::pi / 2, 1e-15));
    CHECK(remap_angle(-std::numbers::pi) == -std::numbers::pi);

    Rng rng(8);
    for (int i = 0; i < 200; ++i) {
        const double x = uniform_real(rng, -50.0, 50.0);
        const double once = remap_angle(x);
        CHECK(once >= -std::numbers::pi);
        CHECK(once < std::numbers::pi);
        CHECK(remap_angle(once) == once);  // idempotent
    }
}

TEST_CASE("circuit outputs are 2pi-periodic under remapping", "[grad]") {
    // exact in exact arithmetic; floating-point trig of theta vs theta-2pi
    // differs in the last ulps, so the check is at 1e-12
    Rng rng(19);
    const CircuitSpec circuit = build_entangling_circuit(EntanglingStack(3, 2));
    std::vector<double> theta(circuit.param_count());
    for (double& t : theta) t = uniform_real(rng, -8.0, 8.0);
    const Embedded in = amplitude_embed(std::vector<double>{0.2, 0.4, 0.1, 0.9, 0.3, 0.5, 0.7, 0.6}, 3);
    const auto before = readout(apply_circuit(in.state, circuit, theta), 3, 8, in.norm);
    const auto after = readout(apply_circuit(in.state, circuit, remap(theta)), 3, 8, in.norm);
    for (std::size_t i = 0; i < before.size(); ++i) CHECK_THAT(after[i], WithinAbs(before[i], 1e-12));
}
