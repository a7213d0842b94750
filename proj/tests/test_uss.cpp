#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <numbers>

#include "qdd/uss.hpp"
#include "support/oracles.hpp"

using namespace qdd;
using Catch::Matchers::WithinAbs;

namespace {

double state_distance(const StateVector& a, const std::vector<cplx>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.amps.size(); ++i) worst = std::max(worst, std::abs(a.amps[i] - b[i]));
    return worst;
}

double matrix_distance(const UnitaryMatrix& a, const UnitaryMatrix& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.entries.size(); ++i)
        worst = std::max(worst, std::abs(a.entries[i] - b.entries[i]));
    return worst;
}

}  // namespace

TEST_CASE("composition basics", "[uss]") {
    Rng rng(3);
    const CircuitSpec c = oracle::random_circuit(3, 2, rng);
    const auto params = oracle::random_params(c.param_count(), rng);

    CHECK(matrix_distance(compose_diffusion_unitary(c, params, 0), UnitaryMatrix::identity(8)) == 0.0);
    CHECK(matrix_distance(compose_diffusion_unitary(c, params, 1), circuit_unitary(c, params)) == 0.0);
}

TEST_CASE("U^5 matches five gate-by-gate passes", "[uss]") {
    Rng rng(13);
    const CircuitSpec c = oracle::random_circuit(4, 3, rng);
    const auto params = oracle::random_params(c.param_count(), rng);
    const UnitaryMatrix u5 = compose_diffusion_unitary(c, params, 5);
    StateVector s = oracle::random_state(4, rng);
    const std::vector<cplx> via_matrix = u5.apply(s.amps);
    for (int k = 0; k < 5; ++k) s = apply_circuit(s, c, params);
    CHECK(state_distance(s, via_matrix) < 1e-9);
}

TEST_CASE("compose(tau1 + tau2) = compose(tau1) compose(tau2)", "[uss]") {
    Rng rng(23);
    const CircuitSpec c = oracle::random_circuit(3, 2, rng);
    const auto params = oracle::random_params(c.param_count(), rng);
    const UnitaryMatrix lhs = compose_diffusion_unitary(c, params, 7);
    const UnitaryMatrix rhs =
        compose_diffusion_unitary(c, params, 3).multiply(compose_diffusion_unitary(c, params, 4));
    CHECK(matrix_distance(lhs, rhs) < 1e-9);
}

TEST_CASE("U dagger inverts U", "[uss]") {
    Rng rng(33);
    const CircuitSpec c = oracle::random_circuit(3, 3, rng);
    const auto params = oracle::random_params(c.param_count(), rng);
    const UnitaryMatrix u = compose_diffusion_unitary(c, params, 4);
    const StateVector x = oracle::random_state(3, rng);
    // z = U^-1 x via the adjoint, then U z should reconstruct x
    std::vector<cplx> z(u.dim, cplx(0, 0));
    for (std::size_t i = 0; i < u.dim; ++i)
        for (std::size_t j = 0; j < u.dim; ++j) z[i] += std::conj(u.at(j, i)) * x.amps[j];
    const std::vector<cplx> back = u.apply(z);
    double worst = 0.0;
    for (std::size_t i = 0; i < u.dim; ++i) worst = std::max(worst, std::abs(back[i] - x.amps[i]));
    CHECK(worst < 1e-9);
}

TEST_CASE("state MAE properties", "[uss]") {
    const Embedded t = amplitude_embed(std::vector<double>{0.3, 0.9, 0.2, 0.1}, 2);

    SECTION("zero on identical states") { CHECK(uss_loss(t.state, std::vector<double>{0.3, 0.9, 0.2, 0.1}) == 0.0); }

    SECTION("global phase pi is penalized as twice the mean modulus") {
        StateVector flipped = t.state;
        for (cplx& a : flipped.amps) a = -a;
        double mean_mod = 0.0;
        for (const cplx& a : t.state.amps) mean_mod += std::abs(a);
        mean_mod /= double(t.state.dim());
        CHECK_THAT(uss_loss(flipped, std::vector<double>{0.3, 0.9, 0.2, 0.1}),
                   WithinAbs(2.0 * mean_mod, 1e-12));
    }

    SECTION("orthogonal basis states in dim 4 give 0.5") {
        const StateVector a = StateVector::basis(2, 0);
        CHECK_THAT(uss_loss(a, std::vector<double>{0, 1, 0, 0}), WithinAbs(0.5, 1e-15));
    }

    SECTION("zero-norm target is rejected") {
        CHECK_THROWS_AS(uss_loss(t.state, std::vector<double>{0, 0, 0, 0}), std::invalid_argument);
    }

    SECTION("non-negative on random pairs") {
        Rng rng(2);
        for (int i = 0; i < 20; ++i) {
            const StateVector a = oracle::random_state(3, rng);
            const StateVector b = oracle::random_state(3, rng);
            CHECK(state_mae(a, b) >= 0.0);
        }
    }
}

TEST_CASE("USS parameter counts match the headline model", "[uss]") {
    CHECK(USSModel(USSConfig{6, 56, false, false, 0, 2}).param_count() == 1008);
    CHECK(USSModel(USSConfig{6, 47, true, false, 0, 2}).param_count() == 47 * 3 * 7);
    CHECK(USSModel(USSConfig{6, 47, false, true, 0, 2}).param_count() == 47 * 3 * 7);
}

TEST_CASE("guided USS folds the label rotation into the circuit", "[uss]") {
    const USSModel model(USSConfig{2, 2, false, true, 1, 2});
    const CircuitSpec& c0 = model.circuit(0);
    const CircuitSpec& c1 = model.circuit(1);
    REQUIRE(c0.gates.size() == c1.gates.size());
    int fixed = 0;
    for (std::size_t i = 0; i < c0.gates.size(); ++i)
        if (c0.gates[i].fixed) {
            ++fixed;
            CHECK(c0.gates[i].kind == GateKind::RX);
            CHECK(c0.gates[i].q0 == 2);   // ancilla is the last qubit
            CHECK(c0.gates[i].angles[0] == 0.0);
            CHECK_THAT(c1.gates[i].angles[0], WithinAbs(std::numbers::pi, 1e-15));
        }
    CHECK(fixed == 2);  // initial embedding plus one re-upload
    CHECK_THROWS_AS(model.circuit(std::nullopt), std::invalid_argument);
}

TEST_CASE("USS training decreases the loss", "[uss]") {
    Rng rng(7);
    const USSModel model(USSConfig{2, 2, false, false, 0, 2});
    const DiffusionSchedule s = DiffusionSchedule::linear(3);
    std::vector<ImageTensor> batch;
    for (int i = 0; i < 4; ++i) {
        ImageTensor img(1, 2, 2);
        for (double& v : img.values) v = uniform_real(rng, 0.1, 1.0);
        batch.push_back(std::move(img));
    }

    SECTION("lr = 0 leaves parameters fixed") {
        ParamStore p = ParamStore::random_uniform(model.param_count(), rng);
        const auto before = p.values;
        train_uss_step(model, p, batch, {}, s, 0.0, rng);
        CHECK(p.values == before);
    }

    SECTION("adjoint training reduces the summed MAE") {
        Rng r2(19);
        ParamStore p = ParamStore::random_uniform(model.param_count(), r2);
        double first = 0.0, last = 0.0;
        for (int step = 0; step < 8; ++step) {
            const double l = train_uss_step(model, p, batch, {}, s, 0.05, r2,
                                            GradientMethod::Adjoint).loss;
            if (step == 0) first = l;
            last = l;
        }
        CHECK(last < first);
    }

    SECTION("shift-rule training also descends") {
        Rng r2(19);
        ParamStore p = ParamStore::random_uniform(model.param_count(), r2);
        double first = 0.0, last = 0.0;
        for (int step = 0; step < 8; ++step) {
            const double l = train_uss_step(model, p, batch, {}, s, 0.05, r2).loss;
            if (step == 0) first = l;
            last = l;
        }
        CHECK(last < first);
    }
}

TEST_CASE("uss_sample with the identity returns rescaled noise moduli", "[uss]") {
    Rng a(5), b(5);
    const auto imgs = uss_sample(UnitaryMatrix::identity(16), 1, 4, 4, false, a);
    REQUIRE(imgs.size() == 1);
    const StateVector z = draw_uss_input(4, b);
    std::vector<double> moduli(16);
    for (std::size_t i = 0; i < 16; ++i) moduli[i] = std::abs(z.amps[i]);
    ImageTensor expect(1, 4, 4);
    expect.values = moduli;
    expect = rescale_minmax(std::move(expect));
    CHECK(imgs[0].values == expect.values);
    for (double v : imgs[0].values) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("input noise statistics match the documented distributions", "[uss][slow]") {
    Rng rng(77);
    double re_sum = 0, re_sq = 0, im_sum = 0, im_sq = 0;
    const int trials = 200;
    const int dim = 64;
    for (int i = 0; i < trials; ++i) {
        StateVector z(6);
        // reproduce the pre-normalization draw to check the raw statistics
        for (cplx& amp : z.amps) amp = cplx(normal(rng, 0.4, 0.24), normal(rng, 0.0, 0.14));
        for (const cplx& amp : z.amps) {
            re_sum += amp.real();
            re_sq += amp.real() * amp.real();
            im_sum += amp.imag();
            im_sq += amp.imag() * amp.imag();
        }
    }
    const double n = double(trials) * dim;
    CHECK_THAT(re_sum / n, WithinAbs(0.4, 0.01));
    CHECK_THAT(std::sqrt(re_sq / n - (re_sum / n) * (re_sum / n)), WithinAbs(0.24, 0.01));
    CHECK_THAT(im_sum / n, WithinAbs(0.0, 0.01));
    CHECK_THAT(std::sqrt(im_sq / n - (im_sum / n) * (im_sum / n)), WithinAbs(0.14, 0.01));
}

TEST_CASE("unitary file round trip and corruption detection", "[uss][io]") {
    namespace fs = std::filesystem;
    Rng rng(91);
    const CircuitSpec c = oracle::random_circuit(3, 2, rng);
    const auto params = oracle::random_params(c.param_count(), rng);
    const UnitaryMatrix u = compose_diffusion_unitary(c, params, 3);
    const fs::path path = fs::temp_directory_path() / "qdd_test_unitary.qdu";
    save_unitary(path.string(), u, 3);
    const LoadedUnitary back = load_unitary(path.string());
    CHECK(back.tau == 3);
    CHECK(back.matrix.dim == u.dim);
    CHECK(matrix_distance(back.matrix, u) == 0.0);

    // flip one payload byte: the checksum must catch it
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekg(64);
    char byte = 0;
    f.read(&byte, 1);
    byte = char(byte ^ 0x01);
    f.seekp(64);
    f.write(&byte, 1);
    f.close();
    CHECK_THROWS_AS(load_unitary(path.string()), std::runtime_error);
    fs::remove(path);
}
