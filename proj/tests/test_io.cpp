#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "qdd/checkpoint.hpp"
#include "qdd/config.hpp"
#include "qdd/manifest.hpp"
#include "qdd/png.hpp"
#include "qdd/sha1.hpp"

using namespace qdd;
using Catch::Matchers::ContainsSubstring;

namespace fs = std::filesystem;

TEST_CASE("sha1 known vectors", "[io]") {
    CHECK(sha1_hex("abc") == "a9993e364706816aba3e25717850c26c9cd0d89d");
    CHECK(sha1_hex("") == "da39a3ee5e6b4b0d3255bfef95601890afd80709");
    CHECK(sha1_hex("The quick brown fox jumps over the lazy dog") ==
          "2fd4e1c67a2d28fced849ee1bb76e7391b93eb12");
    // git hash-object compatibility
    const std::string blob = "hello\n";
    CHECK(git_blob_sha1(blob.data(), blob.size()) == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("config parse, typed access, canonical text", "[io]") {
    const std::string text = R"(
# a comment
[model]
type = qdense
image_qubits = 6
layers =  47

[optimizer]
lr = 0.00097
)";
    Config cfg = parse_config(text);
    CHECK(cfg.get("model", "type") == "qdense");
    CHECK(cfg.get_int("model", "layers") == 47);
    CHECK(cfg.get_double("optimizer", "lr") == 0.00097);
    CHECK(cfg.get_int_or("model", "reuploads", 0) == 0);
    CHECK_THROWS_WITH(cfg.get("schedule", "tau"), ContainsSubstring("schedule.tau"));
    CHECK_THROWS_AS(cfg.get_int("model", "type"), std::invalid_argument);

    // canonical round trip
    const Config back = parse_config(cfg.to_text());
    CHECK(back.to_text() == cfg.to_text());
}

TEST_CASE("config validation rejects typos by name", "[io]") {
    Config cfg = parse_config("[model]\ntype = qdense\nlayerz = 3\n");
    CHECK_THROWS_WITH(validate_config(cfg), ContainsSubstring("model.layerz"));
    Config cfg2 = parse_config("[modle]\ntype = qdense\n");
    CHECK_THROWS_WITH(validate_config(cfg2), ContainsSubstring("[modle]"));
    CHECK_THROWS_AS(parse_config("key = 1\n"), std::invalid_argument);        // key outside section
    CHECK_THROWS_AS(parse_config("[model\ntype = x\n"), std::invalid_argument);
}

TEST_CASE("all presets parse, validate, and build", "[io]") {
    for (const auto& [name, text] : preset_table()) {
        INFO(name);
        const Config cfg = load_preset(name);
        CHECK(cfg.has("model", "type"));
        CHECK(cfg.has("optimizer", "lr"));
        CHECK(cfg.get_int("schedule", "tau") >= 1);
    }
    CHECK(load_preset("qdense-mnist8-guided").get_double("optimizer", "lr") == 0.00097);
    CHECK_THROWS_WITH(load_preset("nope"), ContainsSubstring("unknown preset"));
}

TEST_CASE("checkpoint round trip", "[io]") {
    Rng rng(8);
    Checkpoint ckpt;
    ckpt.params = ParamStore::random_uniform(17, rng);
    ckpt.params.adam_m[3] = 0.25;
    ckpt.params.step_count = 42;
    ckpt.schedule = DiffusionSchedule::linear(7, 0.02, 0.4, TargetMode::Noise);
    ckpt.rng_state = rng_state_string(rng);

    const fs::path path = fs::temp_directory_path() / "qdd_test_ckpt.qdk";
    save_checkpoint(path.string(), ckpt);
    const Checkpoint back = load_checkpoint(path.string());
    CHECK(back.params.values == ckpt.params.values);
    CHECK(back.params.adam_m == ckpt.params.adam_m);
    CHECK(back.params.adam_v == ckpt.params.adam_v);
    CHECK(back.params.step_count == 42);
    CHECK(back.schedule.tau == 7);
    CHECK(back.schedule.betas == ckpt.schedule.betas);
    CHECK(back.schedule.target_mode == TargetMode::Noise);
    CHECK(back.rng_state == ckpt.rng_state);

    // the restored engine continues the exact stream
    Rng a = rng_from_state(back.rng_state), b = rng;
    for (int i = 0; i < 5; ++i) CHECK(a() == b());

    std::ofstream(path, std::ios::binary) << "not a checkpoint";
    CHECK_THROWS_WITH(load_checkpoint(path.string()), ContainsSubstring("magic"));
    fs::remove(path);
}

TEST_CASE("manifest round trip", "[io]") {
    Manifest m;
    m.config = load_preset("qdense-synthetic-tiny");
    m.command = "train";
    m.seed = 99;
    m.params_hash = "abc123";
    m.artifacts = {{"loss.csv", "deadbeef"}, {"checkpoint.qdk", "cafe"}};
    const Manifest back = manifest_from_text(manifest_to_text(m));
    CHECK(back.command == "train");
    CHECK(back.seed == 99);
    CHECK(back.params_hash == "abc123");
    CHECK(back.artifacts.size() == 2);
    CHECK(back.config.to_text() == m.config.to_text());
}

TEST_CASE("png writer emits deterministic well-formed files", "[io]") {
    ImageTensor img(1, 3, 5);
    for (std::size_t i = 0; i < img.values.size(); ++i) img.values[i] = double(i) / 15.0;
    const auto bytes1 = encode_png_gray8(image_to_gray8(img, 2), 10, 6);
    const auto bytes2 = encode_png_gray8(image_to_gray8(img, 2), 10, 6);
    CHECK(bytes1 == bytes2);

    // signature and IHDR dimensions
    REQUIRE(bytes1.size() > 33);
    const std::vector<unsigned char> sig = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    CHECK(std::equal(sig.begin(), sig.end(), bytes1.begin()));
    auto be32 = [&](std::size_t ofs) {
        return (unsigned(bytes1[ofs]) << 24) | (unsigned(bytes1[ofs + 1]) << 16) |
               (unsigned(bytes1[ofs + 2]) << 8) | unsigned(bytes1[ofs + 3]);
    };
    CHECK(be32(16) == 10);  // width
    CHECK(be32(20) == 6);   // height
}

TEST_CASE("qimg round trip", "[io]") {
    Rng rng(12);
    std::vector<ImageTensor> images;
    for (int i = 0; i < 3; ++i) {
        ImageTensor img(1, 4, 4);
        for (double& v : img.values) v = uniform_real(rng);
        images.push_back(std::move(img));
    }
    const fs::path path = fs::temp_directory_path() / "qdd_test.qimg";
    write_qimg(path.string(), images);
    const auto back = read_qimg(path.string());
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(back[i].values == images[i].values);
    fs::remove(path);
}
