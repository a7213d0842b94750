// qdd: train, sample, compose, evaluate, and inpaint quantum denoising
// diffusion models from the command line.

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qdd/runner.hpp"

namespace {

void add_common_options(CLI::App* sub, qdd::RunOptions& opts) {
    sub->add_option("--config", opts.config_path, "run configuration file");
    std::string preset_help = "named preset; one of:";
    for (const auto& [name, text] : qdd::preset_table()) preset_help += " " + name;
    sub->add_option("--preset", opts.preset, preset_help);
    sub->add_option("--seed", opts.seed, "RNG seed (overrides run.seed)");
    sub->add_option("--tau", opts.tau, "diffusion steps (overrides schedule.tau)");
    sub->add_option("--out-dir", opts.out_dir, "output directory")->required();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantum denoising diffusion toolkit"};
    app.require_subcommand(1);
    qdd::RunOptions opts;

    for (const char* name : {"train", "sample", "compose", "eval", "inpaint"}) {
        CLI::App* sub = app.add_subcommand(name, std::string(name) + " run");
        add_common_options(sub, opts);
        sub->callback([&opts, name] { opts.command = name; });
    }
    CLI::App* replay = app.add_subcommand("replay", "re-run a manifest and verify artifact hashes");
    replay->add_option("manifest", opts.manifest_path, "manifest.qdd to replay")->required();
    replay->add_option("--out-dir", opts.out_dir, "output directory (default: <manifest dir>/replay)");
    replay->callback([&opts] { opts.command = "replay"; });

    CLI11_PARSE(app, argc, argv);
    try {
        return qdd::run_command(opts);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
