#include <cstdint>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"holotrap: design and evaluate holographic trap arrays"};
    app.require_subcommand(1);

    std::string config, hologram_in, intensity_in, report_in;
    holotrap::cli::Overrides ov;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("config", config, "run configuration JSON")->required();
        sub->add_option_function<std::uint64_t>(
            "--seed",
            [&](std::uint64_t v) {
                ov.seed = v;
                ov.has_seed = true;
            },
            "override the seed");
        sub->add_option_function<int>(
            "--iterations",
            [&](int v) {
                ov.iterations = v;
                ov.has_iterations = true;
            },
            "override the solver iteration count");
        sub->add_option("--out", ov.out, "override the output directory");
    };

    CLI::App* design = app.add_subcommand(
        "design", "compute a hologram and its simulated focal intensity");
    add_common(design);

    CLI::App* evaluate = app.add_subcommand(
        "evaluate", "evaluate trap quality from a hologram or an intensity map");
    add_common(evaluate);
    evaluate->add_option("--hologram", hologram_in, "hologram PGM to simulate");
    evaluate->add_option("--intensity", intensity_in, "focal intensity CSV");

    CLI::App* loadsim = app.add_subcommand(
        "loadsim", "Monte Carlo single-atom occupancy from a trap report");
    add_common(loadsim);
    loadsim->add_option("--report", report_in, "trap report JSON")->required();

    CLI::App* exportcmd =
        app.add_subcommand("export", "compute a hologram and write only the PGM");
    add_common(exportcmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (design->parsed()) return holotrap::cli::cmd_design(config, ov);
    if (evaluate->parsed())
        return holotrap::cli::cmd_evaluate(config, hologram_in, intensity_in, ov);
    if (loadsim->parsed()) return holotrap::cli::cmd_loadsim(config, report_in, ov);
    if (exportcmd->parsed()) return holotrap::cli::cmd_export(config, ov);
    return 2;
}
