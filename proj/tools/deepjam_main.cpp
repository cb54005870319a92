#include <CLI11.hpp>
#include <cstdio>

#include "deepjam/commands.hpp"

namespace {

using deepjam::commands::Overrides;
namespace cmd = deepjam::commands;

struct CommonArgs {
    std::string config;
    std::string preset;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int iterations = 0;
    bool iterations_set = false;

    std::filesystem::path config_path() const {
        if (!preset.empty()) {
            if (!config.empty()) throw deepjam::ValidationError("use either --config or --preset, not both");
            return cmd::resolve_preset(preset);
        }
        return config;
    }

    Overrides overrides() const {
        Overrides o;
        if (seed_set) o.seed = seed;
        if (iterations_set) o.iterations = iterations;
        return o;
    }
};

void add_common(CLI::App* app, CommonArgs& args) {
    app->add_option("--config", args.config, "configuration file (flat key = value)");
    app->add_option("--preset", args.preset, "named preset from the presets directory");
    app->add_option("--seed", args.seed, "override the configured random seed")->each([&](const std::string&) {
        args.seed_set = true;
    });
    app->add_option("--iterations", args.iterations, "override the configured outer iteration count")
        ->each([&](const std::string&) { args.iterations_set = true; });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DeepJAM: joint elastic alignment of multivariate quasi-periodic functional data"};
    app.require_subcommand(1);

    CommonArgs sim_args, train_args;
    int scenario = 0;
    std::string out_dir, data_dir, checkpoint, result_dir;

    CLI::App* simulate = app.add_subcommand("simulate", "generate a simulated dataset");
    add_common(simulate, sim_args);
    simulate->add_option("--scenario", scenario, "1 (univariate) or 2 (trivariate)");
    simulate->add_option("--out", out_dir, "output dataset directory")->required();

    CLI::App* train = app.add_subcommand("train", "run the joint alignment on the training split");
    add_common(train, train_args);
    train->add_option("--data", data_dir, "dataset directory")->required();
    train->add_option("--out", out_dir, "output run directory")->required();

    CLI::App* align = app.add_subcommand("align", "align a dataset with a trained checkpoint");
    align->add_option("--checkpoint", checkpoint, "checkpoint file or training run directory")->required();
    align->add_option("--data", data_dir, "dataset directory")->required();
    align->add_option("--out", out_dir, "output directory")->required();

    CLI::App* tmpl = app.add_subcommand("template", "recompute common and subject templates for a run");
    tmpl->add_option("--out", result_dir, "training run directory")->required();

    CLI::App* evaluate = app.add_subcommand("evaluate", "variance report and plot data for a run");
    evaluate->add_option("--out", result_dir, "run directory to evaluate")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed())
            cmd::run_simulate(scenario, sim_args.config_path(), sim_args.overrides(), out_dir);
        else if (train->parsed())
            cmd::run_train(data_dir, train_args.config_path(), train_args.overrides(), out_dir);
        else if (align->parsed())
            cmd::run_align(checkpoint, data_dir, out_dir);
        else if (tmpl->parsed())
            cmd::run_template(result_dir);
        else if (evaluate->parsed())
            cmd::run_evaluate(result_dir);
    } catch (const deepjam::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(e.category());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(deepjam::ErrorCategory::runtime);
    }
    return 0;
}
