// Experiment runner: executes every configured method over seeded trials and
// writes one averaged learning-curve CSV per scenario.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>

#include "lmprl/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Online p-norm selection for LMP adaptive filtering"};

    std::string config_path;
    std::optional<std::size_t> trials;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::size_t> steps;
    std::vector<std::string> methods;
    bool serial = false;
    bool print_config = false;
    bool write_trials = false;
    std::string dump_stream;

    app.add_option("--config", config_path, "JSON run configuration (defaults to the full-scale setup)")
        ->check(CLI::ExistingFile);
    app.add_option("--trials", trials, "Number of independent trials");
    app.add_option("--seed", seed, "Master seed");
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--steps", steps, "Steps per trial");
    app.add_option("--method", methods, "Run only the named method (repeatable)");
    app.add_flag("--serial", serial, "Run trials on one thread (reference path)");
    app.add_flag("--write-trials", write_trials, "Add per-trial columns to the CSVs");
    app.add_flag("--print-config", print_config, "Print the resolved configuration as JSON and exit");
    app.add_option("--dump-stream", dump_stream, "Write the first scenario's trial-0 stream to this CSV and exit");

    CLI11_PARSE(app, argc, argv);

    try {
        lmprl::RunSpec spec = config_path.empty() ? lmprl::full_scale_spec() : lmprl::load_run_spec(config_path);
        if (trials) spec.trials = *trials;
        if (seed) spec.master_seed = *seed;
        if (out_dir) spec.out_dir = *out_dir;
        if (write_trials) spec.write_trials = true;
        if (steps) {
            spec.experiment.total_steps = *steps;
            if (spec.experiment.change_step >= *steps) spec.experiment.change_step = *steps / 2;
        }
        if (!methods.empty()) {
            const std::set<std::string> wanted(methods.begin(), methods.end());
            std::vector<lmprl::MethodSpec> kept;
            for (auto& m : spec.methods)
                if (wanted.count(m.name)) kept.push_back(m);
            if (kept.size() != wanted.size()) throw lmprl::config_error("--method names an unknown method");
            spec.methods = std::move(kept);
        }
        spec.validate();

        if (print_config) {
            std::cout << lmprl::run_spec_to_json(spec).dump(2) << '\n';
            return EXIT_SUCCESS;
        }
        if (!dump_stream.empty()) {
            lmprl::dump_stream_csv(spec.experiment_for(0, 0), spec.experiment.total_steps, dump_stream);
            return EXIT_SUCCESS;
        }

        const auto written = lmprl::run(spec, serial ? lmprl::Execution::serial : lmprl::Execution::parallel);
        for (const auto& p : written) std::cout << p.string() << '\n';
    } catch (const lmprl::config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return EXIT_SUCCESS;
}
