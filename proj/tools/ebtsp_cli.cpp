// Command-line runner for the analytic evaluator and the simulator.

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ebtsp/ctmc.hpp"
#include "ebtsp/experiment.hpp"

#ifndef EBTSP_PRESET_DIR
#define EBTSP_PRESET_DIR "presets"
#endif

namespace {

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ebtsp::ValidationError("cannot write " + path);
    }
    out << text;
}

ebtsp::ModelSpec load_model(const std::string& path, const std::string& mechanism) {
    auto spec = ebtsp::load_config(path);
    if (!mechanism.empty()) {
        spec.mechanisms = ebtsp::parse_mechanisms(mechanism);
        spec.validate();
    }
    return spec;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-space priority buffer models: exact CTMC evaluation and simulation"};
    app.require_subcommand(1);

    std::string config_path, preset, out_path, mechanism, sim_path, dump_path;
    std::string preset_dir = EBTSP_PRESET_DIR;
    std::uint64_t seed = 1;
    std::uint64_t events = 1'000'000;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--out", out_path, "Output file (stdout when omitted)");
        sub->add_option("--mechanism", mechanism, "s, c or both (overrides the config)")
            ->check(CLI::IsMember({"s", "c", "both", "simple", "combined"}));
    };
    auto add_sim = [&](CLI::App* sub) {
        sub->add_option("--seed", seed, "Simulation seed");
        sub->add_option("--events", events, "Simulation event budget");
    };

    auto* solve = app.add_subcommand("solve", "Analytic performance report per mechanism");
    solve->add_option("--config", config_path, "Model config file")->required();
    solve->add_option("--dump-generator", dump_path, "Also write the generator as index/rate triples");
    add_common(solve);

    auto* sweep = app.add_subcommand("sweep", "Parameter sweep comparing the mechanisms");
    auto* sweep_cfg = sweep->add_option("--config", config_path, "Sweep file");
    auto* sweep_preset = sweep->add_option("--preset", preset, "Bundled sweep: fig3, fig4, fig5, fig6 or fig7");
    sweep_cfg->excludes(sweep_preset);
    sweep->add_option("--preset-dir", preset_dir, "Directory holding the bundled sweeps");
    add_common(sweep);
    add_sim(sweep);

    auto* simulate = app.add_subcommand("simulate", "Discrete-event simulation estimates");
    simulate->add_option("--config", config_path, "Model config file")->required();
    add_common(simulate);
    add_sim(simulate);

    auto* compare = app.add_subcommand("compare", "Check analytic values against simulation intervals");
    compare->add_option("--config", config_path, "Model config file")->required();
    compare->add_option("--sim", sim_path, "Reuse the output of an earlier `simulate` run");
    add_common(compare);
    add_sim(compare);

    CLI11_PARSE(app, argc, argv);

    try {
        const ebtsp::SimOptions sim{seed, events, 20};
        if (solve->parsed()) {
            const auto spec = load_model(config_path, mechanism);
            write_output(out_path, ebtsp::solve_command(spec));
            if (!dump_path.empty()) {
                std::ofstream dump(dump_path);
                for (auto m : spec.mechanisms) {
                    dump << "# mechanism " << ebtsp::to_string(m) << "\n";
                    ebtsp::write_generator_dump(dump, ebtsp::build_generator(spec.with(m)));
                }
            }
        } else if (sweep->parsed()) {
            if (config_path.empty() && preset.empty()) {
                throw ebtsp::ValidationError("sweep needs --config or --preset");
            }
            const std::string path = preset.empty() ? config_path : ebtsp::preset_path(preset_dir, preset);
            auto spec = ebtsp::load_sweep(path);
            if (!mechanism.empty()) {
                spec.model.mechanisms = ebtsp::parse_mechanisms(mechanism);
            }
            write_output(out_path, ebtsp::sweep_command(spec, sim));
        } else if (simulate->parsed()) {
            write_output(out_path, ebtsp::simulate_command(load_model(config_path, mechanism), sim));
        } else if (compare->parsed()) {
            std::optional<ebtsp::SimFile> previous;
            if (!sim_path.empty()) {
                std::ifstream in(sim_path);
                if (!in) {
                    throw ebtsp::ValidationError("cannot open " + sim_path);
                }
                previous = ebtsp::parse_sim_file(in, sim_path);
            }
            const auto res = ebtsp::compare_command(load_model(config_path, mechanism), sim, previous);
            write_output(out_path, res.csv);
            return res.all_covered ? 0 : 2;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
