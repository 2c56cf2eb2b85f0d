#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"
#include "graylearn/config.hpp"
#include "graylearn/csv.hpp"

namespace {

using graylearn::cli::Options;

struct RawFlags {
    std::string seeds;
    std::string alphas;
};

void add_common(CLI::App* sub, Options& options, RawFlags& raw, bool needs_config) {
    auto* config = sub->add_option("--config", options.config_path, "Experiment config file");
    if (needs_config) config->required();
    sub->add_option("--out", options.out_dir, "Output directory (overrides experiment.out)");
    sub->add_option("--seeds", raw.seeds, "Comma-separated seed list (overrides experiment.seeds)");
    sub->add_option("--threads", options.threads, "Worker threads for seed-level parallelism (0 = all cores)");
    sub->add_option("--timings", options.timings_path, "Append per-run wall-clock seconds to this file");
}

bool finish_flags(const RawFlags& raw, Options& options) {
    try {
        if (!raw.seeds.empty()) {
            std::vector<std::uint64_t> seeds;
            for (const auto& item : graylearn::split_list(raw.seeds)) seeds.push_back(std::stoull(item));
            if (seeds.empty()) throw std::invalid_argument("empty");
            options.seeds = seeds;
        }
        if (!raw.alphas.empty()) {
            std::vector<double> alphas;
            for (const auto& item : graylearn::split_list(raw.alphas)) {
                auto v = graylearn::parse_double(graylearn::trim(item));
                if (!v) throw std::invalid_argument(item);
                alphas.push_back(*v);
            }
            options.alphas = alphas;
        }
    } catch (const std::exception&) {
        std::cerr << "error: --seeds expects non-negative integers and --alphas numbers, comma separated\n";
        return false;
    }
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"graylearn: confidence-blended training on contaminated data"};
    app.require_subcommand(1);

    Options options;
    RawFlags raw;

    add_common(app.add_subcommand("train", "Train one model per seed; write results.csv and checkpoints"), options,
               raw, true);
    add_common(app.add_subcommand("ablate", "Compare gl, standard, nl and standard+nl"), options, raw, true);
    auto* sweep = app.add_subcommand("sweep-alpha", "Sweep the OOD proportion for gl and standard");
    add_common(sweep, options, raw, true);
    sweep->add_option("--alphas", raw.alphas, "Comma-separated alphas (default 0.05..0.5 step 0.05)");
    auto* bounds = app.add_subcommand("bounds", "Evaluate both generalisation bounds for each CSV row");
    add_common(bounds, options, raw, false);
    bounds->add_option("inputs", options.inputs_path, "CSV of bound inputs")->required();
    add_common(app.add_subcommand("calibrate", "20-bin reliability tables for gl and standard"), options, raw,
               true);
    add_common(app.add_subcommand("mix", "Write the contaminated training set and the test set"), options, raw,
               true);
    auto* eval = app.add_subcommand("eval", "Score a checkpoint on a CSV test set or on the config's test split");
    add_common(eval, options, raw, false);
    eval->add_option("--checkpoint", options.checkpoint, "Checkpoint file")->required();
    eval->add_option("--data", options.data_path, "CSV test set (columns x0.., label[, dist])");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : graylearn::cli::kExitUsage;
    }
    if (!finish_flags(raw, options)) return graylearn::cli::kExitUsage;
    return graylearn::cli::run_command(app.get_subcommands().front()->get_name(), options, std::cerr);
}
