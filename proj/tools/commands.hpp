#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace graylearn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;

struct Options {
    std::string config_path;
    /// Overrides experiment.out.
    std::string out_dir;
    /// Override experiment.seeds / experiment.alphas.
    std::optional<std::vector<std::uint64_t>> seeds;
    std::optional<std::vector<double>> alphas;
    /// 0 picks the hardware concurrency.
    std::size_t threads = 0;
    /// eval: checkpoint to score, and an optional CSV test set.
    std::string checkpoint;
    std::string data_path;
    /// bounds: CSV of bound inputs.
    std::string inputs_path;
    /// Where to append per-run wall-clock seconds; empty skips it.
    std::string timings_path;
};

int cmd_train(const Options& options, std::ostream& log);
int cmd_ablate(const Options& options, std::ostream& log);
int cmd_sweep_alpha(const Options& options, std::ostream& log);
int cmd_bounds(const Options& options, std::ostream& log);
int cmd_calibrate(const Options& options, std::ostream& log);
int cmd_mix(const Options& options, std::ostream& log);
int cmd_eval(const Options& options, std::ostream& log);

/// Dispatches by subcommand name and maps exceptions to exit codes:
/// numeric aborts give 3, every other library error 2.
int run_command(const std::string& name, const Options& options, std::ostream& log);

/// 0.05, 0.10, ..., 0.50.
std::vector<double> default_alpha_grid();

}  // namespace graylearn::cli
