#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include "graylearn/bounds.hpp"
#include "graylearn/checkpoint.hpp"
#include "graylearn/config.hpp"
#include "graylearn/csv.hpp"
#include "graylearn/dataset.hpp"
#include "graylearn/errors.hpp"
#include "graylearn/experiment.hpp"
#include "graylearn/metrics.hpp"

namespace graylearn::cli {

namespace fs = std::filesystem;

namespace {

struct Context {
    ExperimentConfig config;
    fs::path out;
    std::size_t threads = 1;
    std::string command;

    std::string comment() const {
        std::string seeds;
        for (std::size_t i = 0; i < config.seeds.size(); ++i) {
            if (i) seeds += ';';
            seeds += std::to_string(config.seeds[i]);
        }
        return "graylearn " + command + " config_hash=" + config.config_hash + " seeds=" + seeds;
    }
};

std::size_t resolve_threads(std::size_t requested) {
    if (requested > 0) return requested;
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

fs::path prepare_out_dir(const std::string& dir) {
    fs::path out(dir.empty() ? "out" : dir);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec || !fs::is_directory(out)) throw UsageError("cannot create output directory '" + out.string() + "'");
    return out;
}

Context load_context(const std::string& command, const Options& options) {
    if (options.config_path.empty()) throw UsageError(command + ": --config is required");
    ConfigFile file = ConfigFile::load(options.config_path);
    if (options.seeds) {
        std::string text;
        for (std::size_t i = 0; i < options.seeds->size(); ++i) {
            if (i) text += ',';
            text += std::to_string((*options.seeds)[i]);
        }
        file.set("experiment.seeds", text);
    }
    if (options.alphas) {
        std::string text;
        for (std::size_t i = 0; i < options.alphas->size(); ++i) {
            if (i) text += ',';
            text += format_double((*options.alphas)[i]);
        }
        file.set("experiment.alphas", text);
    }
    Context ctx;
    ctx.config = parse_experiment_config(file);
    ctx.command = command;
    ctx.out = prepare_out_dir(options.out_dir.empty() ? ctx.config.output_dir : options.out_dir);
    ctx.threads = resolve_threads(options.threads);
    return ctx;
}

std::string run_header() { return "method,alpha,labeling,seed,accuracy,ece,confidence_gap\n"; }

std::string run_line(const ResultRow& r) {
    return r.method + "," + format_double(r.alpha) + "," + r.labeling + "," + std::to_string(r.seed) + "," +
           format_double(r.accuracy) + "," + format_double(r.ece) + "," + format_double(r.confidence_gap) + "\n";
}

std::string aggregate_header() {
    return "method,alpha,labeling,runs,accuracy_mean,accuracy_sd,ece_mean,ece_sd,gap_mean,gap_sd\n";
}

std::string aggregate_line(const std::vector<const ResultRow*>& rows) {
    std::vector<double> acc, ece, gap;
    for (const auto* r : rows) {
        acc.push_back(r->accuracy);
        ece.push_back(r->ece);
        gap.push_back(r->confidence_gap);
    }
    const auto a = summarize(acc);
    const auto e = summarize(ece);
    const auto g = summarize(gap);
    const ResultRow& first = *rows.front();
    return first.method + "," + format_double(first.alpha) + "," + first.labeling + "," + std::to_string(a.n) + "," +
           format_double(a.mean) + "," + format_double(a.sd) + "," + format_double(e.mean) + "," +
           format_double(e.sd) + "," + format_double(g.mean) + "," + format_double(g.sd) + "\n";
}

void write_csv(const Context& ctx, const std::string& name, const std::string& body, std::ostream& log) {
    const fs::path path = ctx.out / name;
    write_file_atomic(path.string(), "# " + ctx.comment() + "\n" + body);
    log << "wrote " << path.string() << "\n";
}

void append_timings(const Options& options, const std::string& command, const std::vector<RunOutput>& runs) {
    if (options.timings_path.empty()) return;
    std::ofstream out(options.timings_path, std::ios::app);
    if (!out) throw UsageError("cannot open timings file '" + options.timings_path + "'");
    for (const auto& run : runs) {
        out << command << "," << run.row.method << "," << format_double(run.row.alpha) << "," << run.row.labeling
            << "," << run.row.seed << "," << format_double(run.row.wall_clock_seconds) << "\n";
    }
}

// A grid of (method, mixture, seed) cells run in parallel, results in grid order.
struct Cell {
    LossMethod method;
    MixtureSpec mixture;
    std::uint64_t seed = 0;
};

std::vector<RunOutput> run_cells(const Context& ctx, const std::vector<Cell>& cells, std::ostream& log) {
    log << ctx.command << ": " << cells.size() << " runs on " << std::min(ctx.threads, cells.size())
        << " threads\n";
    return run_parallel(cells.size(), ctx.threads, [&](std::size_t i) {
        return run_single(ctx.config, cells[i].method, cells[i].mixture, cells[i].seed);
    });
}

}  // namespace

std::vector<double> default_alpha_grid() {
    std::vector<double> grid;
    for (int i = 1; i <= 10; ++i) grid.push_back(i / 20.0);
    return grid;
}

int cmd_train(const Options& options, std::ostream& log) {
    const Context ctx = load_context("train", options);
    std::vector<Cell> cells;
    for (auto seed : ctx.config.seeds) cells.push_back({ctx.config.train.method, ctx.config.mixture, seed});
    const auto runs = run_cells(ctx, cells, log);

    std::string body = run_header();
    for (const auto& run : runs) {
        body += run_line(run.row);
        const fs::path ckpt = ctx.out / ("checkpoint_seed" + std::to_string(run.row.seed) + ".glck");
        checkpoint_save(run.record.params, ckpt.string());
    }
    write_csv(ctx, "results.csv", body, log);
    append_timings(options, ctx.command, runs);
    return kExitOk;
}

int cmd_ablate(const Options& options, std::ostream& log) {
    const Context ctx = load_context("ablate", options);
    const std::vector<LossMethod> methods{LossMethod::gl(), LossMethod::standard(), LossMethod::nl(),
                                          LossMethod::standard_plus_nl()};
    std::vector<Cell> cells;
    for (const auto& m : methods) {
        for (auto seed : ctx.config.seeds) cells.push_back({m, ctx.config.mixture, seed});
    }
    const auto runs = run_cells(ctx, cells, log);

    std::string detail = run_header();
    std::string summary = aggregate_header();
    const std::size_t n_seeds = ctx.config.seeds.size();
    for (std::size_t m = 0; m < methods.size(); ++m) {
        std::vector<const ResultRow*> rows;
        for (std::size_t s = 0; s < n_seeds; ++s) {
            const auto& row = runs[m * n_seeds + s].row;
            detail += run_line(row);
            rows.push_back(&row);
        }
        summary += aggregate_line(rows);
    }
    write_csv(ctx, "ablation_runs.csv", detail, log);
    write_csv(ctx, "ablation.csv", summary, log);
    append_timings(options, ctx.command, runs);
    return kExitOk;
}

int cmd_sweep_alpha(const Options& options, std::ostream& log) {
    const Context ctx = load_context("sweep-alpha", options);
    const std::vector<double> alphas = ctx.config.alphas.empty() ? default_alpha_grid() : ctx.config.alphas;
    const std::vector<LossMethod> methods{LossMethod::gl(), LossMethod::standard()};
    const std::vector<OodLabeling> labelings{OodLabeling::Specific, OodLabeling::Random};

    std::vector<Cell> cells;
    for (double alpha : alphas) {
        for (const auto& m : methods) {
            for (auto labeling : labelings) {
                MixtureSpec mixture = ctx.config.mixture;
                mixture.alpha = alpha;
                mixture.labeling = labeling;
                for (auto seed : ctx.config.seeds) cells.push_back({m, mixture, seed});
            }
        }
    }
    const auto runs = run_cells(ctx, cells, log);

    std::string detail = run_header();
    std::string summary = aggregate_header();
    const std::size_t n_seeds = ctx.config.seeds.size();
    for (std::size_t group = 0; group * n_seeds < runs.size(); ++group) {
        std::vector<const ResultRow*> rows;
        for (std::size_t s = 0; s < n_seeds; ++s) {
            const auto& row = runs[group * n_seeds + s].row;
            detail += run_line(row);
            rows.push_back(&row);
        }
        summary += aggregate_line(rows);
    }
    write_csv(ctx, "sweep_alpha_runs.csv", detail, log);
    write_csv(ctx, "sweep_alpha.csv", summary, log);
    append_timings(options, ctx.command, runs);
    return kExitOk;
}

int cmd_calibrate(const Options& options, std::ostream& log) {
    const Context ctx = load_context("calibrate", options);
    const std::vector<LossMethod> methods{LossMethod::gl(), LossMethod::standard()};
    std::vector<Cell> cells;
    for (const auto& m : methods) {
        for (auto seed : ctx.config.seeds) cells.push_back({m, ctx.config.mixture, seed});
    }
    const auto runs = run_cells(ctx, cells, log);

    std::string summary = "method,seed,samples,accuracy,ece\n";
    std::map<std::string, std::vector<double>> per_method;
    for (const auto& run : runs) {
        const auto& row = run.row;
        const std::string name = "reliability_" + row.method + "_seed" + std::to_string(row.seed) + ".csv";
        const fs::path path = ctx.out / name;
        write_file_atomic(path.string(), reliability_csv(run.metrics.bins, ctx.comment() + " method=" + row.method));
        log << "wrote " << path.string() << "\n";
        summary += row.method + "," + std::to_string(row.seed) + "," + std::to_string(run.metrics.samples) + "," +
                   format_double(row.accuracy) + "," + format_double(row.ece) + "\n";
    }
    write_csv(ctx, "calibration.csv", summary, log);
    append_timings(options, ctx.command, runs);
    return kExitOk;
}

int cmd_mix(const Options& options, std::ostream& log) {
    const Context ctx = load_context("mix", options);
    for (auto seed : ctx.config.seeds) {
        const PreparedData data = prepare_data(ctx.config, ctx.config.mixture, seed);
        const std::string suffix = "_seed" + std::to_string(seed) + ".csv";
        const fs::path train_path = ctx.out / ("mixed_train" + suffix);
        const fs::path test_path = ctx.out / ("test" + suffix);
        save_csv(data.train, train_path.string(), ctx.comment());
        save_csv(data.test, test_path.string(), ctx.comment());
        log << "wrote " << train_path.string() << " (" << data.train.size() << " rows, "
            << data.train.count(Provenance::OutOfDistribution) << " ood) and " << test_path.string() << " ("
            << data.test.size() << " rows)\n";
    }
    return kExitOk;
}

int cmd_eval(const Options& options, std::ostream& log) {
    if (options.checkpoint.empty()) throw UsageError("eval: --checkpoint is required");
    const ModelParams params = checkpoint_load(options.checkpoint);

    Context ctx;
    ctx.command = "eval";
    std::vector<std::pair<std::string, LabeledDataset>> sets;
    if (!options.data_path.empty()) {
        if (!options.config_path.empty()) {
            ctx.config = parse_experiment_config(ConfigFile::load(options.config_path));
        } else {
            ctx.config.config_hash = "none";
            ctx.config.seeds.clear();
        }
        sets.emplace_back(options.data_path, load_csv(options.data_path, "label", true));
    } else {
        ctx = load_context("eval", options);
        for (auto seed : ctx.config.seeds) {
            sets.emplace_back("seed" + std::to_string(seed), prepare_data(ctx.config, ctx.config.mixture, seed).test);
        }
    }
    ctx.out = prepare_out_dir(options.out_dir.empty() ? ctx.config.output_dir : options.out_dir);

    std::string summary = "data,samples,accuracy,ece\n";
    std::vector<ReliabilityBin> pooled;
    for (auto& [name, data] : sets) {
        if (data.num_features() != params.input_dim()) {
            throw UsageError("eval: " + name + " has " + std::to_string(data.num_features()) +
                             " features, checkpoint expects " + std::to_string(params.input_dim()));
        }
        if (data.num_classes > params.output_dim()) {
            throw UsageError("eval: " + name + " has " + std::to_string(data.num_classes) +
                             " classes, checkpoint has " + std::to_string(params.output_dim()) + " outputs");
        }
        data.num_classes = params.output_dim();
        const MetricsReport report = evaluate(params, data);
        summary += name + "," + std::to_string(report.samples) + "," + format_double(report.accuracy) + "," +
                   format_double(report.ece) + "\n";
        if (sets.size() == 1) pooled = report.bins;
    }
    write_csv(ctx, "eval.csv", summary, log);
    if (!pooled.empty()) {
        const fs::path path = ctx.out / "eval_reliability.csv";
        write_file_atomic(path.string(), reliability_csv(pooled, ctx.comment()));
        log << "wrote " << path.string() << "\n";
    }
    return kExitOk;
}

namespace {

const std::vector<std::string> kBoundColumns{"alpha",     "n_in",        "n_out",  "input_bound", "lipschitz",
                                             "loss_bound", "depth",      "layer_norms", "num_classes", "lambda",
                                             "lse_bound", "delta",       "discrepancy"};

BoundInputs parse_bound_row(const std::map<std::string, std::string>& fields) {
    auto text = [&](const std::string& key) -> const std::string* {
        auto it = fields.find(key);
        if (it == fields.end() || trim(it->second).empty()) return nullptr;
        return &it->second;
    };
    auto number = [&](const std::string& key, std::optional<double> fallback) {
        const std::string* t = text(key);
        if (!t) {
            if (fallback) return *fallback;
            throw ParseError("missing " + key);
        }
        auto v = parse_double(trim(*t));
        if (!v) throw ParseError(key + " is not a number: '" + *t + "'");
        return *v;
    };
    auto count = [&](const std::string& key) {
        const double v = number(key, std::nullopt);
        if (!(v >= 0.0) || v != std::floor(v) || v > 1e15) throw ParseError(key + " must be a non-negative integer");
        return static_cast<std::size_t>(v);
    };
    BoundInputs in;
    in.alpha = number("alpha", std::nullopt);
    in.n_in = count("n_in");
    in.n_out = count("n_out");
    in.input_bound = number("input_bound", std::nullopt);
    in.lipschitz = number("lipschitz", std::nullopt);
    in.loss_bound = number("loss_bound", std::nullopt);
    in.depth = count("depth");
    in.num_classes = count("num_classes");
    in.lambda = number("lambda", 1.5);
    in.lse_bound = number("lse_bound", 0.0);
    in.delta = number("delta", 0.05);
    in.discrepancy = number("discrepancy", 0.0);
    in.layer_norms.clear();
    const std::string* norms = text("layer_norms");
    if (!norms) throw ParseError("missing layer_norms");
    for (const auto& item : split_list(*norms)) {
        auto v = parse_double(trim(item));
        if (!v) throw ParseError("layer_norms entry is not a number: '" + item + "'");
        in.layer_norms.push_back(*v);
    }
    in.validate();
    return in;
}

}  // namespace

int cmd_bounds(const Options& options, std::ostream& log) {
    const std::string& path = options.inputs_path;
    if (path.empty()) throw UsageError("bounds: an inputs CSV is required");
    const std::string text = read_file(path);

    Context ctx;
    ctx.command = "bounds";
    ctx.config.seeds.clear();
    {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char c : text) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        ctx.config.config_hash = buf;
    }
    ctx.out = prepare_out_dir(options.out_dir);

    std::istringstream in(text);
    std::string line;
    std::vector<std::string> header;
    std::size_t line_no = 0;
    std::size_t row_no = 0;
    std::size_t errors = 0;
    std::string body =
        "row,bound_standard,bound_gl,lambda_threshold,lambda,tighter,lambda_condition,error\n";
    while (std::getline(in, line)) {
        ++line_no;
        const auto stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        auto fields = split_csv_line(line);
        if (header.empty()) {
            for (auto& f : fields) header.emplace_back(trim(f));
            for (const auto& col : header) {
                if (std::find(kBoundColumns.begin(), kBoundColumns.end(), col) == kBoundColumns.end()) {
                    throw ParseError(path + ":" + std::to_string(line_no) + ": unknown column '" + col + "'");
                }
            }
            continue;
        }
        ++row_no;
        std::string error;
        BoundInputs inputs;
        if (fields.size() != header.size()) {
            error = "line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                    " fields, found " + std::to_string(fields.size());
        } else {
            std::map<std::string, std::string> named;
            for (std::size_t c = 0; c < header.size(); ++c) named[header[c]] = fields[c];
            try {
                inputs = parse_bound_row(named);
            } catch (const Error& e) {
                error = "line " + std::to_string(line_no) + ": " + e.what();
            }
        }
        if (error.empty()) {
            try {
                const double standard = bound_standard(inputs);
                const double gl = bound_gl(inputs);
                const double threshold = lambda_threshold(inputs);
                body += std::to_string(row_no) + "," + format_double(standard) + "," + format_double(gl) + "," +
                        format_double(threshold) + "," + format_double(inputs.lambda) + "," +
                        (gl <= standard ? "true" : "false") + "," +
                        (inputs.lambda <= threshold ? "true" : "false") + ",\n";
                continue;
            } catch (const Error& e) {
                error = "line " + std::to_string(line_no) + ": " + e.what();
            }
        }
        ++errors;
        std::replace(error.begin(), error.end(), '"', '\'');
        body += std::to_string(row_no) + ",,,,,,,\"" + error + "\"\n";
        log << "bounds: " << error << "\n";
    }
    if (header.empty()) throw ParseError(path + ": missing header line");
    write_csv(ctx, "bounds.csv", body, log);
    return errors == 0 ? kExitOk : kExitUsage;
}

int run_command(const std::string& name, const Options& options, std::ostream& log) {
    static const std::map<std::string, std::function<int(const Options&, std::ostream&)>> commands{
        {"train", cmd_train}, {"ablate", cmd_ablate}, {"sweep-alpha", cmd_sweep_alpha}, {"bounds", cmd_bounds},
        {"calibrate", cmd_calibrate}, {"mix", cmd_mix}, {"eval", cmd_eval}};
    auto it = commands.find(name);
    if (it == commands.end()) {
        log << "error: unknown command '" << name << "'\n";
        return kExitUsage;
    }
    try {
        return it->second(options, log);
    } catch (const NumericError& e) {
        log << "numeric abort: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const Error& e) {
        log << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const fs::filesystem_error& e) {
        log << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

}  // namespace graylearn::cli
