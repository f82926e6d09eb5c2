// Command-line front end: generate synthetic data, train/evaluate concurrence,
// run baselines and benchmarks, render reports and plots.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <string>

#include <CLI11.hpp>

#include "concurrence/baselines.hpp"
#include "concurrence/dataset_io.hpp"
#include "concurrence/evaluation.hpp"
#include "concurrence/parallel.hpp"
#include "concurrence/report_io.hpp"
#include "concurrence/svg_plot.hpp"
#include "concurrence/synth.hpp"

namespace fs = std::filesystem;
using namespace concurrence;

namespace {

// exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::vector<double> parse_double_list(const std::string& csv, bool allow_inf = false) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        const std::size_t comma = csv.find(',', pos);
        const std::string item = csv.substr(pos, comma == std::string::npos ? comma : comma - pos);
        if (!item.empty()) {
            if (allow_inf && (item == "inf" || item == "Inf" || item == "INF"))
                out.push_back(std::numeric_limits<double>::infinity());
            else
                out.push_back(std::stod(item));
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) throw CLI::ValidationError("expected a comma-separated list of numbers");
    return out;
}

std::vector<std::string> parse_string_list(const std::string& csv) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        const std::size_t comma = csv.find(',', pos);
        const std::string item = csv.substr(pos, comma == std::string::npos ? comma : comma - pos);
        if (!item.empty()) out.push_back(item);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::string trim_number(double v) {
    std::string s = format_double(v);
    return s;
}

// ---------------------------------------------------------------------------
// shared option bundles
// ---------------------------------------------------------------------------

struct EncoderOpts {
    EncoderConfig cfg;
    void attach(CLI::App* cmd) {
        cmd->add_option("--channels", cfg.base_channels, "Output channels of the first block");
        cmd->add_option("--blocks", cfg.num_blocks, "Number of encoder blocks");
        cmd->add_option("--first-kernel", cfg.first_kernel, "Kernel size of the first block");
        cmd->add_option("--later-kernel", cfg.later_kernel, "Kernel size of later blocks");
        cmd->add_option("--first-stride", cfg.first_stride, "Stride of the first block");
        cmd->add_option("--later-stride", cfg.later_stride, "Stride of later blocks");
        cmd->add_option("--dropout", cfg.dropout_rate, "Dropout rate");
    }
};

struct TrainOpts {
    TrainConfig cfg;
    bool no_standardize = false;
    void attach(CLI::App* cmd) {
        cmd->add_option("--iterations", cfg.iterations, "Training iterations");
        cmd->add_option("--segments-per-pair", cfg.segments_per_pair,
                        "Training segment draws per pair per iteration");
        cmd->add_option("--lr", cfg.learning_rate, "Adam learning rate");
        cmd->add_option("--gap", cfg.min_misalignment_gap,
                        "Minimum |t'-t| for misaligned draws");
        cmd->add_flag("--early-stopping", cfg.early_stopping,
                      "Hold out a validation split and restore the best iterate");
        cmd->add_option("--patience", cfg.patience, "Early-stopping patience");
        cmd->add_option("--val-fraction", cfg.validation_fraction,
                        "Validation fraction of training pairs");
        cmd->add_flag("--no-standardize", no_standardize,
                      "Skip per-channel input standardization");
    }
    TrainConfig resolve(std::uint64_t seed) const {
        TrainConfig out = cfg;
        out.standardize = !no_standardize;
        out.seed = seed;
        return out;
    }
};

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

struct GenerateArgs {
    std::string out_dir;
    std::uint64_t seed = 0;
    int pairs = 500;
    int T = 1000;
    double event_scale = 8.0;
    std::string xis = "0,0.25,0.5,0.75,1";
    std::string snrs = "inf,1,0.5,0.1";
    double xi = 1.0;
    int n_datasets = 100;
};

void run_generate_xi_sweep(const GenerateArgs& args) {
    const auto xis = parse_double_list(args.xis);
    const auto datasets =
        generate_xi_sweep(xis, args.pairs, args.T, args.event_scale, args.seed);
    nlohmann::json sweep;
    sweep["kind"] = "xi-sweep";
    sweep["seed"] = args.seed;
    sweep["pairs"] = args.pairs;
    sweep["T"] = args.T;
    sweep["event_scale"] = args.event_scale;
    sweep["datasets"] = nlohmann::json::array();
    for (std::size_t i = 0; i < datasets.size(); ++i) {
        const std::string name = "xi_" + trim_number(xis[i]);
        const auto manifest = save_dataset(datasets[i], fs::path(args.out_dir) / name);
        sweep["datasets"].push_back(
            {{"name", name}, {"xi", xis[i]}, {"manifest", name + "/dataset.json"}});
        (void)manifest;
    }
    write_json_file(sweep, fs::path(args.out_dir) / "sweep.json");
    std::cout << "wrote " << datasets.size() << " datasets under " << args.out_dir << "\n";
}

void run_generate_snr_sweep(const GenerateArgs& args) {
    const auto snrs = parse_double_list(args.snrs, /*allow_inf=*/true);
    const auto datasets =
        generate_snr_sweep(snrs, args.xi, args.pairs, args.T, args.event_scale, args.seed);
    nlohmann::json sweep;
    sweep["kind"] = "snr-sweep";
    sweep["seed"] = args.seed;
    sweep["pairs"] = args.pairs;
    sweep["T"] = args.T;
    sweep["xi"] = args.xi;
    sweep["datasets"] = nlohmann::json::array();
    for (std::size_t i = 0; i < datasets.size(); ++i) {
        const bool noise_free = !std::isfinite(snrs[i]);
        const std::string name = noise_free ? "snr_inf" : "snr_" + trim_number(snrs[i]);
        save_dataset(datasets[i], fs::path(args.out_dir) / name);
        nlohmann::json entry = {{"name", name}, {"manifest", name + "/dataset.json"}};
        if (noise_free)
            entry["snr"] = "inf";
        else
            entry["snr"] = snrs[i];
        sweep["datasets"].push_back(entry);
    }
    write_json_file(sweep, fs::path(args.out_dir) / "sweep.json");
    std::cout << "wrote " << datasets.size() << " datasets under " << args.out_dir << "\n";
}

void run_generate_challenge(const GenerateArgs& args) {
    auto suite = generate_challenge_suite(args.n_datasets, args.pairs, args.T, args.seed);
    for (std::size_t i = 0; i < suite.datasets.size(); ++i) {
        save_dataset(suite.datasets[i], fs::path(args.out_dir) / suite.names[i]);
        suite.ground_truth["datasets"][i]["manifest"] = suite.names[i] + "/dataset.json";
    }
    write_json_file(suite.ground_truth, fs::path(args.out_dir) / "ground_truth.json");
    std::cout << "wrote " << suite.datasets.size() << " challenge datasets under "
              << args.out_dir << "\n";
}

// ---------------------------------------------------------------------------
// concurrence
// ---------------------------------------------------------------------------

struct ConcurrenceArgs {
    std::string data;
    std::string out_dir = ".";
    int w = 100;
    int folds = 4;
    int eval_segments = 16;
    int permutations = 0;
    bool by_group = false;
    bool save_models = false;
    std::uint64_t seed = 0;
    int workers = 0;
};

void run_concurrence(const ConcurrenceArgs& args, const EncoderOpts& enc, const TrainOpts& tr) {
    const auto dataset = load_dataset(args.data);
    EvalConfig eval_cfg;
    eval_cfg.folds = args.folds;
    eval_cfg.segments_per_pair = args.eval_segments;
    eval_cfg.n_permutations = args.permutations;
    eval_cfg.by_group = args.by_group;
    eval_cfg.seed = args.seed;
    eval_cfg.workers = args.workers > 0 ? args.workers : default_workers();
    eval_cfg.keep_models = args.save_models;

    const auto result = cross_validated_coefficient(dataset, args.w, enc.cfg,
                                                    tr.resolve(args.seed), eval_cfg);

    fs::create_directories(args.out_dir);
    write_report_json(result.report, fs::path(args.out_dir) / "report.json");
    write_report_csv(result.report, fs::path(args.out_dir) / "report.csv");
    for (std::size_t f = 0; f < result.fold_histories.size(); ++f)
        write_history_csv(result.fold_histories[f],
                          fs::path(args.out_dir) / ("history_fold" + std::to_string(f) + ".csv"));
    if (args.save_models)
        for (std::size_t f = 0; f < result.fold_models.size(); ++f)
            save_model(result.fold_models[f],
                       fs::path(args.out_dir) / ("model_fold" + std::to_string(f) + ".cncr"));

    std::cout << "coefficient " << format_double(result.report.coefficient) << " (accuracy "
              << format_double(result.report.accuracy) << ")";
    if (result.report.p_value) std::cout << ", p = " << format_double(*result.report.p_value);
    std::cout << "\n";
}

// ---------------------------------------------------------------------------
// pscs
// ---------------------------------------------------------------------------

struct PscsArgs {
    std::string model_path;
    std::string data;
    std::string out_dir = ".";
    int stride = 0;  // 0 = w (non-overlapping)
    bool allow_train_data = false;
};

void run_pscs(const PscsArgs& args) {
    ConcurrenceModel model = load_model(args.model_path);
    SignalDataset dataset = load_dataset(args.data);

    std::set<std::string> trained(model.training_pair_ids.begin(),
                                  model.training_pair_ids.end());
    if (!args.allow_train_data) {
        for (const auto& pair : dataset.pairs)
            if (trained.count(pair.pair_id))
                throw DataError("pair '" + pair.pair_id +
                                "' was in this model's training data; per-segment scores on "
                                "training data are biased (pass --allow-train-data to override)");
    }
    if (model.standardized_inputs) dataset = per_channel_standardize(dataset);

    const int stride = args.stride > 0 ? args.stride : model.width;
    std::vector<PSCSTrace> traces;
    for (const auto& pair : dataset.pairs)
        traces.push_back(pscs_trace(model, pair, model.width, stride));

    fs::create_directories(args.out_dir);
    write_pscs_csv(traces, fs::path(args.out_dir) / "pscs.csv");
    std::cout << "wrote per-segment scores for " << traces.size() << " pairs\n";
}

// ---------------------------------------------------------------------------
// baselines
// ---------------------------------------------------------------------------

struct BaselinesArgs {
    std::string data;
    std::string out_dir = ".";
    std::string methods = "pearson,wcc,dc,hsic,mi,cmi";
    int permutations = 99;
    int bins = 8;
    int lag_depth = 1;
    int window = 0;   // 0 = T/8
    int max_lag = -1; // -1 = window/4
    std::uint64_t seed = 0;
    int workers = 0;
};

nlohmann::json baseline_params(const BaselinesArgs& args, const std::string& name) {
    nlohmann::json params;
    if (name == "mi" || name == "cmi") params["bins"] = args.bins;
    if (name == "cmi") params["lag_depth"] = args.lag_depth;
    if (name == "wcc") {
        if (args.window > 0) params["window"] = args.window;
        if (args.max_lag >= 0) params["max_lag"] = args.max_lag;
    }
    return params;
}

void run_baselines(const BaselinesArgs& args) {
    const auto dataset = load_dataset(args.data);
    const auto methods = parse_string_list(args.methods);
    const int workers = args.workers > 0 ? args.workers : default_workers();
    std::vector<BaselineResult> results;
    for (const auto& name : methods) {
        const auto method = make_baseline_method(name, baseline_params(args, name));
        results.push_back(dataset_test(dataset, method, args.permutations,
                                       Rng::derive(args.seed, std::hash<std::string>{}(name)),
                                       workers));
    }
    fs::create_directories(args.out_dir);
    write_baselines_json(results, fs::path(args.out_dir) / "baselines.json");
    write_baselines_csv(results, fs::path(args.out_dir) / "baselines.csv");
    for (const auto& r : results)
        std::cout << r.method << ": statistic " << format_double(r.dataset_statistic) << ", p = "
                  << format_double(r.p_value) << "\n";
}

// ---------------------------------------------------------------------------
// benchmark
// ---------------------------------------------------------------------------

struct BenchmarkArgs {
    std::string suite_dir;
    std::string out_dir = ".";
    std::string methods = "pearson,cmi,concurrence";
    int w = 100;
    int folds = 4;
    int eval_segments = 16;
    int permutations = 99;
    double alpha = 0.05;
    bool resume = false;
    std::uint64_t seed = 0;
    int workers = 0;
};

// stable per-method seed streams regardless of CLI order
int method_stream(const std::string& name) {
    static const std::map<std::string, int> streams = {
        {"concurrence", 0}, {"pearson", 1}, {"wcc", 2}, {"dc", 3},
        {"hsic", 4},        {"mi", 5},      {"cmi", 6}};
    const auto it = streams.find(name);
    if (it == streams.end())
        throw DataError("benchmark: unknown method '" + name + "'");
    return it->second;
}

nlohmann::json benchmark_one_dataset(const BenchmarkArgs& args, const EncoderOpts& enc,
                                     const TrainOpts& tr, const nlohmann::json& entry, int index,
                                     const std::vector<std::string>& methods) {
    const fs::path manifest = fs::path(args.suite_dir) / entry.at("manifest").get<std::string>();
    const auto dataset = load_dataset(manifest);
    const std::uint64_t ds_seed = Rng::derive(args.seed, 7000 + static_cast<std::uint64_t>(index));

    nlohmann::json out;
    out["name"] = entry.at("name");
    if (entry.contains("xi")) out["xi"] = entry["xi"];
    out["methods"] = nlohmann::json::object();
    for (const auto& name : methods) {
        const std::uint64_t m_seed =
            Rng::derive(ds_seed, static_cast<std::uint64_t>(method_stream(name)));
        nlohmann::json m;
        if (name == "concurrence") {
            EvalConfig eval_cfg;
            eval_cfg.folds = args.folds;
            eval_cfg.segments_per_pair = args.eval_segments;
            eval_cfg.n_permutations = args.permutations;
            eval_cfg.seed = m_seed;
            eval_cfg.workers = 1;  // parallelism lives at the dataset level
            const auto result =
                cross_validated_coefficient(dataset, args.w, enc.cfg, tr.resolve(m_seed), eval_cfg);
            m["statistic"] = result.report.coefficient;
            m["unclipped"] = result.report.unclipped_coefficient;
            m["accuracy"] = result.report.accuracy;
            m["p_value"] = *result.report.p_value;
        } else {
            const auto method = make_baseline_method(name);
            const auto result = dataset_test(dataset, method, args.permutations, m_seed, 1);
            m["statistic"] = result.dataset_statistic;
            m["p_value"] = result.p_value;
        }
        m["detected"] = m["p_value"].get<double>() <= args.alpha;
        out["methods"][name] = m;
    }
    return out;
}

void run_benchmark(const BenchmarkArgs& args, const EncoderOpts& enc, const TrainOpts& tr) {
    const auto ground_truth = read_json_file(fs::path(args.suite_dir) / "ground_truth.json");
    const auto& entries = ground_truth.at("datasets");
    const auto methods = parse_string_list(args.methods);
    for (const auto& name : methods) method_stream(name);  // validate early

    const fs::path results_dir = fs::path(args.out_dir) / "results";
    fs::create_directories(results_dir);

    const int n = static_cast<int>(entries.size());
    std::vector<nlohmann::json> per_dataset(static_cast<std::size_t>(n));
    const int workers = args.workers > 0 ? args.workers : default_workers();
    run_jobs(n, workers, [&](int i) {
        const auto& entry = entries[static_cast<std::size_t>(i)];
        const fs::path result_path =
            results_dir / (entry.at("name").get<std::string>() + ".json");
        if (args.resume && fs::exists(result_path)) {
            try {
                per_dataset[static_cast<std::size_t>(i)] = read_json_file(result_path);
                return;
            } catch (const DataError&) {
                // fall through and recompute
            }
        }
        auto result = benchmark_one_dataset(args, enc, tr, entry, i, methods);
        write_json_file(result, result_path);  // partial results survive failures elsewhere
        per_dataset[static_cast<std::size_t>(i)] = std::move(result);
    });

    std::map<std::string, int> counts;
    for (const auto& name : methods) counts[name] = 0;
    for (const auto& ds : per_dataset)
        for (const auto& name : methods)
            if (ds.at("methods").at(name).at("detected").get<bool>()) ++counts[name];

    nlohmann::json summary;
    summary["alpha"] = args.alpha;
    summary["n_datasets"] = n;
    summary["methods"] = methods;
    summary["counts"] = counts;
    summary["datasets"] = per_dataset;
    summary["seed"] = args.seed;
    write_json_file(summary, fs::path(args.out_dir) / "benchmark.json");

    std::string csv = "method,detections,n_datasets\n";
    std::vector<std::vector<std::string>> table{{"method", "detections", "datasets"}};
    for (const auto& name : methods) {
        csv += name + "," + std::to_string(counts[name]) + "," + std::to_string(n) + "\n";
        table.push_back({name, std::to_string(counts[name]), std::to_string(n)});
    }
    write_text_file(csv, fs::path(args.out_dir) / "table.csv");
    write_text_file(render_table(table), fs::path(args.out_dir) / "table.txt");
    std::cout << render_table(table);
}

// ---------------------------------------------------------------------------
// plot
// ---------------------------------------------------------------------------

struct PlotArgs {
    std::string input;
    std::string output = "plot.svg";
    int bins = 30;
};

std::map<std::string, std::vector<double>> read_columns_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty CSV '" + path.string() + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto headers = parse_string_list(line);
    std::map<std::string, std::vector<double>> cols;
    std::vector<std::string> order;
    for (const auto& h : headers) {
        cols[h] = {};
        order.push_back(h);
    }
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto values = parse_string_list(line);
        if (values.size() != order.size())
            throw DataError("ragged CSV row in '" + path.string() + "'");
        for (std::size_t i = 0; i < order.size(); ++i)
            cols[order[i]].push_back(std::stod(values[i]));
    }
    return cols;
}

void require_columns(const std::map<std::string, std::vector<double>>& cols,
                     std::initializer_list<const char*> names, const std::string& path) {
    for (const char* name : names)
        if (cols.find(name) == cols.end() || cols.at(name).empty())
            throw DataError("'" + path + "' is missing required column '" + name + "'");
}

void run_plot_sweep(const PlotArgs& args, const std::string& x_col, const std::string& title) {
    const auto cols = read_columns_csv(args.input);
    require_columns(cols, {x_col.c_str(), "w", "coefficient"}, args.input);
    const auto& xs = cols.at(x_col);
    const auto& ws = cols.at("w");
    const auto& ys = cols.at("coefficient");

    std::vector<double> distinct_w;
    for (const double w : ws)
        if (std::find(distinct_w.begin(), distinct_w.end(), w) == distinct_w.end())
            distinct_w.push_back(w);
    std::sort(distinct_w.begin(), distinct_w.end());

    std::vector<LineSeries> series;
    for (const double w : distinct_w) {
        LineSeries s;
        s.label = "w = " + trim_number(w);
        std::vector<std::pair<double, double>> points;
        for (std::size_t i = 0; i < ws.size(); ++i)
            if (ws[i] == w) points.emplace_back(xs[i], ys[i]);
        std::sort(points.begin(), points.end());
        for (const auto& [x, y] : points) {
            s.xs.push_back(x);
            s.ys.push_back(y);
        }
        series.push_back(std::move(s));
    }
    write_line_plot(args.output, title, x_col, "concurrence coefficient", series);
    std::cout << "wrote " << args.output << "\n";
}

void run_plot_null_hist(const PlotArgs& args) {
    const auto report = read_report_json(args.input);
    if (report.null_stats.empty())
        throw DataError("'" + args.input + "' has no null_stats (run with --permutations)");
    write_histogram(args.output, "mismatched-pairing null distribution",
                    "unclipped coefficient", report.null_stats, args.bins);
    std::cout << "wrote " << args.output << "\n";
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

void run_report(const std::string& input, const std::string& output) {
    const auto doc = read_json_file(input);
    std::string text;
    if (doc.is_object() && doc.contains("coefficient")) {
        const auto report = report_from_json(doc);
        std::vector<std::vector<std::string>> rows{
            {"metric", "value"},
            {"accuracy", format_double(report.accuracy)},
            {"coefficient", format_double(report.coefficient)},
            {"unclipped_coefficient", format_double(report.unclipped_coefficient)},
        };
        if (report.p_value) rows.push_back({"p_value", format_double(*report.p_value)});
        rows.push_back({"n_segments_evaluated", std::to_string(report.n_segments_evaluated)});
        rows.push_back({"w", std::to_string(report.w)});
        rows.push_back({"folds", std::to_string(report.folds)});
        text = render_table(rows);
        std::vector<std::vector<std::string>> fold_rows{
            {"fold", "accuracy", "coefficient", "unclipped"}};
        for (const auto& fr : report.per_fold)
            fold_rows.push_back({std::to_string(fr.fold), format_double(fr.accuracy),
                                 format_double(fr.coefficient), format_double(fr.unclipped)});
        text += "\n" + render_table(fold_rows);
    } else if (doc.is_object() && doc.contains("counts")) {
        std::vector<std::vector<std::string>> rows{{"method", "detections", "datasets"}};
        for (const auto& name : doc.at("methods"))
            rows.push_back({name.get<std::string>(),
                            std::to_string(doc.at("counts").at(name.get<std::string>()).get<int>()),
                            std::to_string(doc.at("n_datasets").get<int>())});
        text = render_table(rows);
    } else if (doc.is_array()) {
        std::vector<std::vector<std::string>> rows{{"method", "statistic", "p_value"}};
        for (const auto& entry : doc)
            rows.push_back({entry.at("method").get<std::string>(),
                            format_double(entry.at("dataset_statistic").get<double>()),
                            format_double(entry.at("p_value").get<double>())});
        text = render_table(rows);
    } else {
        throw DataError("'" + input + "' is not a recognized report file");
    }
    if (output.empty())
        std::cout << text;
    else
        write_text_file(text, output);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"concurrence: self-supervised statistical dependence between paired time series"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Config file (INI sections per command; flags override)");

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "Synthesize benchmark datasets");
    generate->require_subcommand(1);
    auto* xi_sweep = generate->add_subcommand("xi-sweep", "Noise-free datasets across xi values");
    xi_sweep->add_option("--xis", gen.xis, "Comma-separated xi values");
    auto* snr_sweep = generate->add_subcommand("snr-sweep", "Datasets across target SNRs");
    snr_sweep->add_option("--snrs", gen.snrs, "Comma-separated SNRs ('inf' = noise-free)");
    snr_sweep->add_option("--xi", gen.xi, "Degree of dependence");
    auto* challenge = generate->add_subcommand("challenge", "Randomized challenge suite");
    challenge->add_option("--datasets", gen.n_datasets, "Number of datasets");
    for (auto* cmd : {xi_sweep, snr_sweep, challenge}) {
        cmd->add_option("--pairs", gen.pairs, "Signal pairs per dataset");
        cmd->add_option("--T", gen.T, "Signal length");
        cmd->add_option("--seed", gen.seed, "Random seed");
        cmd->add_option("--out", gen.out_dir, "Output directory")->required();
    }
    for (auto* cmd : {xi_sweep, snr_sweep})
        cmd->add_option("--event-scale", gen.event_scale, "Kernel scale in samples");

    ConcurrenceArgs conc;
    EncoderOpts conc_enc;
    TrainOpts conc_tr;
    auto* concurrence_cmd =
        app.add_subcommand("concurrence", "Cross-validated concurrence coefficient");
    concurrence_cmd->add_option("--data", conc.data, "Dataset manifest")->required();
    concurrence_cmd->add_option("--w", conc.w, "Segment width");
    concurrence_cmd->add_option("--folds", conc.folds, "Cross-validation folds");
    concurrence_cmd->add_option("--eval-segments", conc.eval_segments,
                                "Evaluation segment draws per pair");
    concurrence_cmd->add_option("--permutations", conc.permutations,
                                "Mismatched-pairing permutations (0 = no test)");
    concurrence_cmd->add_flag("--by-group", conc.by_group, "Subject-independent folds");
    concurrence_cmd->add_flag("--save-models", conc.save_models, "Write per-fold model files");
    concurrence_cmd->add_option("--seed", conc.seed, "Random seed");
    concurrence_cmd->add_option("--workers", conc.workers, "Worker threads");
    concurrence_cmd->add_option("--out", conc.out_dir, "Output directory");
    conc_enc.attach(concurrence_cmd);
    conc_tr.attach(concurrence_cmd);

    PscsArgs pscs;
    auto* pscs_cmd = app.add_subcommand("pscs", "Per-segment concurrence score traces");
    pscs_cmd->add_option("--model", pscs.model_path, "Trained model file")->required();
    pscs_cmd->add_option("--data", pscs.data, "Dataset manifest")->required();
    pscs_cmd->add_option("--stride", pscs.stride, "Trace stride (default: w)");
    pscs_cmd->add_flag("--allow-train-data", pscs.allow_train_data,
                       "Score pairs the model was trained on");
    pscs_cmd->add_option("--out", pscs.out_dir, "Output directory");

    BaselinesArgs base;
    auto* baselines_cmd = app.add_subcommand("baselines", "Classical dependence baselines");
    baselines_cmd->add_option("--data", base.data, "Dataset manifest")->required();
    baselines_cmd->add_option("--methods", base.methods, "Comma-separated method names");
    baselines_cmd->add_option("--permutations", base.permutations, "Permutation count");
    baselines_cmd->add_option("--bins", base.bins, "Histogram bins for mi/cmi");
    baselines_cmd->add_option("--lag-depth", base.lag_depth, "CMI conditioning lag");
    baselines_cmd->add_option("--window", base.window, "WCC window (default T/8)");
    baselines_cmd->add_option("--max-lag", base.max_lag, "WCC max lag (default window/4)");
    baselines_cmd->add_option("--seed", base.seed, "Random seed");
    baselines_cmd->add_option("--workers", base.workers, "Worker threads");
    baselines_cmd->add_option("--out", base.out_dir, "Output directory");

    BenchmarkArgs bench;
    EncoderOpts bench_enc;
    TrainOpts bench_tr;
    auto* benchmark_cmd = app.add_subcommand("benchmark", "Run methods over a challenge suite");
    benchmark_cmd->add_option("--suite", bench.suite_dir, "Suite directory (ground_truth.json)")
        ->required();
    benchmark_cmd->add_option("--methods", bench.methods, "Methods to run");
    benchmark_cmd->add_option("--w", bench.w, "Segment width for concurrence");
    benchmark_cmd->add_option("--folds", bench.folds, "Cross-validation folds");
    benchmark_cmd->add_option("--eval-segments", bench.eval_segments,
                              "Evaluation segment draws per pair");
    benchmark_cmd->add_option("--permutations", bench.permutations, "Permutation count");
    benchmark_cmd->add_option("--alpha", bench.alpha, "Significance level");
    benchmark_cmd->add_flag("--resume", bench.resume, "Skip datasets with existing results");
    benchmark_cmd->add_option("--seed", bench.seed, "Random seed");
    benchmark_cmd->add_option("--workers", bench.workers, "Worker threads");
    benchmark_cmd->add_option("--out", bench.out_dir, "Output directory");
    bench_enc.attach(benchmark_cmd);
    bench_tr.attach(benchmark_cmd);

    PlotArgs plot;
    auto* plot_cmd = app.add_subcommand("plot", "Render SVG figures from result files");
    plot_cmd->require_subcommand(1);
    auto* plot_xi = plot_cmd->add_subcommand("xi", "Coefficient vs xi, one line per w");
    auto* plot_snr = plot_cmd->add_subcommand("snr", "Coefficient vs SNR, one line per w");
    auto* plot_null = plot_cmd->add_subcommand("null-hist", "Histogram of permutation nulls");
    plot_null->add_option("--bins", plot.bins, "Histogram bins");
    for (auto* cmd : {plot_xi, plot_snr, plot_null}) {
        cmd->add_option("--input", plot.input, "Input file")->required();
        cmd->add_option("--out", plot.output, "Output SVG path");
    }

    std::string report_input, report_output;
    auto* report_cmd = app.add_subcommand("report", "Render a report file as a text table");
    report_cmd->add_option("--input", report_input, "Report JSON")->required();
    report_cmd->add_option("--out", report_output, "Output text file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (xi_sweep->parsed()) run_generate_xi_sweep(gen);
        if (snr_sweep->parsed()) run_generate_snr_sweep(gen);
        if (challenge->parsed()) run_generate_challenge(gen);
        if (concurrence_cmd->parsed()) run_concurrence(conc, conc_enc, conc_tr);
        if (pscs_cmd->parsed()) run_pscs(pscs);
        if (baselines_cmd->parsed()) run_baselines(base);
        if (benchmark_cmd->parsed()) run_benchmark(bench, bench_enc, bench_tr);
        if (plot_xi->parsed()) run_plot_sweep(plot, "xi", "concurrence coefficient vs xi");
        if (plot_snr->parsed()) run_plot_sweep(plot, "snr", "concurrence coefficient vs SNR");
        if (plot_null->parsed()) run_plot_null_hist(plot);
        if (report_cmd->parsed()) run_report(report_input, report_output);
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return 0;
}
