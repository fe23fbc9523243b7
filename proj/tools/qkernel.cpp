// qkernel: command line front end for quantum-kernel SVM experiments.
//
//   qkernel run    --config cfg.json --out results/
//   qkernel scan   --config cfg.json --axis n_qubits --values 4 6 8 --out scan/
//   qkernel gram   --csv events.csv --n-qubits 8 --out gram.bin
//   qkernel gen    --events 4000 --features 23 --out events.csv
//   qkernel report --in scan/ --out-csv table.csv --out-json table.json
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical failure.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qkernel/data.hpp"
#include "qkernel/errors.hpp"
#include "qkernel/experiment.hpp"
#include "qkernel/gram_cache.hpp"

namespace fs = std::filesystem;
using namespace qkernel;

namespace {

enum ExitCode { kOk = 0, kUnexpected = 1, kConfig = 2, kData = 3, kNumerical = 4 };

// Flags that override fields of an ExperimentConfig. Only options the user
// actually passed are applied.
struct ExperimentFlags {
    std::string config_path;
    std::string csv;
    std::string label_column;
    std::size_t events = 0;
    std::size_t raw_features = 0;
    double separation = 0.0;
    std::uint64_t data_seed = 0;
    int n_qubits = 0;
    std::size_t dataset_size = 0;
    std::size_t repetitions = 0;
    std::string sampling;
    std::string method;
    int shots = 0;
    int d = 0;
    int layers = 0;
    std::vector<double> c_grid;
    std::vector<double> gamma_grid;
    std::vector<int> degree_grid;
    double tol = 0.0;
    long long max_iterations = 0;
    int k_folds = 0;
    std::uint64_t seed = 0;
    int threads = 0;
    std::string cache_dir;
    bool save_models = false;

    std::vector<std::pair<CLI::Option*, std::function<void(ExperimentConfig&)>>> appliers;

    template <typename T>
    void bind(CLI::App* app, const std::string& name, T& field, const std::string& help,
              std::function<void(ExperimentConfig&)> apply) {
        appliers.emplace_back(app->add_option(name, field, help), std::move(apply));
    }

    void attach(CLI::App* app) {
        app->add_option("-c,--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
        bind(app, "--csv", csv, "CSV dataset (header row, 'label' column)", [this](ExperimentConfig& c) {
            c.dataset.kind = DatasetSource::Kind::Csv;
            c.dataset.csv_path = csv;
        });
        bind(app, "--label-column", label_column, "label column name",
             [this](ExperimentConfig& c) { c.dataset.label_column = label_column; });
        bind(app, "--events", events, "synthetic pool size", [this](ExperimentConfig& c) { c.dataset.events = events; });
        bind(app, "--raw-features", raw_features, "synthetic raw variable count",
             [this](ExperimentConfig& c) { c.dataset.raw_features = raw_features; });
        bind(app, "--separation", separation, "synthetic class-mean separation",
             [this](ExperimentConfig& c) { c.dataset.separation = separation; });
        bind(app, "--data-seed", data_seed, "synthetic generator seed",
             [this](ExperimentConfig& c) { c.dataset.seed = data_seed; });
        bind(app, "-n,--n-qubits", n_qubits, "qubits = PCA components",
             [this](ExperimentConfig& c) { c.n_qubits = n_qubits; });
        bind(app, "--dataset-size", dataset_size, "events per train and per test sample",
             [this](ExperimentConfig& c) { c.dataset_size = dataset_size; });
        bind(app, "-r,--repetitions", repetitions, "independent datasets",
             [this](ExperimentConfig& c) { c.repetitions = repetitions; });
        bind(app, "--sampling", sampling, "disjoint | resample", [this](ExperimentConfig& c) {
            if (sampling == "disjoint") {
                c.sampling = SamplingMode::Disjoint;
            } else if (sampling == "resample") {
                c.sampling = SamplingMode::Resample;
            } else {
                throw ConfigError("--sampling must be disjoint or resample");
            }
        });
        bind(app, "-m,--method", method, "quantum-exact | quantum-sampled | linear | polynomial | rbf | classical",
             [this](ExperimentConfig& c) { c.method = method; });
        bind(app, "--shots", shots, "shots per sampled kernel entry", [this](ExperimentConfig& c) { c.shots = shots; });
        bind(app, "--d", d, "feature map exponent", [this](ExperimentConfig& c) { c.fm_d = d; });
        bind(app, "--layers", layers, "feature map layers", [this](ExperimentConfig& c) { c.fm_layers = layers; });
        bind(app, "--C-grid", c_grid, "SVM C values", [this](ExperimentConfig& c) { c.grid.C = c_grid; });
        bind(app, "--gamma-grid", gamma_grid, "gamma values (polynomial, rbf)",
             [this](ExperimentConfig& c) { c.grid.gamma = gamma_grid; });
        bind(app, "--degree-grid", degree_grid, "polynomial degrees",
             [this](ExperimentConfig& c) { c.grid.degree = degree_grid; });
        bind(app, "--tol", tol, "SMO KKT tolerance", [this](ExperimentConfig& c) { c.tol = tol; });
        bind(app, "--max-iterations", max_iterations, "SMO iteration budget per fit",
             [this](ExperimentConfig& c) { c.max_iterations = max_iterations; });
        bind(app, "--k-folds", k_folds, "cross-validation folds", [this](ExperimentConfig& c) { c.k_folds = k_folds; });
        bind(app, "-s,--seed", seed, "experiment seed", [this](ExperimentConfig& c) { c.seed = seed; });
        bind(app, "-j,--threads", threads, "worker threads (0 = all cores)",
             [this](ExperimentConfig& c) { c.threads = threads; });
        bind(app, "--cache-dir", cache_dir, "Gram matrix cache directory",
             [this](ExperimentConfig& c) { c.cache_dir = cache_dir; });
        app->add_flag("--save-models", save_models, "write model_rep_<k>.json");
    }

    ExperimentConfig build() const {
        ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
        for (const auto& [opt, apply] : appliers) {
            if (opt->count() > 0) {
                apply(cfg);
            }
        }
        if (save_models) {
            cfg.save_models = true;
        }
        return cfg;
    }
};

struct DatasetFlags {
    std::string csv;
    std::string label_column = "label";
    std::size_t events = 4000;
    std::size_t raw_features = 23;
    double separation = 2.0;
    std::uint64_t data_seed = 7;

    void attach(CLI::App* app) {
        app->add_option("--csv", csv, "CSV dataset; synthetic data is generated when omitted");
        app->add_option("--label-column", label_column, "label column name")->capture_default_str();
        app->add_option("--events", events, "synthetic pool size")->capture_default_str();
        app->add_option("--raw-features", raw_features, "synthetic raw variable count")->capture_default_str();
        app->add_option("--separation", separation, "synthetic class-mean separation")->capture_default_str();
        app->add_option("--data-seed", data_seed, "synthetic generator seed")->capture_default_str();
    }

    DatasetSource source() const {
        DatasetSource s;
        if (!csv.empty()) {
            s.kind = DatasetSource::Kind::Csv;
            s.csv_path = csv;
        }
        s.label_column = label_column;
        s.events = events;
        s.raw_features = raw_features;
        s.separation = separation;
        s.seed = data_seed;
        return s;
    }
};

void print_summary(const ExperimentResult& r) {
    std::cout << "method " << r.config.method << ", " << r.repetitions.size() << " repetition(s): AUC "
              << r.summary.auc_mean << " +- " << r.summary.auc_std << "\n"
              << "at 70% signal efficiency: background rejection " << r.rejection_at_70 << ", S/sqrt(B) x"
              << r.gain_at_70 << "\n"
              << "timing: gram " << r.timing.gram_seconds << " s, train " << r.timing.train_seconds << " s, eval "
              << r.timing.eval_seconds << " s\n";
}

std::vector<fs::path> find_summaries(const std::vector<std::string>& inputs) {
    std::vector<fs::path> out;
    for (const auto& in : inputs) {
        const fs::path p(in);
        if (fs::is_regular_file(p)) {
            out.push_back(p);
        } else if (fs::is_regular_file(p / "summary.json")) {
            out.push_back(p / "summary.json");
        } else if (fs::is_directory(p)) {
            std::vector<fs::path> found;
            for (const auto& entry : fs::directory_iterator(p)) {
                if (entry.is_directory() && fs::is_regular_file(entry.path() / "summary.json")) {
                    found.push_back(entry.path() / "summary.json");
                }
            }
            std::sort(found.begin(), found.end());
            out.insert(out.end(), found.begin(), found.end());
        } else {
            throw IoError("no summary.json found at " + in);
        }
    }
    if (out.empty()) {
        throw IoError("no summary.json files found");
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum-kernel SVM experiments on statevector-simulated feature maps"};
    app.require_subcommand(1);
    bool quiet = false;
    app.add_flag("-q,--quiet", quiet, "suppress progress output");

    auto* run = app.add_subcommand("run", "run one experiment");
    ExperimentFlags run_flags;
    run_flags.attach(run);
    std::string run_out;
    run->add_option("-o,--out", run_out, "output directory")->required();

    auto* scan = app.add_subcommand("scan", "sweep one axis, one experiment per value");
    ExperimentFlags scan_flags;
    scan_flags.attach(scan);
    std::string scan_out;
    std::string axis;
    std::vector<std::string> values;
    scan->add_option("--axis", axis, "dataset_size | n_qubits | method")->required();
    scan->add_option("--values", values, "axis values")->required();
    scan->add_option("-o,--out", scan_out, "output directory")->required();

    auto* gram = app.add_subcommand("gram", "precompute a kernel matrix and store it in the cache");
    DatasetFlags gram_data;
    gram_data.attach(gram);
    GramJob job;
    std::string kernel_name = "quantum-exact";
    std::string gram_out;
    std::string gram_format = "bin";
    std::string gram_cache;
    gram->add_option("-n,--n-qubits", job.n_qubits, "qubits = PCA components")->capture_default_str();
    gram->add_option("-k,--kernel", kernel_name, "kernel kind")->capture_default_str();
    gram->add_option("--shots", job.kernel.shots, "shots (quantum-sampled)")->capture_default_str();
    gram->add_option("--gamma", job.kernel.gamma, "gamma (polynomial, rbf)")->capture_default_str();
    gram->add_option("--degree", job.kernel.degree, "degree (polynomial)")->capture_default_str();
    gram->add_option("-s,--seed", job.kernel.seed, "sampling seed")->capture_default_str();
    gram->add_option("--d", job.fm_d, "feature map exponent")->capture_default_str();
    gram->add_option("--layers", job.fm_layers, "feature map layers")->capture_default_str();
    gram->add_option("--max-events", job.max_events, "use only the first N events (0 = all)")->capture_default_str();
    gram->add_option("-j,--threads", job.threads, "worker threads (0 = all cores)");
    gram->add_option("--cache-dir", gram_cache, "Gram cache directory");
    gram->add_option("-o,--out", gram_out, "output file");
    gram->add_option("--format", gram_format, "bin | csv")->check(CLI::IsMember({"bin", "csv"}))->capture_default_str();

    auto* gen = app.add_subcommand("gen", "write a synthetic two-class CSV dataset");
    std::size_t gen_events = 4000;
    std::size_t gen_features = 23;
    double gen_separation = 2.0;
    std::uint64_t gen_seed = 7;
    std::string gen_out;
    gen->add_option("--events", gen_events, "event count (even)")->capture_default_str();
    gen->add_option("--features", gen_features, "raw variable count")->capture_default_str();
    gen->add_option("--separation", gen_separation, "class-mean separation")->capture_default_str();
    gen->add_option("-s,--seed", gen_seed, "generator seed")->capture_default_str();
    gen->add_option("-o,--out", gen_out, "output CSV")->required();

    auto* report = app.add_subcommand("report", "collect summary.json files into plot-ready tables");
    std::vector<std::string> report_in;
    std::string report_csv = "auc_table.csv";
    std::string report_json;
    report->add_option("-i,--in", report_in, "run directories, scan directories or summary.json files")->required();
    report->add_option("--out-csv", report_csv, "CSV table")->capture_default_str();
    report->add_option("--out-json", report_json, "JSON table");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    ProgressFn progress;
    if (!quiet) {
        progress = [](const std::string& msg) { std::cerr << msg << '\n'; };
    }

    try {
        if (*run) {
            const auto cfg = run_flags.build();
            const auto result = run_experiment(cfg, progress);
            write_experiment_outputs(result, run_out);
            print_summary(result);
        } else if (*scan) {
            const auto cfg = scan_flags.build();
            const auto rows = run_scan(cfg, parse_scan_axis(axis), values, fs::path(scan_out), progress);
            int failures = 0;
            for (const auto& r : rows) {
                std::cout << r.axis << "=" << r.value << " " << r.method << ": ";
                if (r.ok) {
                    std::cout << r.auc_mean << " +- " << r.auc_std << '\n';
                } else {
                    std::cout << "FAILED " << r.error << '\n';
                    ++failures;
                }
            }
            if (failures == static_cast<int>(rows.size())) {
                return kNumerical;
            }
        } else if (*gram) {
            job.dataset = gram_data.source();
            job.kernel.kind = parse_kernel_kind(kernel_name);
            std::optional<fs::path> cache;
            if (!gram_cache.empty()) {
                cache = gram_cache;
            }
            if (!cache && gram_out.empty()) {
                throw ConfigError("gram needs --out and/or --cache-dir");
            }
            const auto result = run_gram_job(job, cache);
            if (!gram_out.empty()) {
                if (gram_format == "csv") {
                    write_gram_csv(gram_out, result.gram);
                } else {
                    write_gram_binary(gram_out, result.gram, result.key);
                }
            }
            std::cout << result.gram.rows() << "x" << result.gram.cols() << " " << kernel_name << " kernel matrix, key "
                      << std::hex << result.key << std::dec << (result.cache_hit ? " (cache hit)" : "") << '\n';
        } else if (*gen) {
            write_csv(gen_out, generate_synthetic(gen_events, gen_features, gen_separation, gen_seed));
            std::cout << "wrote " << gen_events << " events to " << gen_out << '\n';
        } else if (*report) {
            std::vector<ScanRow> rows;
            for (const auto& path : find_summaries(report_in)) {
                rows.push_back(read_summary_row(path));
            }
            write_auc_table(report_csv, rows);
            if (!report_json.empty()) {
                write_report_json(report_json, rows);
            }
            std::cout << "collected " << rows.size() << " summaries into " << report_csv << '\n';
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const ArgumentError& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return kConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUnexpected;
    }
    return kOk;
}
