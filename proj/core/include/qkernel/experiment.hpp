#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qkernel/data.hpp"
#include "qkernel/eval.hpp"
#include "qkernel/kernel.hpp"

namespace qkernel {

struct DatasetSource {
    enum class Kind { Synthetic, Csv };
    Kind kind = Kind::Synthetic;
    std::filesystem::path csv_path;
    std::string label_column = "label";
    std::size_t events = 4000;
    std::size_t raw_features = 23;
    double separation = 2.0;
    std::uint64_t seed = 7;  ///< synthetic generator seed
};

/// Methods a run can evaluate: one of the kernel kinds, or "classical", which
/// lets cross-validation choose among linear, polynomial and rbf.
inline constexpr std::string_view kClassicalMethod = "classical";
bool is_valid_method(std::string_view method);

struct ExperimentConfig {
    DatasetSource dataset;
    int n_qubits = 8;  ///< PCA components fed to the feature map
    std::size_t dataset_size = 200;  ///< events per train and per test sample
    std::size_t repetitions = 60;
    SamplingMode sampling = SamplingMode::Disjoint;
    std::string method = "quantum-exact";
    int shots = 8192;
    int fm_d = 3;
    int fm_layers = 2;
    HyperGrid grid;
    double tol = 1e-3;
    long long max_iterations = 10'000'000;  ///< SMO budget per training call
    int k_folds = 5;
    std::uint64_t seed = 1;
    int threads = 0;
    std::filesystem::path cache_dir;  ///< empty: no Gram caching
    bool save_models = false;

    /// Throws ConfigError describing the first invalid field. For a CSV
    /// source only the header row is read, to check the label column and the
    /// feature count.
    void validate() const;

    FeatureMapConfig feature_map() const { return {n_qubits, fm_d, fm_layers}; }
};

/// Reads a JSON config file. Missing keys keep their defaults; unknown keys
/// are rejected. Throws ConfigError (or IoError for an unreadable file).
ExperimentConfig load_config(const std::filesystem::path& path);

/// The result-determining fields as pretty JSON (threads, cache and output
/// locations excluded).
std::string config_to_json(const ExperimentConfig& config);

struct RepetitionResult {
    std::size_t index = 0;
    std::vector<std::size_t> train_indices;  ///< rows of the source dataset
    std::vector<std::size_t> test_indices;
    double auc = 0.0;
    HyperParams best;
    double cv_auc = 0.0;
    RocCurve roc;
    std::vector<double> rejection_on_grid;  ///< at efficiency_grid()
    SvmModel model;
};

struct PhaseTiming {
    double gram_seconds = 0.0;
    double train_seconds = 0.0;
    double eval_seconds = 0.0;
    double total_seconds = 0.0;
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<RepetitionResult> repetitions;
    RepetitionSummary summary;
    std::vector<double> efficiency;       ///< efficiency_grid()
    std::vector<double> mean_rejection;   ///< averaged over repetitions
    std::vector<double> std_rejection;
    double rejection_at_70 = 0.0;         ///< mean rejection at 70% signal efficiency
    double gain_at_70 = 0.0;              ///< S/sqrt(B) improvement at that point
    std::size_t gram_cache_hits = 0;
    PhaseTiming timing;
};

/// Observer for progress messages; may be empty.
using ProgressFn = std::function<void(const std::string&)>;

/// Full protocol: load/generate data, draw paired splits from `seed`, then per
/// repetition PCA + rescale fitted on the training sample, cross-validated
/// hyperparameters, SVM training and test-sample ROC/AUC.
///
/// The config is validated before any data is touched. Failures inside a
/// repetition are rethrown with the repetition index in the message.
ExperimentResult run_experiment(const ExperimentConfig& config, const ProgressFn& progress = {});

/// Writes summary.json, roc_mean.csv, roc_rep_<k>.csv, auc_table.csv and
/// timing.json (plus model_rep_<k>.json when save_models is set). Everything
/// except timing.json is a deterministic function of the config.
void write_experiment_outputs(const ExperimentResult& result, const std::filesystem::path& dir);

enum class ScanAxis { DatasetSize, NQubits, Method };
std::string_view to_string(ScanAxis axis);
/// "dataset_size", "n_qubits" or "method". Throws ConfigError otherwise.
ScanAxis parse_scan_axis(std::string_view name);

struct ScanRow {
    std::string axis;
    std::string value;
    std::string method;
    bool ok = false;
    double auc_mean = 0.0;
    double auc_std = 0.0;
    std::size_t repetitions = 0;
    std::string error;
};

/// One run_experiment per value. A failing point is recorded (ok = false,
/// error message) and the scan continues. When `output_dir` is given each
/// point's outputs go to <output_dir>/<axis>_<value>/. Throws ConfigError
/// for an empty value list or a value that does not parse for the axis.
std::vector<ScanRow> run_scan(const ExperimentConfig& base, ScanAxis axis, std::span<const std::string> values,
                              const std::optional<std::filesystem::path>& output_dir = std::nullopt,
                              const ProgressFn& progress = {});

/// CSV header: axis,value,method,auc_mean,auc_std,repetitions,status
void write_auc_table(const std::filesystem::path& path, std::span<const ScanRow> rows);

/// Reads a summary.json back into a table row (axis "run", value = directory
/// name). Throws IoError / ParseError.
ScanRow read_summary_row(const std::filesystem::path& summary_json);

/// JSON array of table rows, for plotting tools.
void write_report_json(const std::filesystem::path& path, std::span<const ScanRow> rows);

struct GramJob {
    DatasetSource dataset;
    int n_qubits = 8;
    int fm_d = 3;
    int fm_layers = 2;
    KernelSpec kernel;
    std::size_t max_events = 0;  ///< 0: use every event
    int threads = 0;
};

struct GramJobResult {
    GramMatrix gram;
    std::uint64_t key = 0;
    bool cache_hit = false;
};

/// Preprocesses the whole dataset (PCA + rescale fitted on it) and computes
/// its kernel matrix, consulting `cache` first when given.
GramJobResult run_gram_job(const GramJob& job, const std::optional<std::filesystem::path>& cache_dir);

/// Loads or generates the dataset described by `source`.
Dataset load_source(const DatasetSource& source);

}  // namespace qkernel
