#include "qkernel/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <list>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qkernel/errors.hpp"
#include "qkernel/gram_cache.hpp"
#include "qkernel/svm.hpp"

namespace qkernel {

using nlohmann::ordered_json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// Sub-seed domains derived from the experiment seed.
constexpr std::uint64_t kFoldSeedDomain = 0xF01D;
constexpr std::uint64_t kShotSeedDomain = 0x5407;

std::string format_double(double v) {
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    std::ostringstream os;
    os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
    return os.str();
}

void ensure_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
    }
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    return os;
}

// Rethrows the active exception with the repetition index prepended, keeping
// its category so the CLI can still map it to an exit code.
[[noreturn]] void rethrow_with_repetition(std::size_t rep) {
    const std::string prefix = "repetition " + std::to_string(rep) + ": ";
    try {
        throw;
    } catch (const ConfigError& e) {
        throw ConfigError(prefix + e.what());
    } catch (const ArgumentError& e) {
        throw ArgumentError(prefix + e.what());
    } catch (const DataError& e) {
        throw DataError(prefix + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(prefix + e.what());
    }
}

std::vector<HyperParams> method_grid(const ExperimentConfig& config, std::uint64_t kernel_seed) {
    KernelSpec base;
    base.shots = config.shots;
    base.seed = kernel_seed;
    if (config.method == kClassicalMethod) {
        std::vector<HyperParams> grid;
        for (auto kind : {KernelKind::Linear, KernelKind::Polynomial, KernelKind::Rbf}) {
            base.kind = kind;
            const auto part = config.grid.expand(base);
            grid.insert(grid.end(), part.begin(), part.end());
        }
        return grid;
    }
    base.kind = parse_kernel_kind(config.method);
    return config.grid.expand(base);
}

bool same_spec(const KernelSpec& a, const KernelSpec& b) {
    return a.kind == b.kind && a.shots == b.shots && a.gamma == b.gamma && a.degree == b.degree && a.seed == b.seed;
}

// Train and train-vs-test kernel matrices for one repetition, memoised per
// kernel spec and backed by the on-disk cache for quantum kinds.
class RepetitionGrams {
public:
    RepetitionGrams(std::span<const FeatureVector> train, std::span<const FeatureVector> test,
                    const FeatureMapConfig& cfg, const GramOptions& options, const GramCache* cache,
                    double& gram_seconds, std::size_t& cache_hits)
        : train_(train), test_(test), cfg_(cfg), options_(options), cache_(cache),
          gram_seconds_(gram_seconds), cache_hits_(cache_hits) {}

    const GramMatrix& train_gram(const KernelSpec& spec) {
        for (const auto& [k, g] : train_grams_) {
            if (same_spec(k, spec)) {
                return g;
            }
        }
        auto g = cached(spec, train_, train_, [&] { return gram_matrix(train_, spec, cfg_, options_); });
        train_grams_.emplace_back(spec, std::move(g));
        return train_grams_.back().second;
    }

    Eigen::MatrixXd test_gram(const KernelSpec& spec) {
        return cached(spec, test_, train_, [&] { return gram_cross(test_, train_, spec, cfg_, options_); });
    }

private:
    template <typename Compute>
    Eigen::MatrixXd cached(const KernelSpec& spec, std::span<const FeatureVector> rows,
                           std::span<const FeatureVector> cols, Compute&& compute) {
        const auto start = Clock::now();
        Eigen::MatrixXd out;
        if (cache_ && is_quantum(spec.kind)) {
            const auto key = gram_cache_key(rows, cols, spec, cfg_);
            if (auto hit = cache_->load(key)) {
                ++cache_hits_;
                out = std::move(*hit);
            } else {
                out = compute();
                cache_->store(key, out);
            }
        } else {
            out = compute();
        }
        gram_seconds_ += seconds_since(start);
        return out;
    }

    std::span<const FeatureVector> train_;
    std::span<const FeatureVector> test_;
    FeatureMapConfig cfg_;
    GramOptions options_;
    const GramCache* cache_;
    double& gram_seconds_;
    std::size_t& cache_hits_;
    std::list<std::pair<KernelSpec, GramMatrix>> train_grams_;
};

std::string sampling_name(SamplingMode mode) { return mode == SamplingMode::Disjoint ? "disjoint" : "resample"; }

template <typename T>
void read_key(const ordered_json& obj, const char* key, T& out) {
    if (obj.contains(key)) {
        out = obj.at(key).get<T>();
    }
}

void reject_unknown(const ordered_json& obj, std::initializer_list<std::string_view> known, const std::string& where) {
    if (!obj.is_object()) {
        throw ConfigError(where + " must be a JSON object");
    }
    for (const auto& [key, value] : obj.items()) {
        bool found = false;
        for (auto k : known) {
            found = found || k == key;
        }
        if (!found) {
            throw ConfigError("unknown config key '" + where + key + "'");
        }
    }
}

}  // namespace

bool is_valid_method(std::string_view method) {
    if (method == kClassicalMethod) {
        return true;
    }
    try {
        parse_kernel_kind(method);
        return true;
    } catch (const ConfigError&) {
        return false;
    }
}

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError(msg); };
    if (n_qubits < 2 || n_qubits > 20) {
        fail("n_qubits must be in [2, 20], got " + std::to_string(n_qubits));
    }
    if (repetitions < 1) {
        fail("repetitions must be >= 1");
    }
    if (!is_valid_method(method)) {
        fail("unknown method '" + method + "'");
    }
    if (shots < 1) {
        fail("shots must be >= 1");
    }
    if (fm_d < 1 || fm_layers < 1) {
        fail("feature map d and layers must be >= 1");
    }
    if (k_folds < 2) {
        fail("k_folds must be >= 2");
    }
    if (dataset_size < static_cast<std::size_t>(std::max(n_qubits, 2 * k_folds))) {
        fail("dataset_size must be >= max(n_qubits, 2 * k_folds)");
    }
    if (!(tol > 0.0)) {
        fail("solver tol must be > 0");
    }
    if (max_iterations < 1) {
        fail("solver max_iterations must be >= 1");
    }
    if (grid.C.empty() || grid.gamma.empty() || grid.degree.empty()) {
        fail("hyperparameter grids must be non-empty");
    }
    for (double c : grid.C) {
        if (!(c > 0.0) || !std::isfinite(c)) {
            fail("C grid values must be positive and finite");
        }
    }
    for (double g : grid.gamma) {
        if (!(g > 0.0) || !std::isfinite(g)) {
            fail("gamma grid values must be positive and finite");
        }
    }
    for (int d : grid.degree) {
        if (d < 1) {
            fail("degree grid values must be >= 1");
        }
    }
    if (dataset.kind == DatasetSource::Kind::Csv) {
        if (dataset.csv_path.empty()) {
            fail("csv dataset source needs a path");
        }
        if (!std::filesystem::exists(dataset.csv_path)) {
            fail("csv dataset '" + dataset.csv_path.string() + "' does not exist");
        }
        std::vector<std::string> header;
        try {
            header = read_csv_header(dataset.csv_path);
        } catch (const DataError& e) {
            fail(e.what());
        }
        if (std::find(header.begin(), header.end(), dataset.label_column) == header.end()) {
            fail("csv dataset '" + dataset.csv_path.string() + "' has no label column '" + dataset.label_column + "'");
        }
        if (header.size() - 1 < static_cast<std::size_t>(n_qubits)) {
            fail("csv dataset has " + std::to_string(header.size() - 1) + " feature columns, fewer than n_qubits = " +
                 std::to_string(n_qubits));
        }
    } else {
        if (dataset.events < 2 || dataset.events % 2 != 0) {
            fail("synthetic events must be even and >= 2");
        }
        if (dataset.raw_features < static_cast<std::size_t>(n_qubits)) {
            fail("synthetic raw_features must be >= n_qubits");
        }
        if (!(dataset.separation >= 0.0)) {
            fail("synthetic separation must be >= 0");
        }
    }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) {
        throw IoError("cannot open config " + path.string());
    }
    ExperimentConfig cfg;
    try {
        const auto j = ordered_json::parse(is, nullptr, true, true);
        reject_unknown(j,
                       {"dataset", "n_qubits", "dataset_size", "repetitions", "sampling", "method", "shots",
                        "feature_map", "solver", "seed", "threads", "cache_dir", "save_models"},
                       "");
        if (j.contains("dataset")) {
            const auto& d = j.at("dataset");
            reject_unknown(d, {"source", "path", "label_column", "events", "raw_features", "separation", "seed"},
                           "dataset.");
            const std::string source = d.value("source", std::string("synthetic"));
            if (source == "csv") {
                cfg.dataset.kind = DatasetSource::Kind::Csv;
            } else if (source != "synthetic") {
                throw ConfigError("dataset.source must be 'synthetic' or 'csv'");
            }
            if (d.contains("path")) {
                std::filesystem::path p = d.at("path").get<std::string>();
                cfg.dataset.csv_path = p.is_relative() ? path.parent_path() / p : p;
            }
            read_key(d, "label_column", cfg.dataset.label_column);
            read_key(d, "events", cfg.dataset.events);
            read_key(d, "raw_features", cfg.dataset.raw_features);
            read_key(d, "separation", cfg.dataset.separation);
            read_key(d, "seed", cfg.dataset.seed);
        }
        read_key(j, "n_qubits", cfg.n_qubits);
        read_key(j, "dataset_size", cfg.dataset_size);
        read_key(j, "repetitions", cfg.repetitions);
        if (j.contains("sampling")) {
            const auto s = j.at("sampling").get<std::string>();
            if (s == "disjoint") {
                cfg.sampling = SamplingMode::Disjoint;
            } else if (s == "resample") {
                cfg.sampling = SamplingMode::Resample;
            } else {
                throw ConfigError("sampling must be 'disjoint' or 'resample'");
            }
        }
        read_key(j, "method", cfg.method);
        read_key(j, "shots", cfg.shots);
        if (j.contains("feature_map")) {
            const auto& fm = j.at("feature_map");
            reject_unknown(fm, {"d", "layers"}, "feature_map.");
            read_key(fm, "d", cfg.fm_d);
            read_key(fm, "layers", cfg.fm_layers);
        }
        if (j.contains("solver")) {
            const auto& s = j.at("solver");
            reject_unknown(s, {"C_grid", "gamma_grid", "degree_grid", "tol", "max_iterations", "k_folds"}, "solver.");
            read_key(s, "C_grid", cfg.grid.C);
            read_key(s, "gamma_grid", cfg.grid.gamma);
            read_key(s, "degree_grid", cfg.grid.degree);
            read_key(s, "tol", cfg.tol);
            read_key(s, "max_iterations", cfg.max_iterations);
            read_key(s, "k_folds", cfg.k_folds);
        }
        read_key(j, "seed", cfg.seed);
        read_key(j, "threads", cfg.threads);
        if (j.contains("cache_dir")) {
            cfg.cache_dir = j.at("cache_dir").get<std::string>();
        }
        read_key(j, "save_models", cfg.save_models);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return cfg;
}

namespace {

ordered_json config_json(const ExperimentConfig& c) {
    ordered_json d;
    if (c.dataset.kind == DatasetSource::Kind::Csv) {
        d = {{"source", "csv"}, {"path", c.dataset.csv_path.string()}, {"label_column", c.dataset.label_column}};
    } else {
        d = {{"source", "synthetic"},
             {"events", c.dataset.events},
             {"raw_features", c.dataset.raw_features},
             {"separation", c.dataset.separation},
             {"seed", c.dataset.seed}};
    }
    ordered_json j;
    j["dataset"] = d;
    j["n_qubits"] = c.n_qubits;
    j["dataset_size"] = c.dataset_size;
    j["repetitions"] = c.repetitions;
    j["sampling"] = sampling_name(c.sampling);
    j["method"] = c.method;
    j["shots"] = c.shots;
    j["feature_map"] = {{"d", c.fm_d}, {"layers", c.fm_layers}};
    j["solver"] = {{"C_grid", c.grid.C},
                   {"gamma_grid", c.grid.gamma},
                   {"degree_grid", c.grid.degree},
                   {"tol", c.tol},
                   {"max_iterations", c.max_iterations},
                   {"k_folds", c.k_folds}};
    j["seed"] = c.seed;
    return j;
}

}  // namespace

std::string config_to_json(const ExperimentConfig& config) { return config_json(config).dump(2); }

Dataset load_source(const DatasetSource& source) {
    if (source.kind == DatasetSource::Kind::Csv) {
        return load_csv(source.csv_path, CsvSchema{source.label_column});
    }
    return generate_synthetic(source.events, source.raw_features, source.separation, source.seed);
}

ExperimentResult run_experiment(const ExperimentConfig& config, const ProgressFn& progress) {
    config.validate();
    const auto t_total = Clock::now();

    ExperimentResult result;
    result.config = config;
    const Dataset data = load_source(config.dataset);
    if (data.width() < static_cast<std::size_t>(config.n_qubits)) {
        throw ConfigError("dataset has " + std::to_string(data.width()) + " feature columns, fewer than n_qubits = " +
                          std::to_string(config.n_qubits));
    }
    const auto splits = split_datasets(data, config.repetitions, config.dataset_size, config.seed, config.sampling);

    std::optional<GramCache> cache;
    if (!config.cache_dir.empty()) {
        cache.emplace(config.cache_dir);
    }
    const FeatureMapConfig fm = config.feature_map();
    const SmoOptions smo{config.tol, config.max_iterations};
    GramOptions gram_options;
    gram_options.threads = config.threads;

    result.efficiency = efficiency_grid();
    std::vector<double> aucs;
    for (std::size_t rep = 0; rep < splits.size(); ++rep) {
        try {
            const Dataset train_set = data.subset(splits[rep].train);
            const Dataset test_set = data.subset(splits[rep].test);
            const auto pre = Preprocessor::fit(train_set.features, config.n_qubits);
            const auto x_train = pre.apply(train_set.features);
            const auto x_test = pre.apply(test_set.features);

            RepetitionGrams grams(x_train, x_test, fm, gram_options, cache ? &*cache : nullptr,
                                  result.timing.gram_seconds, result.gram_cache_hits);
            const auto grid = method_grid(config, pair_seed(config.seed, kShotSeedDomain, rep));
            CvOptions cv_options;
            cv_options.k_folds = config.k_folds;
            cv_options.seed = pair_seed(config.seed, kFoldSeedDomain, rep);
            cv_options.smo = smo;

            const double gram_before = result.timing.gram_seconds;
            const auto t_train = Clock::now();
            const auto cv = cross_validate(
                train_set.labels, grid, [&](const KernelSpec& s) -> const GramMatrix& { return grams.train_gram(s); },
                cv_options);
            RepetitionResult r;
            r.index = rep;
            r.train_indices = splits[rep].train;
            r.test_indices = splits[rep].test;
            r.best = cv.best;
            r.cv_auc = cv.best_auc;
            r.model = train(grams.train_gram(cv.best.kernel), train_set.labels, cv.best.C, smo);
            result.timing.train_seconds += seconds_since(t_train) - (result.timing.gram_seconds - gram_before);

            const auto test_kernel = grams.test_gram(cv.best.kernel);
            const auto t_eval = Clock::now();
            const auto scores = decision_scores(r.model, test_kernel);
            r.auc = auc(scores, test_set.labels);
            r.roc = roc_curve(scores, test_set.labels);
            r.rejection_on_grid = interpolate_rejection(r.roc, result.efficiency);
            result.timing.eval_seconds += seconds_since(t_eval);

            aucs.push_back(r.auc);
            if (progress) {
                std::ostringstream msg;
                msg << "repetition " << rep + 1 << "/" << splits.size() << ": AUC " << std::setprecision(4) << r.auc
                    << " (" << to_string(r.best.kernel.kind) << ", C=" << r.best.C << ")";
                progress(msg.str());
            }
            result.repetitions.push_back(std::move(r));
        } catch (const Error&) {
            rethrow_with_repetition(rep);
        }
    }

    result.summary = summarize_repetitions(aucs);
    const std::size_t g = result.efficiency.size();
    result.mean_rejection.assign(g, 0.0);
    result.std_rejection.assign(g, 0.0);
    const double reps = static_cast<double>(result.repetitions.size());
    for (std::size_t k = 0; k < g; ++k) {
        double sum = 0.0;
        for (const auto& r : result.repetitions) {
            sum += r.rejection_on_grid[k];
        }
        const double mean = sum / reps;
        double ss = 0.0;
        for (const auto& r : result.repetitions) {
            ss += (r.rejection_on_grid[k] - mean) * (r.rejection_on_grid[k] - mean);
        }
        result.mean_rejection[k] = mean;
        result.std_rejection[k] = std::sqrt(ss / reps);
    }
    result.rejection_at_70 = result.mean_rejection[70];
    result.gain_at_70 = significance_gain(0.70, 1.0 - result.rejection_at_70);
    result.timing.total_seconds = seconds_since(t_total);
    return result;
}

void write_experiment_outputs(const ExperimentResult& result, const std::filesystem::path& dir) {
    ensure_directory(dir);
    const auto& c = result.config;

    ordered_json s;
    s["format"] = "qkernel-summary-1";
    s["config"] = config_json(c);
    s["method"] = c.method;
    s["repetitions"] = result.repetitions.size();
    s["auc_mean"] = result.summary.auc_mean;
    s["auc_std"] = result.summary.auc_std;
    s["single_repetition"] = result.summary.single_repetition;
    ordered_json reps = ordered_json::array();
    for (const auto& r : result.repetitions) {
        reps.push_back({{"index", r.index},
                        {"auc", r.auc},
                        {"cv_auc", r.cv_auc},
                        {"kernel", std::string(to_string(r.best.kernel.kind))},
                        {"C", r.best.C},
                        {"gamma", r.best.kernel.gamma},
                        {"degree", r.best.kernel.degree},
                        {"support_vectors", r.model.support_indices.size()}});
    }
    s["per_repetition"] = reps;
    s["operating_point"] = {{"signal_efficiency", 0.70},
                            {"background_rejection", result.rejection_at_70},
                            {"s_over_sqrt_b_gain", std::isinf(result.gain_at_70) ? ordered_json("inf")
                                                                                 : ordered_json(result.gain_at_70)}};
    open_output(dir / "summary.json") << s.dump(2) << '\n';

    {
        auto os = open_output(dir / "roc_mean.csv");
        os << "signal_efficiency,background_rejection_mean,background_rejection_std\n";
        for (std::size_t k = 0; k < result.efficiency.size(); ++k) {
            os << format_double(result.efficiency[k]) << ',' << format_double(result.mean_rejection[k]) << ','
               << format_double(result.std_rejection[k]) << '\n';
        }
    }
    for (const auto& r : result.repetitions) {
        write_roc_csv(dir / ("roc_rep_" + std::to_string(r.index) + ".csv"), r.roc);
        if (c.save_models) {
            save_model_json(dir / ("model_rep_" + std::to_string(r.index) + ".json"), r.model, r.best.kernel,
                            c.feature_map());
        }
    }

    ScanRow row{"run", c.method, c.method, true, result.summary.auc_mean, result.summary.auc_std,
                result.repetitions.size(), ""};
    write_auc_table(dir / "auc_table.csv", std::span<const ScanRow>(&row, 1));

    ordered_json t;
    t["gram_seconds"] = result.timing.gram_seconds;
    t["train_seconds"] = result.timing.train_seconds;
    t["eval_seconds"] = result.timing.eval_seconds;
    t["total_seconds"] = result.timing.total_seconds;
    t["gram_cache_hits"] = result.gram_cache_hits;
    open_output(dir / "timing.json") << t.dump(2) << '\n';
}

std::string_view to_string(ScanAxis axis) {
    switch (axis) {
        case ScanAxis::DatasetSize:
            return "dataset_size";
        case ScanAxis::NQubits:
            return "n_qubits";
        case ScanAxis::Method:
            return "method";
    }
    return "unknown";
}

ScanAxis parse_scan_axis(std::string_view name) {
    for (auto axis : {ScanAxis::DatasetSize, ScanAxis::NQubits, ScanAxis::Method}) {
        if (to_string(axis) == name) {
            return axis;
        }
    }
    throw ConfigError("unknown scan axis '" + std::string(name) + "' (dataset_size, n_qubits, method)");
}

namespace {

template <typename T>
T parse_axis_number(const std::string& value, ScanAxis axis) {
    T out{};
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw ConfigError("scan value '" + value + "' is not a valid " + std::string(to_string(axis)));
    }
    return out;
}

}  // namespace

std::vector<ScanRow> run_scan(const ExperimentConfig& base, ScanAxis axis, std::span<const std::string> values,
                              const std::optional<std::filesystem::path>& output_dir, const ProgressFn& progress) {
    if (values.empty()) {
        throw ConfigError("scan needs at least one value");
    }
    std::vector<ExperimentConfig> points;
    for (const auto& v : values) {
        ExperimentConfig cfg = base;
        switch (axis) {
            case ScanAxis::DatasetSize:
                cfg.dataset_size = parse_axis_number<std::size_t>(v, axis);
                break;
            case ScanAxis::NQubits:
                cfg.n_qubits = parse_axis_number<int>(v, axis);
                break;
            case ScanAxis::Method:
                cfg.method = v;
                break;
        }
        points.push_back(std::move(cfg));
    }

    std::vector<ScanRow> rows;
    for (std::size_t p = 0; p < points.size(); ++p) {
        ScanRow row;
        row.axis = std::string(to_string(axis));
        row.value = values[p];
        row.method = points[p].method;
        if (progress) {
            progress("scan point " + row.axis + "=" + row.value);
        }
        try {
            const auto result = run_experiment(points[p], progress);
            row.ok = true;
            row.auc_mean = result.summary.auc_mean;
            row.auc_std = result.summary.auc_std;
            row.repetitions = result.repetitions.size();
            if (output_dir) {
                write_experiment_outputs(result, *output_dir / (row.axis + "_" + row.value));
            }
        } catch (const Error& e) {
            row.ok = false;
            row.error = e.what();
            if (progress) {
                progress("scan point " + row.axis + "=" + row.value + " failed: " + row.error);
            }
        }
        rows.push_back(std::move(row));
    }
    if (output_dir) {
        ensure_directory(*output_dir);
        write_auc_table(*output_dir / "auc_table.csv", rows);
    }
    return rows;
}

void write_auc_table(const std::filesystem::path& path, std::span<const ScanRow> rows) {
    auto os = open_output(path);
    os << "axis,value,method,auc_mean,auc_std,repetitions,status\n";
    for (const auto& r : rows) {
        os << r.axis << ',' << r.value << ',' << r.method << ',';
        if (r.ok) {
            os << format_double(r.auc_mean) << ',' << format_double(r.auc_std) << ',' << r.repetitions << ",ok\n";
        } else {
            std::string msg = r.error;
            for (char& ch : msg) {
                if (ch == ',' || ch == '\n' || ch == '"') {
                    ch = ' ';
                }
            }
            os << ",,0,failed: " << msg << '\n';
        }
    }
}

ScanRow read_summary_row(const std::filesystem::path& summary_json) {
    std::ifstream is(summary_json);
    if (!is) {
        throw IoError("cannot open " + summary_json.string());
    }
    ScanRow row;
    try {
        const auto j = nlohmann::json::parse(is);
        if (j.at("format") != "qkernel-summary-1") {
            throw ParseError(summary_json.string() + ": not a qkernel summary");
        }
        row.axis = "run";
        row.value = summary_json.parent_path().filename().string();
        row.method = j.at("method").get<std::string>();
        row.auc_mean = j.at("auc_mean").get<double>();
        row.auc_std = j.at("auc_std").get<double>();
        row.repetitions = j.at("repetitions").get<std::size_t>();
        row.ok = true;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(summary_json.string() + ": " + e.what());
    }
    return row;
}

void write_report_json(const std::filesystem::path& path, std::span<const ScanRow> rows) {
    ordered_json arr = ordered_json::array();
    for (const auto& r : rows) {
        ordered_json o = {{"axis", r.axis}, {"value", r.value}, {"method", r.method}, {"ok", r.ok}};
        if (r.ok) {
            o["auc_mean"] = r.auc_mean;
            o["auc_std"] = r.auc_std;
            o["repetitions"] = r.repetitions;
        } else {
            o["error"] = r.error;
        }
        arr.push_back(o);
    }
    open_output(path) << arr.dump(2) << '\n';
}

GramJobResult run_gram_job(const GramJob& job, const std::optional<std::filesystem::path>& cache_dir) {
    job.kernel.validate();
    const FeatureMapConfig fm{job.n_qubits, job.fm_d, job.fm_layers};
    if (is_quantum(job.kernel.kind)) {
        fm.validate();
    }
    Dataset data = load_source(job.dataset);
    if (job.max_events > 0 && job.max_events < data.size()) {
        std::vector<std::size_t> head(job.max_events);
        for (std::size_t i = 0; i < head.size(); ++i) {
            head[i] = i;
        }
        data = data.subset(head);
    }
    if (data.width() < static_cast<std::size_t>(job.n_qubits)) {
        throw ConfigError("dataset has fewer feature columns than n_qubits");
    }
    const auto X = Preprocessor::fit(data.features, job.n_qubits).apply(data.features);

    GramJobResult out;
    out.key = gram_cache_key(X, X, job.kernel, fm);
    std::optional<GramCache> cache;
    if (cache_dir) {
        cache.emplace(*cache_dir);
        if (auto hit = cache->load(out.key)) {
            out.gram = std::move(*hit);
            out.cache_hit = true;
            return out;
        }
    }
    GramOptions options;
    options.threads = job.threads;
    out.gram = gram_matrix(X, job.kernel, fm, options);
    if (cache) {
        cache->store(out.key, out.gram);
    }
    return out;
}

}  // namespace qkernel
