#include "qkernel/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "qkernel/errors.hpp"

namespace qkernel {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            cells.push_back(trim(line.substr(start)));
            return cells;
        }
        cells.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
}

bool parse_double(std::string_view cell, double& out) {
    if (!cell.empty() && cell.front() == '+') {
        cell.remove_prefix(1);
    }
    if (cell.empty()) {
        return false;
    }
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
    return ec == std::errc{} && ptr == cell.data() + cell.size();
}

}  // namespace

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.feature_names = feature_names;
    out.features.resize(static_cast<Eigen::Index>(indices.size()), features.cols());
    out.labels.reserve(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        if (indices[r] >= size()) {
            throw ArgumentError("subset index out of range");
        }
        out.features.row(static_cast<Eigen::Index>(r)) = features.row(static_cast<Eigen::Index>(indices[r]));
        out.labels.push_back(labels[indices[r]]);
    }
    return out;
}

std::vector<std::string> read_csv_header(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || trim(line).empty()) {
        throw SchemaError(path.string() + ": empty file, expected a header row");
    }
    std::vector<std::string> header;
    for (std::string_view cell : split_commas(line)) {
        header.emplace_back(cell);
    }
    return header;
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || trim(line).empty()) {
        throw SchemaError(path.string() + ": empty file, expected a header row");
    }
    std::vector<std::string> header;
    for (std::string_view cell : split_commas(line)) {
        header.emplace_back(cell);
    }
    std::size_t label_col = header.size();
    std::vector<std::size_t> feature_cols;
    Dataset data;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == schema.label_column) {
            if (label_col != header.size()) {
                throw SchemaError(path.string() + ": duplicate label column '" + schema.label_column + "'");
            }
            label_col = c;
        } else {
            feature_cols.push_back(c);
            data.feature_names.emplace_back(header[c]);
        }
    }
    if (label_col == header.size()) {
        throw SchemaError(path.string() + ": no label column named '" + schema.label_column + "'");
    }
    if (feature_cols.empty()) {
        throw SchemaError(path.string() + ": no feature columns");
    }

    std::vector<double> values;
    std::size_t row = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto cells = split_commas(line);
        if (cells.size() != header.size()) {
            throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(header.size()) + " cells, found " + std::to_string(cells.size()));
        }
        for (std::size_t c : feature_cols) {
            double v = 0.0;
            if (!parse_double(cells[c], v) || !std::isfinite(v)) {
                throw ParseError(path.string() + ": row " + std::to_string(row + 1) + " (line " +
                                 std::to_string(line_no) + "), column '" + header[c] +
                                 "': invalid numeric value '" + std::string(cells[c]) + "'");
            }
            values.push_back(v);
        }
        double label = 0.0;
        if (!parse_double(cells[label_col], label) || (label != 0.0 && label != 1.0)) {
            throw SchemaError(path.string() + ": row " + std::to_string(row + 1) + ": unknown label value '" +
                              std::string(cells[label_col]) + "' (expected 0 or 1)");
        }
        data.labels.push_back(static_cast<int>(label));
        ++row;
    }
    if (row == 0) {
        throw SchemaError(path.string() + ": header without data rows");
    }
    const auto m = static_cast<Eigen::Index>(feature_cols.size());
    data.features = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        values.data(), static_cast<Eigen::Index>(row), m);
    return data;
}

void write_csv(const std::filesystem::path& path, const Dataset& data) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    for (std::size_t c = 0; c < data.width(); ++c) {
        os << (c < data.feature_names.size() ? data.feature_names[c] : "f" + std::to_string(c)) << ',';
    }
    os << "label\n";
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t r = 0; r < data.size(); ++r) {
        for (std::size_t c = 0; c < data.width(); ++c) {
            os << data.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) << ',';
        }
        os << data.labels[r] << '\n';
    }
}

PcaModel pca_fit(const Eigen::MatrixXd& train_features, int n_components) {
    const Eigen::Index n = train_features.rows();
    const Eigen::Index m = train_features.cols();
    if (n < 2) {
        throw ArgumentError("PCA needs at least two rows");
    }
    if (n_components < 1 || n_components > std::min(n, m)) {
        throw ArgumentError("PCA component count " + std::to_string(n_components) + " outside [1, min(n, m) = " +
                            std::to_string(std::min(n, m)) + "]");
    }

    PcaModel model;
    model.mean = train_features.colwise().mean().transpose();
    const Eigen::MatrixXd centered = train_features.rowwise() - model.mean.transpose();
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);

    const double scale = train_features.cwiseAbs().maxCoeff();
    if (!(cov.trace() > 1e-24 * std::max(scale * scale, std::numeric_limits<double>::min()))) {
        throw DegenerateDataError("PCA input has zero variance");
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("covariance eigen-decomposition failed");
    }
    // Eigen returns ascending eigenvalues.
    model.components.resize(n_components, m);
    model.explained_variance.resize(n_components);
    for (int k = 0; k < n_components; ++k) {
        const Eigen::Index src = m - 1 - k;
        Eigen::VectorXd v = solver.eigenvectors().col(src);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0.0) {
            v = -v;
        }
        model.components.row(k) = v.transpose();
        model.explained_variance(k) = std::max(0.0, solver.eigenvalues()(src));
    }
    return model;
}

Eigen::MatrixXd pca_transform(const PcaModel& model, const Eigen::MatrixXd& features) {
    if (features.cols() != model.mean.size()) {
        throw ArgumentError("PCA transform: feature width " + std::to_string(features.cols()) +
                            " does not match fitted width " + std::to_string(model.mean.size()));
    }
    return (features.rowwise() - model.mean.transpose()) * model.components.transpose();
}

Eigen::MatrixXd pca_inverse_transform(const PcaModel& model, const Eigen::MatrixXd& projected) {
    if (projected.cols() != model.components.rows()) {
        throw ArgumentError("PCA inverse transform: component count mismatch");
    }
    return (projected * model.components).rowwise() + model.mean.transpose();
}

RescaleModel rescale_fit(const Eigen::MatrixXd& train_features) {
    if (train_features.rows() < 1) {
        throw ArgumentError("rescale fit on an empty sample");
    }
    RescaleModel model;
    model.min = train_features.colwise().minCoeff().transpose();
    model.max = train_features.colwise().maxCoeff().transpose();
    for (Eigen::Index c = 0; c < model.min.size(); ++c) {
        if (!(model.max(c) > model.min(c))) {
            throw DegenerateDataError("rescale: column " + std::to_string(c) + " is constant");
        }
    }
    return model;
}

Eigen::MatrixXd rescale_apply(const RescaleModel& model, const Eigen::MatrixXd& features) {
    if (features.cols() != model.min.size()) {
        throw ArgumentError("rescale: feature width does not match fitted width");
    }
    Eigen::MatrixXd out(features.rows(), features.cols());
    for (Eigen::Index c = 0; c < features.cols(); ++c) {
        const double lo = model.min(c);
        const double hi = model.max(c);
        const double span = hi - lo;
        for (Eigen::Index r = 0; r < features.rows(); ++r) {
            // -1 + 2 (x - lo) / span, written so that x = lo, hi and the exact
            // midpoint come out as exactly -1, +1 and 0.
            const double x = features(r, c);
            const double v = ((x - lo) - (hi - x)) / span;
            out(r, c) = std::clamp(v, -1.0, 1.0);
        }
    }
    return out;
}

std::vector<FeatureVector> to_feature_vectors(const Eigen::MatrixXd& rescaled) {
    std::vector<FeatureVector> out;
    out.reserve(static_cast<std::size_t>(rescaled.rows()));
    for (Eigen::Index r = 0; r < rescaled.rows(); ++r) {
        std::vector<double> row(static_cast<std::size_t>(rescaled.cols()));
        for (Eigen::Index c = 0; c < rescaled.cols(); ++c) {
            row[static_cast<std::size_t>(c)] = rescaled(r, c);
        }
        out.emplace_back(std::move(row));
    }
    return out;
}

Dataset generate_synthetic(std::size_t n_events, std::size_t n_raw_features, double separation,
                           std::uint64_t seed) {
    if (n_events < 2 || n_events % 2 != 0) {
        throw ArgumentError("synthetic event count must be even and >= 2");
    }
    if (n_raw_features < 1) {
        throw ArgumentError("synthetic feature count must be >= 1");
    }
    if (!(separation >= 0.0) || !std::isfinite(separation)) {
        throw ArgumentError("synthetic separation must be finite and >= 0");
    }
    const auto m = static_cast<Eigen::Index>(n_raw_features);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    // Random correlation matrix: normalised A A^T / m + I / 2.
    Eigen::MatrixXd a(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            a(i, j) = normal(rng);
        }
    }
    Eigen::MatrixXd cov = a * a.transpose() / static_cast<double>(m);
    cov.diagonal().array() += 0.5;
    const Eigen::VectorXd inv_sd = cov.diagonal().array().rsqrt();
    cov = inv_sd.asDiagonal() * cov * inv_sd.asDiagonal();
    const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(cov).matrixL();

    Eigen::VectorXd direction(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        direction(i) = normal(rng);
    }
    direction.normalize();
    const Eigen::VectorXd half_shift = 0.5 * separation * direction;

    Dataset data;
    data.features.resize(static_cast<Eigen::Index>(n_events), m);
    data.labels.resize(n_events);
    for (Eigen::Index i = 0; i < m; ++i) {
        data.feature_names.push_back("x" + std::to_string(i));
    }
    Eigen::VectorXd z(m);
    for (std::size_t e = 0; e < n_events; ++e) {
        const int label = static_cast<int>(e % 2);
        for (Eigen::Index i = 0; i < m; ++i) {
            z(i) = normal(rng);
        }
        const Eigen::VectorXd x = chol * z + (label == 1 ? half_shift : Eigen::VectorXd(-half_shift));
        data.features.row(static_cast<Eigen::Index>(e)) = x.transpose();
        data.labels[e] = label;
    }
    return data;
}

std::vector<TrainTestIndices> split_datasets(const Dataset& dataset, std::size_t n_repetitions, std::size_t size,
                                             std::uint64_t seed, SamplingMode mode) {
    if (n_repetitions < 1 || size < 1) {
        throw ArgumentError("split needs at least one repetition and a positive sample size");
    }
    std::vector<std::size_t> pos;
    std::vector<std::size_t> neg;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        (dataset.labels[i] == 1 ? pos : neg).push_back(i);
    }
    const double signal_fraction = static_cast<double>(pos.size()) / static_cast<double>(dataset.size());
    const auto n_pos = static_cast<std::size_t>(std::llround(static_cast<double>(size) * signal_fraction));
    const std::size_t n_neg = size - n_pos;

    const std::size_t draws_per_pool = mode == SamplingMode::Disjoint ? 2 * n_repetitions : 2;
    if (draws_per_pool * n_pos > pos.size() || draws_per_pool * n_neg > neg.size()) {
        std::ostringstream msg;
        msg << "pool of " << dataset.size() << " events (" << pos.size() << " signal) cannot supply "
            << draws_per_pool << " disjoint stratified samples of " << size << " events";
        throw ArgumentError(msg.str());
    }

    std::mt19937_64 rng(seed);
    std::vector<TrainTestIndices> out(n_repetitions);
    std::size_t pos_cursor = 0;
    std::size_t neg_cursor = 0;
    auto draw = [&](std::vector<std::size_t>& sample) {
        sample.assign(pos.begin() + static_cast<std::ptrdiff_t>(pos_cursor),
                      pos.begin() + static_cast<std::ptrdiff_t>(pos_cursor + n_pos));
        sample.insert(sample.end(), neg.begin() + static_cast<std::ptrdiff_t>(neg_cursor),
                      neg.begin() + static_cast<std::ptrdiff_t>(neg_cursor + n_neg));
        pos_cursor += n_pos;
        neg_cursor += n_neg;
        std::sort(sample.begin(), sample.end());
    };
    for (std::size_t r = 0; r < n_repetitions; ++r) {
        if (r == 0 || mode == SamplingMode::Resample) {
            std::shuffle(pos.begin(), pos.end(), rng);
            std::shuffle(neg.begin(), neg.end(), rng);
            pos_cursor = 0;
            neg_cursor = 0;
        }
        draw(out[r].train);
        draw(out[r].test);
    }
    return out;
}

Preprocessor Preprocessor::fit(const Eigen::MatrixXd& train_features, int n_components) {
    Preprocessor p;
    p.pca = pca_fit(train_features, n_components);
    p.rescale = rescale_fit(pca_transform(p.pca, train_features));
    return p;
}

std::vector<FeatureVector> Preprocessor::apply(const Eigen::MatrixXd& features) const {
    return to_feature_vectors(rescale_apply(rescale, pca_transform(pca, features)));
}

}  // namespace qkernel
