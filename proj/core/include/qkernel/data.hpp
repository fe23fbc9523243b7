#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qkernel/featuremap.hpp"

namespace qkernel {

/// n events by m raw variables plus a 0/1 label per event (1 = signal).
struct Dataset {
    Eigen::MatrixXd features;
    std::vector<int> labels;
    std::vector<std::string> feature_names;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t width() const noexcept { return static_cast<std::size_t>(features.cols()); }

    /// Rows `indices` in the given order.
    Dataset subset(std::span<const std::size_t> indices) const;
};

struct CsvSchema {
    std::string label_column = "label";
};

/// Reads a header-first CSV. Every column except the label column is a
/// numeric feature. Labels accept 0/1 (also written as 0.0/1.0).
///
/// Errors: IoError for a missing file, SchemaError for an empty file, a
/// missing label column, no feature columns, ragged rows or unknown label
/// values, ParseError (with row and column) for non-numeric or non-finite
/// feature cells.
Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});

/// Column names of a CSV header row, trimmed. Throws IoError for a missing
/// file and SchemaError for an empty one.
std::vector<std::string> read_csv_header(const std::filesystem::path& path);

/// Writes `data` with the feature names (or f0..f{m-1}) followed by "label".
void write_csv(const std::filesystem::path& path, const Dataset& data);

struct PcaModel {
    Eigen::VectorXd mean;              ///< length m
    Eigen::MatrixXd components;        ///< N x m, orthonormal rows
    Eigen::VectorXd explained_variance;  ///< length N, non-increasing

    std::size_t n_components() const noexcept { return static_cast<std::size_t>(components.rows()); }
};

/// Principal directions of the sample covariance (n - 1 normalisation).
/// Each component is oriented so that its largest-magnitude coordinate is
/// positive. Throws ArgumentError if n_components exceeds min(n, m) or is
/// < 1 or n < 2, DegenerateDataError if the data has zero total variance.
PcaModel pca_fit(const Eigen::MatrixXd& train_features, int n_components);

/// (features - mean) * components^T. Throws ArgumentError on a width mismatch.
Eigen::MatrixXd pca_transform(const PcaModel& model, const Eigen::MatrixXd& features);

/// Maps projected coordinates back to the raw space: mean + Z * components.
Eigen::MatrixXd pca_inverse_transform(const PcaModel& model, const Eigen::MatrixXd& projected);

struct RescaleModel {
    Eigen::VectorXd min;
    Eigen::VectorXd max;
};

/// Per-column training min and max. Throws DegenerateDataError for a
/// constant column.
RescaleModel rescale_fit(const Eigen::MatrixXd& train_features);

/// x -> -1 + 2 (x - min) / (max - min), clamped to [-1, +1].
Eigen::MatrixXd rescale_apply(const RescaleModel& model, const Eigen::MatrixXd& features);

/// Rows of a rescaled matrix as FeatureVectors.
std::vector<FeatureVector> to_feature_vectors(const Eigen::MatrixXd& rescaled);

/// Two balanced Gaussian classes in n_raw_features dimensions sharing a
/// seed-dependent correlated covariance (unit variances). The class means
/// differ by a vector of length `separation` in a seed-dependent direction.
/// Labels alternate 0, 1, 0, 1, ... Throws ArgumentError for an odd or
/// < 2 event count, n_raw_features < 1 or negative separation.
Dataset generate_synthetic(std::size_t n_events, std::size_t n_raw_features, double separation,
                           std::uint64_t seed);

enum class SamplingMode {
    Disjoint,  ///< every drawn sample is disjoint from every other
    Resample,  ///< each repetition draws independently from the full pool
};

struct TrainTestIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Draws n_repetitions (train, test) pairs of `size` events each, stratified
/// so every sample carries round(size * signal fraction of the pool) signal
/// events. Train and test never overlap. Throws ArgumentError when the pool
/// cannot supply the requested draws in the chosen mode.
std::vector<TrainTestIndices> split_datasets(const Dataset& dataset, std::size_t n_repetitions,
                                             std::size_t size, std::uint64_t seed,
                                             SamplingMode mode = SamplingMode::Disjoint);

/// Everything fitted on one training sample: PCA followed by rescaling.
struct Preprocessor {
    PcaModel pca;
    RescaleModel rescale;

    /// Fits both stages on `train_features`.
    static Preprocessor fit(const Eigen::MatrixXd& train_features, int n_components);
    std::vector<FeatureVector> apply(const Eigen::MatrixXd& features) const;
};

}  // namespace qkernel
