#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qkernel/kernel.hpp"

namespace qkernel {

/// Soft-margin SVM in dual form, trained on a precomputed kernel matrix.
///
/// Labels are stored as -1 / +1; the public API takes 0 (background) / 1
/// (signal). Decision score: sum_i alpha_i y_i K(x_i, x) + bias.
struct SvmModel {
    std::vector<double> alpha;
    std::vector<int> labels;  ///< -1 / +1
    double bias = 0.0;
    double C = 1.0;
    std::vector<std::size_t> support_indices;  ///< indices with alpha > 0
    int iterations = 0;

    std::size_t size() const noexcept { return alpha.size(); }
};

struct SmoOptions {
    double tol = 1e-3;  ///< stop when the maximal KKT violation drops below this
    long long max_iterations = 10'000'000;
};

/// SMO with maximal-violating-pair working-set selection.
///
/// Throws DegenerateDataError if only one class is present, ArgumentError for
/// a non-square or non-symmetric gram or a size mismatch, ConfigError for
/// C <= 0 and NumericalError if max_iterations is exhausted.
SvmModel train(const Eigen::MatrixXd& gram, std::span<const int> labels01, double C,
               const SmoOptions& options = {});

/// Decision score for one sample given its kernel values against the
/// training set (in training order).
double decision(const SvmModel& model, std::span<const double> kernel_row);

/// decision() for every row of a test-by-train kernel matrix.
std::vector<double> decision_scores(const SvmModel& model, const Eigen::MatrixXd& kernel);

/// Largest KKT violation max_{I_up}(-y G) - min_{I_low}(-y G) of a model
/// against its training matrix. Zero at an exact optimum.
double kkt_violation(const SvmModel& model, const Eigen::MatrixXd& gram);

/// Dual objective 0.5 a^T Q a - sum(a), with Q_ij = y_i y_j K_ij.
double dual_objective(const SvmModel& model, const Eigen::MatrixXd& gram);

/// Sigmoid P(signal | score) = 1 / (1 + exp(A * score + B)).
struct PlattParams {
    double A = 0.0;
    double B = 0.0;
};

/// Fits PlattParams by regularised maximum likelihood (prior-smoothed
/// targets, Newton iterations with backtracking) on the model's own training
/// scores. If all training scores are equal the fit is flat: A = B = 0,
/// probability 0.5 everywhere. Throws CalibrationError when Newton fails to
/// converge.
PlattParams platt_calibrate(const SvmModel& model, const Eigen::MatrixXd& gram, std::span<const int> labels01);

/// Same fit on explicit (score, label) pairs.
PlattParams platt_fit(std::span<const double> scores, std::span<const int> labels01);

double platt_probability(const PlattParams& params, double score);

/// JSON layout:
///   {"format": "qkernel-svm-1", "C": ..., "bias": ..., "alpha": [...],
///    "labels": [...-1/+1...], "support_indices": [...],
///    "kernel": {"kind": ..., "shots": ..., "gamma": ..., "degree": ..., "seed": ...},
///    "feature_map": {"n_qubits": ..., "d": ..., "n_layers": ...}}
void save_model_json(const std::filesystem::path& path, const SvmModel& model, const KernelSpec& spec,
                     const FeatureMapConfig& cfg);

struct LoadedModel {
    SvmModel model;
    KernelSpec spec;
    FeatureMapConfig feature_map;
};

LoadedModel load_model_json(const std::filesystem::path& path);

}  // namespace qkernel
