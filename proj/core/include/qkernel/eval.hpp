#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "qkernel/featuremap.hpp"
#include "qkernel/kernel.hpp"
#include "qkernel/svm.hpp"

namespace qkernel {

/// One operating point: events with score >= threshold are selected.
struct RocPoint {
    double threshold;
    double signal_efficiency;     ///< fraction of signal selected
    double background_rejection;  ///< fraction of background not selected
};

/// Points ordered by decreasing threshold, i.e. non-decreasing signal
/// efficiency and non-increasing background rejection. The first point
/// (threshold +inf) selects nothing: (0, 1). Every distinct score then adds
/// one point; the last one selects everything: (1, 0).
struct RocCurve {
    std::vector<RocPoint> points;
};

/// Throws ArgumentError unless both classes are present, sizes agree and all
/// scores are finite.
RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels01);

/// Mann-Whitney statistic: probability that a random signal event outscores
/// a random background event, ties counting one half. Computed from integer
/// pair counts, so it equals exhaustive pair counting bit for bit.
double auc(std::span<const double> scores, std::span<const int> labels01);

/// Background rejection at each signal efficiency of `grid`, interpolated
/// linearly along the curve. Where the curve is vertical the highest
/// rejection is used.
std::vector<double> interpolate_rejection(const RocCurve& curve, std::span<const double> grid);

/// 0.00, 0.01, ..., 1.00.
std::vector<double> efficiency_grid();

/// Improvement of S/sqrt(B) over no selection: eff_s / sqrt(eff_b).
/// eff_b == 0 with eff_s > 0 gives +infinity; eff_s == 0 gives 0.
double significance_gain(double signal_efficiency, double background_efficiency);

struct SignificancePoint {
    double threshold;
    double signal_acceptance;
    double background_rejection;
    double s_over_sqrt_b_gain;  ///< +infinity when no background survives
};

/// significance_gain at every threshold of roc_curve(), excluding the empty
/// selection at +inf.
std::vector<SignificancePoint> significance_scan(std::span<const double> scores, std::span<const int> labels01);

struct RepetitionSummary {
    double auc_mean = 0.0;
    double auc_std = 0.0;  ///< population standard deviation
    std::vector<double> per_repetition_auc;
    bool single_repetition = false;
};

/// Throws ArgumentError on an empty list.
RepetitionSummary summarize_repetitions(std::span<const double> aucs);

/// One candidate of a hyperparameter search. For quantum kernels only C is
/// searched; gamma and degree apply to the classical kinds.
struct HyperParams {
    KernelSpec kernel;
    double C = 1.0;
};

struct HyperGrid {
    std::vector<double> C = {0.1, 1.0, 10.0, 100.0};
    std::vector<double> gamma = {0.01, 0.1, 1.0};
    std::vector<int> degree = {2, 3};

    /// Cartesian product for one kernel kind, in (C, gamma, degree) order.
    /// Parameters the kind does not use are taken from `base`.
    std::vector<HyperParams> expand(const KernelSpec& base) const;
};

struct CvScore {
    HyperParams params;
    double mean_auc;
};

struct CvResult {
    HyperParams best;
    double best_auc = 0.0;
    std::vector<CvScore> scores;  ///< in grid order
};

struct CvOptions {
    int k_folds = 5;
    std::uint64_t seed = 0;
    SmoOptions smo;
    GramOptions gram;
};

/// Stratified k-fold assignment: fold index per sample. Each class is
/// shuffled with `seed` and dealt round-robin.
std::vector<int> stratified_folds(std::span<const int> labels01, int k_folds, std::uint64_t seed);

/// Mean validation AUC over stratified folds for each grid point; the winner
/// is the highest mean AUC with ties broken toward smaller C, then smaller
/// gamma, then smaller degree, then earlier grid position. One kernel matrix
/// is computed per distinct kernel spec on the full sample and sliced per
/// fold.
///
/// Throws ArgumentError for an empty grid or k_folds < 2 and
/// StratificationError when a fold lacks a class.
CvResult cross_validate(std::span<const FeatureVector> X, std::span<const int> labels01,
                        std::span<const HyperParams> grid, const FeatureMapConfig& cfg, const CvOptions& options);

/// Supplies the full-sample kernel matrix for a kernel spec. The reference
/// must stay valid for the duration of the cross_validate call.
using GramProvider = std::function<const GramMatrix&(const KernelSpec&)>;

/// Same search over matrices obtained from `gram_for` (options.gram unused).
CvResult cross_validate(std::span<const int> labels01, std::span<const HyperParams> grid,
                        const GramProvider& gram_for, const CvOptions& options);

/// Roc curve as CSV: header "threshold,signal_efficiency,background_rejection".
void write_roc_csv(const std::filesystem::path& path, const RocCurve& curve);

}  // namespace qkernel
