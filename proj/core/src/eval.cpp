#include "qkernel/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <list>
#include <numeric>
#include <random>

#include "qkernel/errors.hpp"

namespace qkernel {

namespace {

struct ClassCounts {
    std::size_t signal = 0;
    std::size_t background = 0;
};

ClassCounts check_scored(std::span<const double> scores, std::span<const int> labels01) {
    if (scores.size() != labels01.size()) {
        throw ArgumentError("score and label counts differ");
    }
    ClassCounts counts;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!std::isfinite(scores[i])) {
            throw ArgumentError("non-finite score at index " + std::to_string(i));
        }
        if (labels01[i] == 1) {
            ++counts.signal;
        } else if (labels01[i] == 0) {
            ++counts.background;
        } else {
            throw ArgumentError("labels must be 0 or 1");
        }
    }
    if (counts.signal == 0 || counts.background == 0) {
        throw ArgumentError("ROC evaluation needs both classes");
    }
    return counts;
}

// Indices sorted by descending score.
std::vector<std::size_t> order_descending(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

}  // namespace

RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels01) {
    const auto counts = check_scored(scores, labels01);
    const auto order = order_descending(scores);
    const double ns = static_cast<double>(counts.signal);
    const double nb = static_cast<double>(counts.background);

    RocCurve curve;
    curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 1.0});
    std::size_t sel_s = 0;
    std::size_t sel_b = 0;
    for (std::size_t k = 0; k < order.size();) {
        const double threshold = scores[order[k]];
        while (k < order.size() && scores[order[k]] == threshold) {
            (labels01[order[k]] == 1 ? sel_s : sel_b) += 1;
            ++k;
        }
        curve.points.push_back({threshold, static_cast<double>(sel_s) / ns, 1.0 - static_cast<double>(sel_b) / nb});
    }
    return curve;
}

double auc(std::span<const double> scores, std::span<const int> labels01) {
    const auto counts = check_scored(scores, labels01);
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // twice_u = 2 * (wins + ties / 2), accumulated exactly in integers.
    std::uint64_t twice_u = 0;
    std::uint64_t background_below = 0;
    for (std::size_t k = 0; k < order.size();) {
        const double value = scores[order[k]];
        std::uint64_t group_s = 0;
        std::uint64_t group_b = 0;
        while (k < order.size() && scores[order[k]] == value) {
            (labels01[order[k]] == 1 ? group_s : group_b) += 1;
            ++k;
        }
        twice_u += 2 * group_s * background_below + group_s * group_b;
        background_below += group_b;
    }
    return static_cast<double>(twice_u) /
           (2.0 * static_cast<double>(counts.signal) * static_cast<double>(counts.background));
}

std::vector<double> interpolate_rejection(const RocCurve& curve, std::span<const double> grid) {
    const auto& pts = curve.points;
    if (pts.empty()) {
        throw ArgumentError("empty ROC curve");
    }
    std::vector<double> out;
    out.reserve(grid.size());
    for (double e : grid) {
        const auto it = std::find_if(pts.begin(), pts.end(), [e](const RocPoint& p) { return p.signal_efficiency >= e; });
        if (it == pts.end()) {
            out.push_back(pts.back().background_rejection);
        } else if (it->signal_efficiency == e || it == pts.begin()) {
            out.push_back(it->background_rejection);
        } else {
            const auto& lo = *(it - 1);
            const double f = (e - lo.signal_efficiency) / (it->signal_efficiency - lo.signal_efficiency);
            out.push_back(lo.background_rejection + f * (it->background_rejection - lo.background_rejection));
        }
    }
    return out;
}

std::vector<double> efficiency_grid() {
    std::vector<double> grid(101);
    for (int i = 0; i <= 100; ++i) {
        grid[static_cast<std::size_t>(i)] = i / 100.0;
    }
    return grid;
}

double significance_gain(double signal_efficiency, double background_efficiency) {
    if (signal_efficiency <= 0.0) {
        return 0.0;
    }
    if (background_efficiency <= 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return signal_efficiency / std::sqrt(background_efficiency);
}

std::vector<SignificancePoint> significance_scan(std::span<const double> scores, std::span<const int> labels01) {
    const auto curve = roc_curve(scores, labels01);
    std::vector<SignificancePoint> out;
    out.reserve(curve.points.size() - 1);
    for (std::size_t k = 1; k < curve.points.size(); ++k) {
        const auto& p = curve.points[k];
        out.push_back({p.threshold, p.signal_efficiency, p.background_rejection,
                       significance_gain(p.signal_efficiency, 1.0 - p.background_rejection)});
    }
    return out;
}

RepetitionSummary summarize_repetitions(std::span<const double> aucs) {
    if (aucs.empty()) {
        throw ArgumentError("no repetitions to summarise");
    }
    RepetitionSummary s;
    s.per_repetition_auc.assign(aucs.begin(), aucs.end());
    const double n = static_cast<double>(aucs.size());
    // Shifted by the first value: identical inputs give exactly that value
    // and a standard deviation of exactly 0.
    const double ref = aucs.front();
    double shift_sum = 0.0;
    for (double a : aucs) {
        shift_sum += a - ref;
    }
    const double shift_mean = shift_sum / n;
    s.auc_mean = ref + shift_mean;
    double ss = 0.0;
    for (double a : aucs) {
        const double dev = (a - ref) - shift_mean;
        ss += dev * dev;
    }
    s.auc_std = std::sqrt(ss / n);
    s.single_repetition = aucs.size() == 1;
    return s;
}

std::vector<HyperParams> HyperGrid::expand(const KernelSpec& base) const {
    const bool uses_gamma = base.kind == KernelKind::Polynomial || base.kind == KernelKind::Rbf;
    const bool uses_degree = base.kind == KernelKind::Polynomial;
    const std::vector<double> gammas = uses_gamma ? gamma : std::vector<double>{base.gamma};
    const std::vector<int> degrees = uses_degree ? degree : std::vector<int>{base.degree};
    std::vector<HyperParams> out;
    for (double c : C) {
        for (double g : gammas) {
            for (int d : degrees) {
                HyperParams hp{base, c};
                hp.kernel.gamma = g;
                hp.kernel.degree = d;
                out.push_back(hp);
            }
        }
    }
    return out;
}

std::vector<int> stratified_folds(std::span<const int> labels01, int k_folds, std::uint64_t seed) {
    if (k_folds < 2) {
        throw ArgumentError("cross-validation needs k_folds >= 2");
    }
    std::vector<std::size_t> pos;
    std::vector<std::size_t> neg;
    for (std::size_t i = 0; i < labels01.size(); ++i) {
        (labels01[i] == 1 ? pos : neg).push_back(i);
    }
    std::mt19937_64 rng(seed);
    std::shuffle(pos.begin(), pos.end(), rng);
    std::shuffle(neg.begin(), neg.end(), rng);
    std::vector<int> fold(labels01.size(), 0);
    // Negatives continue the round-robin where positives stopped so fold
    // sizes differ by at most one.
    std::size_t next = 0;
    for (auto* group : {&pos, &neg}) {
        for (std::size_t idx : *group) {
            fold[idx] = static_cast<int>(next % static_cast<std::size_t>(k_folds));
            ++next;
        }
    }
    return fold;
}

namespace {

bool same_kernel(const KernelSpec& a, const KernelSpec& b) {
    return a.kind == b.kind && a.shots == b.shots && a.gamma == b.gamma && a.degree == b.degree && a.seed == b.seed;
}

// True if `a` should replace the current best `b`.
bool better(const CvScore& a, const CvScore& b) {
    if (a.mean_auc != b.mean_auc) {
        return a.mean_auc > b.mean_auc;
    }
    if (a.params.C != b.params.C) {
        return a.params.C < b.params.C;
    }
    if (a.params.kernel.gamma != b.params.kernel.gamma) {
        return a.params.kernel.gamma < b.params.kernel.gamma;
    }
    return a.params.kernel.degree < b.params.kernel.degree;
}

std::vector<Eigen::Index> indices_where(const std::vector<int>& fold, int f, bool equal) {
    std::vector<Eigen::Index> out;
    for (std::size_t i = 0; i < fold.size(); ++i) {
        if ((fold[i] == f) == equal) {
            out.push_back(static_cast<Eigen::Index>(i));
        }
    }
    return out;
}

}  // namespace

CvResult cross_validate(std::span<const FeatureVector> X, std::span<const int> labels01,
                        std::span<const HyperParams> grid, const FeatureMapConfig& cfg, const CvOptions& options) {
    if (X.size() != labels01.size()) {
        throw ArgumentError("sample and label counts differ");
    }
    std::list<std::pair<KernelSpec, GramMatrix>> grams;
    GramProvider provider = [&](const KernelSpec& spec) -> const GramMatrix& {
        for (const auto& [k, g] : grams) {
            if (same_kernel(k, spec)) {
                return g;
            }
        }
        grams.emplace_back(spec, gram_matrix(X, spec, cfg, options.gram));
        return grams.back().second;
    };
    return cross_validate(labels01, grid, provider, options);
}

CvResult cross_validate(std::span<const int> labels01, std::span<const HyperParams> grid,
                        const GramProvider& gram_for, const CvOptions& options) {
    if (grid.empty()) {
        throw ArgumentError("empty hyperparameter grid");
    }
    const auto fold = stratified_folds(labels01, options.k_folds, options.seed);

    struct FoldSplit {
        std::vector<Eigen::Index> train;
        std::vector<Eigen::Index> valid;
        std::vector<int> train_labels;
        std::vector<int> valid_labels;
    };
    std::vector<FoldSplit> splits(static_cast<std::size_t>(options.k_folds));
    for (int f = 0; f < options.k_folds; ++f) {
        auto& s = splits[static_cast<std::size_t>(f)];
        s.train = indices_where(fold, f, false);
        s.valid = indices_where(fold, f, true);
        for (auto i : s.train) {
            s.train_labels.push_back(labels01[static_cast<std::size_t>(i)]);
        }
        for (auto i : s.valid) {
            s.valid_labels.push_back(labels01[static_cast<std::size_t>(i)]);
        }
        auto has_both = [](const std::vector<int>& l) {
            return std::count(l.begin(), l.end(), 1) > 0 && std::count(l.begin(), l.end(), 0) > 0;
        };
        if (!has_both(s.train_labels) || !has_both(s.valid_labels)) {
            throw StratificationError("fold " + std::to_string(f) + " of " + std::to_string(options.k_folds) +
                                      " contains a single class");
        }
    }

    CvResult result;
    result.scores.reserve(grid.size());
    for (const auto& hp : grid) {
        const GramMatrix& gram = gram_for(hp.kernel);
        if (static_cast<std::size_t>(gram.rows()) != labels01.size() || gram.rows() != gram.cols()) {
            throw ArgumentError("cross-validation kernel matrix does not match the sample");
        }
        double sum = 0.0;
        for (const auto& s : splits) {
            const Eigen::MatrixXd k_train = gram(s.train, s.train);
            const Eigen::MatrixXd k_valid = gram(s.valid, s.train);
            const auto model = train(k_train, s.train_labels, hp.C, options.smo);
            sum += auc(decision_scores(model, k_valid), s.valid_labels);
        }
        CvScore score{hp, sum / static_cast<double>(options.k_folds)};
        if (result.scores.empty() || better(score, {result.best, result.best_auc})) {
            result.best = hp;
            result.best_auc = score.mean_auc;
        }
        result.scores.push_back(score);
    }
    return result;
}

void write_roc_csv(const std::filesystem::path& path, const RocCurve& curve) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    os << "threshold,signal_efficiency,background_rejection\n";
    os << std::setprecision(17);
    for (const auto& p : curve.points) {
        if (std::isinf(p.threshold)) {
            os << "inf";
        } else {
            os << p.threshold;
        }
        os << ',' << p.signal_efficiency << ',' << p.background_rejection << '\n';
    }
}

}  // namespace qkernel
