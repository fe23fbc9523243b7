#include "qkernel/svm.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qkernel/errors.hpp"

namespace qkernel {

namespace {

constexpr double kTau = 1e-12;

std::vector<int> to_signed_labels(std::span<const int> labels01) {
    std::vector<int> y(labels01.size());
    for (std::size_t i = 0; i < labels01.size(); ++i) {
        if (labels01[i] != 0 && labels01[i] != 1) {
            throw ArgumentError("labels must be 0 or 1");
        }
        y[i] = labels01[i] == 1 ? 1 : -1;
    }
    return y;
}

void check_gram(const Eigen::MatrixXd& gram, std::size_t n) {
    if (gram.rows() != gram.cols()) {
        throw ArgumentError("gram matrix is not square");
    }
    if (static_cast<std::size_t>(gram.rows()) != n) {
        throw ArgumentError("gram matrix size does not match label count");
    }
    for (Eigen::Index i = 0; i < gram.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < gram.cols(); ++j) {
            const double a = gram(i, j);
            const double b = gram(j, i);
            if (std::abs(a - b) > 1e-12 * std::max(1.0, std::max(std::abs(a), std::abs(b)))) {
                throw ArgumentError("gram matrix is not symmetric at (" + std::to_string(i) + ", " +
                                    std::to_string(j) + ")");
            }
        }
    }
}

bool in_up(int y, double a, double C) { return (y == 1 && a < C) || (y == -1 && a > 0.0); }
bool in_low(int y, double a, double C) { return (y == 1 && a > 0.0) || (y == -1 && a < C); }

struct Violation {
    double m = -std::numeric_limits<double>::infinity();  // max over I_up of -y G
    double M = std::numeric_limits<double>::infinity();   // min over I_low of -y G
    std::size_t i = 0;
    std::size_t j = 0;
};

Violation most_violating_pair(const std::vector<double>& G, const std::vector<double>& alpha,
                              const std::vector<int>& y, double C) {
    Violation v;
    for (std::size_t t = 0; t < G.size(); ++t) {
        const double f = -y[t] * G[t];
        if (in_up(y[t], alpha[t], C) && f > v.m) {
            v.m = f;
            v.i = t;
        }
        if (in_low(y[t], alpha[t], C) && f < v.M) {
            v.M = f;
            v.j = t;
        }
    }
    return v;
}

// Gradient of the dual objective: G = Q alpha - 1.
std::vector<double> gradient(const SvmModel& model, const Eigen::MatrixXd& gram) {
    const std::size_t n = model.size();
    std::vector<double> G(n, -1.0);
    for (std::size_t s = 0; s < n; ++s) {
        double acc = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            if (model.alpha[t] != 0.0) {
                acc += model.alpha[t] * model.labels[t] *
                       gram(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t));
            }
        }
        G[s] += model.labels[s] * acc;
    }
    return G;
}

}  // namespace

SvmModel train(const Eigen::MatrixXd& gram, std::span<const int> labels01, double C, const SmoOptions& options) {
    if (!(C > 0.0) || !std::isfinite(C)) {
        throw ConfigError("SVM regularisation C must be a positive finite number");
    }
    const std::size_t n = labels01.size();
    SvmModel model;
    model.labels = to_signed_labels(labels01);
    check_gram(gram, n);
    bool has_pos = false;
    bool has_neg = false;
    for (int y : model.labels) {
        (y > 0 ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg) {
        throw DegenerateDataError("SVM training needs both classes");
    }

    model.C = C;
    model.alpha.assign(n, 0.0);
    const auto& y = model.labels;
    auto& alpha = model.alpha;
    std::vector<double> G(n, -1.0);
    auto K = [&](std::size_t a, std::size_t b) {
        return gram(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    };

    Violation v;
    long long iter = 0;
    for (;; ++iter) {
        v = most_violating_pair(G, alpha, y, C);
        if (v.m - v.M < options.tol) {
            break;
        }
        if (iter >= options.max_iterations) {
            throw NumericalError("SMO did not converge within " + std::to_string(options.max_iterations) +
                                 " iterations (KKT violation " + std::to_string(v.m - v.M) + ")");
        }
        const std::size_t i = v.i;
        const std::size_t j = v.j;
        // Step t along alpha_i += y_i t, alpha_j -= y_j t keeps sum(alpha y) fixed.
        double eta = K(i, i) + K(j, j) - 2.0 * K(i, j);
        if (eta <= 0.0) {
            eta = kTau;
        }
        double t = (v.m - v.M) / eta;
        const double room_i = y[i] == 1 ? C - alpha[i] : alpha[i];
        const double room_j = y[j] == 1 ? alpha[j] : C - alpha[j];
        bool clip_i = false;
        bool clip_j = false;
        if (t >= room_i) {
            t = room_i;
            clip_i = true;
        }
        if (t >= room_j) {
            t = room_j;
            clip_j = true;
            clip_i = clip_i && room_i == room_j;
        }
        alpha[i] = clip_i ? (y[i] == 1 ? C : 0.0) : alpha[i] + y[i] * t;
        alpha[j] = clip_j ? (y[j] == 1 ? 0.0 : C) : alpha[j] - y[j] * t;
        for (std::size_t s = 0; s < n; ++s) {
            G[s] += y[s] * t * (K(s, i) - K(s, j));
        }
    }
    model.iterations = static_cast<int>(iter);

    // Bias: average of -y_s G_s over margin (free) support vectors; with none,
    // the midpoint of the feasible interval.
    double sum = 0.0;
    std::size_t free_count = 0;
    for (std::size_t s = 0; s < n; ++s) {
        if (alpha[s] > 0.0 && alpha[s] < C) {
            sum += -y[s] * G[s];
            ++free_count;
        }
    }
    model.bias = free_count ? sum / static_cast<double>(free_count) : (v.m + v.M) / 2.0;

    for (std::size_t s = 0; s < n; ++s) {
        if (alpha[s] > 0.0) {
            model.support_indices.push_back(s);
        }
    }
    return model;
}

double decision(const SvmModel& model, std::span<const double> kernel_row) {
    if (kernel_row.size() != model.size()) {
        throw ArgumentError("kernel row length " + std::to_string(kernel_row.size()) +
                            " does not match training size " + std::to_string(model.size()));
    }
    double score = model.bias;
    for (std::size_t s = 0; s < model.size(); ++s) {
        if (model.alpha[s] != 0.0) {
            score += model.alpha[s] * model.labels[s] * kernel_row[s];
        }
    }
    return score;
}

std::vector<double> decision_scores(const SvmModel& model, const Eigen::MatrixXd& kernel) {
    if (static_cast<std::size_t>(kernel.cols()) != model.size()) {
        throw ArgumentError("kernel matrix column count does not match training size");
    }
    std::vector<double> scores(static_cast<std::size_t>(kernel.rows()));
    std::vector<double> row(model.size());
    for (Eigen::Index r = 0; r < kernel.rows(); ++r) {
        for (Eigen::Index c = 0; c < kernel.cols(); ++c) {
            row[static_cast<std::size_t>(c)] = kernel(r, c);
        }
        scores[static_cast<std::size_t>(r)] = decision(model, row);
    }
    return scores;
}

double kkt_violation(const SvmModel& model, const Eigen::MatrixXd& gram) {
    const auto G = gradient(model, gram);
    const auto v = most_violating_pair(G, model.alpha, model.labels, model.C);
    return std::max(0.0, v.m - v.M);
}

double dual_objective(const SvmModel& model, const Eigen::MatrixXd& gram) {
    const auto G = gradient(model, gram);
    // 0.5 a^T Q a - 1^T a = 0.5 a^T (G + 1) - 1^T a
    double obj = 0.0;
    for (std::size_t s = 0; s < model.size(); ++s) {
        obj += 0.5 * model.alpha[s] * (G[s] + 1.0) - model.alpha[s];
    }
    return obj;
}

PlattParams platt_calibrate(const SvmModel& model, const Eigen::MatrixXd& gram, std::span<const int> labels01) {
    if (labels01.size() != model.size()) {
        throw ArgumentError("calibration labels do not match the training set");
    }
    const auto scores = decision_scores(model, gram);
    return platt_fit(scores, labels01);
}

PlattParams platt_fit(std::span<const double> scores, std::span<const int> labels01) {
    if (scores.size() != labels01.size() || scores.empty()) {
        throw ArgumentError("platt_fit: score and label counts differ or are empty");
    }
    bool all_equal = true;
    double prior1 = 0.0;
    double prior0 = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        all_equal = all_equal && scores[i] == scores[0];
        (labels01[i] == 1 ? prior1 : prior0) += 1.0;
    }
    if (all_equal) {
        return {0.0, 0.0};
    }

    constexpr int kMaxIter = 100;
    constexpr double kMinStep = 1e-10;
    constexpr double kSigma = 1e-12;
    constexpr double kEps = 1e-5;

    const double hi = (prior1 + 1.0) / (prior1 + 2.0);
    const double lo = 1.0 / (prior0 + 2.0);
    std::vector<double> target(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        target[i] = labels01[i] == 1 ? hi : lo;
    }

    auto objective = [&](double A, double B) {
        double f = 0.0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const double z = scores[i] * A + B;
            f += z >= 0 ? target[i] * z + std::log1p(std::exp(-z)) : (target[i] - 1.0) * z + std::log1p(std::exp(z));
        }
        return f;
    };

    double A = 0.0;
    double B = std::log((prior0 + 1.0) / (prior1 + 1.0));
    double fval = objective(A, B);
    double g1 = 0.0;
    double g2 = 0.0;
    for (int iter = 0; iter < kMaxIter; ++iter) {
        double h11 = kSigma;
        double h22 = kSigma;
        double h21 = 0.0;
        g1 = 0.0;
        g2 = 0.0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const double z = scores[i] * A + B;
            double p;
            double q;
            if (z >= 0) {
                p = std::exp(-z) / (1.0 + std::exp(-z));
                q = 1.0 / (1.0 + std::exp(-z));
            } else {
                p = 1.0 / (1.0 + std::exp(z));
                q = std::exp(z) / (1.0 + std::exp(z));
            }
            const double d2 = p * q;
            h11 += scores[i] * scores[i] * d2;
            h22 += d2;
            h21 += scores[i] * d2;
            const double d1 = target[i] - p;
            g1 += scores[i] * d1;
            g2 += d1;
        }
        if (std::abs(g1) < kEps && std::abs(g2) < kEps) {
            return {A, B};
        }
        const double det = h11 * h22 - h21 * h21;
        const double dA = -(h22 * g1 - h21 * g2) / det;
        const double dB = -(-h21 * g1 + h11 * g2) / det;
        const double gd = g1 * dA + g2 * dB;
        double step = 1.0;
        while (step >= kMinStep) {
            const double newA = A + step * dA;
            const double newB = B + step * dB;
            const double newf = objective(newA, newB);
            if (newf < fval + 1e-4 * step * gd) {
                A = newA;
                B = newB;
                fval = newf;
                break;
            }
            step /= 2.0;
        }
        if (step < kMinStep) {
            std::ostringstream msg;
            msg << "Platt calibration line search failed at iteration " << iter << " (A=" << A << ", B=" << B
                << ", gradient=(" << g1 << ", " << g2 << "))";
            throw CalibrationError(msg.str());
        }
    }
    std::ostringstream msg;
    msg << "Platt calibration did not converge in " << kMaxIter << " iterations (A=" << A << ", B=" << B
        << ", gradient=(" << g1 << ", " << g2 << "))";
    throw CalibrationError(msg.str());
}

double platt_probability(const PlattParams& params, double score) {
    const double z = params.A * score + params.B;
    return z >= 0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
}

void save_model_json(const std::filesystem::path& path, const SvmModel& model, const KernelSpec& spec,
                     const FeatureMapConfig& cfg) {
    nlohmann::ordered_json j;
    j["format"] = "qkernel-svm-1";
    j["C"] = model.C;
    j["bias"] = model.bias;
    j["alpha"] = model.alpha;
    j["labels"] = model.labels;
    j["support_indices"] = model.support_indices;
    j["kernel"] = {{"kind", std::string(to_string(spec.kind))},
                   {"shots", spec.shots},
                   {"gamma", spec.gamma},
                   {"degree", spec.degree},
                   {"seed", spec.seed}};
    j["feature_map"] = {{"n_qubits", cfg.n_qubits}, {"d", cfg.d}, {"n_layers", cfg.n_layers}};
    std::ofstream os(path, std::ios::trunc);
    if (!os) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    os << j.dump(2) << '\n';
}

LoadedModel load_model_json(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) {
        throw IoError("cannot open " + path.string());
    }
    LoadedModel out;
    try {
        const auto j = nlohmann::json::parse(is);
        if (j.at("format") != "qkernel-svm-1") {
            throw ParseError(path.string() + ": unsupported model format");
        }
        out.model.C = j.at("C").get<double>();
        out.model.bias = j.at("bias").get<double>();
        out.model.alpha = j.at("alpha").get<std::vector<double>>();
        out.model.labels = j.at("labels").get<std::vector<int>>();
        out.model.support_indices = j.at("support_indices").get<std::vector<std::size_t>>();
        const auto& k = j.at("kernel");
        out.spec.kind = parse_kernel_kind(k.at("kind").get<std::string>());
        out.spec.shots = k.at("shots").get<int>();
        out.spec.gamma = k.at("gamma").get<double>();
        out.spec.degree = k.at("degree").get<int>();
        out.spec.seed = k.at("seed").get<std::uint64_t>();
        const auto& fm = j.at("feature_map");
        out.feature_map.n_qubits = fm.at("n_qubits").get<int>();
        out.feature_map.d = fm.at("d").get<int>();
        out.feature_map.n_layers = fm.at("n_layers").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    if (out.model.labels.size() != out.model.alpha.size()) {
        throw ParseError(path.string() + ": alpha and labels differ in length");
    }
    for (std::size_t s : out.model.support_indices) {
        if (s >= out.model.alpha.size()) {
            throw ParseError(path.string() + ": support index out of range");
        }
    }
    return out;
}

}  // namespace qkernel
