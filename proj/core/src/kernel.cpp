#include "qkernel/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "qkernel/errors.hpp"
#include "qkernel/parallel.hpp"

namespace qkernel {

std::string_view to_string(KernelKind kind) {
    switch (kind) {
        case KernelKind::QuantumExact:
            return "quantum-exact";
        case KernelKind::QuantumSampled:
            return "quantum-sampled";
        case KernelKind::Linear:
            return "linear";
        case KernelKind::Polynomial:
            return "polynomial";
        case KernelKind::Rbf:
            return "rbf";
    }
    return "unknown";
}

KernelKind parse_kernel_kind(std::string_view name) {
    for (auto kind : {KernelKind::QuantumExact, KernelKind::QuantumSampled, KernelKind::Linear,
                      KernelKind::Polynomial, KernelKind::Rbf}) {
        if (to_string(kind) == name) {
            return kind;
        }
    }
    throw ConfigError("unknown kernel kind '" + std::string(name) + "'");
}

void KernelSpec::validate() const {
    if (kind == KernelKind::QuantumSampled && shots < 1) {
        throw ConfigError("sampled kernel needs shots >= 1");
    }
    if ((kind == KernelKind::Polynomial || kind == KernelKind::Rbf) && !(gamma > 0.0)) {
        throw ConfigError("kernel gamma must be > 0");
    }
    if (kind == KernelKind::Polynomial && degree < 1) {
        throw ConfigError("polynomial degree must be >= 1");
    }
}

namespace {

void check_same_length(const FeatureVector& a, const FeatureVector& b) {
    if (a.size() != b.size()) {
        throw ArgumentError("feature vectors of different lengths (" + std::to_string(a.size()) +
                            " vs " + std::to_string(b.size()) + ")");
    }
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Keeps sampled test-vs-train entries statistically independent of the
// training matrix entries that share an (i, j) index.
constexpr std::uint64_t kCrossSeedDomain = 0x43524f5353ULL;

double zero_overlap_probability(const StateVector& state) {
    return std::clamp(std::norm(state[0]), 0.0, 1.0);
}

double sample_fraction(double p, int shots, std::uint64_t seed) {
    if (p >= 1.0) {
        return 1.0;
    }
    if (p <= 0.0) {
        return 0.0;
    }
    std::mt19937_64 rng(seed);
    std::binomial_distribution<long long> draw(shots, p);
    return static_cast<double>(draw(rng)) / static_cast<double>(shots);
}

// Overlap of the kernel circuit with |0...0>. Rounding can leave p a few ulp
// away from 1 when xi == xj; that residue is removed so the identity holds.
double sampled_probability(const StateVector& encoded_xj, std::span<const Gate> circuit_xi) {
    StateVector s = encoded_xj;
    s.apply_inverse(circuit_xi);
    const double p = zero_overlap_probability(s);
    return p > 1.0 - 1e-12 ? 1.0 : p;
}

std::vector<StateVector> encode_range(std::span<const FeatureVector> X, std::size_t begin,
                                      std::size_t end, const FeatureMapConfig& cfg, int threads) {
    std::vector<StateVector> states(end - begin, StateVector(cfg.n_qubits));
    parallel_for(end - begin, threads, [&](std::size_t t) { states[t] = encode(X[begin + t], cfg); });
    return states;
}

void check_uniform(std::span<const FeatureVector> X, std::size_t width, const char* what) {
    for (const auto& x : X) {
        if (x.size() != width) {
            throw ArgumentError(std::string(what) + ": feature vectors of unequal length");
        }
    }
}

// Fills out(i, j) for quantum kinds, tile by tile so that the cached states
// stay inside the memory budget. In symmetric mode only j > i is evaluated.
void fill_quantum(std::span<const FeatureVector> rows, std::span<const FeatureVector> cols, bool symmetric,
                  const KernelSpec& spec, const FeatureMapConfig& cfg, const GramOptions& options,
                  std::uint64_t seed, Eigen::MatrixXd& out) {
    const bool sampled = spec.kind == KernelKind::QuantumSampled;
    const std::size_t state_bytes = sizeof(Amplitude) << cfg.n_qubits;
    const std::size_t budget_states = std::max<std::size_t>(2, options.state_memory_bytes / state_bytes);
    const std::size_t tile = std::max<std::size_t>(1, budget_states / 2);

    std::vector<std::vector<Gate>> row_circuits;
    if (sampled) {
        row_circuits.resize(rows.size());
        parallel_for(rows.size(), options.threads,
                     [&](std::size_t i) { row_circuits[i] = build_circuit(rows[i], cfg); });
    }

    for (std::size_t r0 = 0; r0 < rows.size(); r0 += tile) {
        const std::size_t r1 = std::min(rows.size(), r0 + tile);
        for (std::size_t c0 = symmetric ? r0 : 0; c0 < cols.size(); c0 += tile) {
            const std::size_t c1 = std::min(cols.size(), c0 + tile);
            const auto col_states = encode_range(cols, c0, c1, cfg, options.threads);
            std::vector<StateVector> own_row_states;
            const std::vector<StateVector>* row_states = &col_states;
            if (!sampled && !(symmetric && r0 == c0)) {
                own_row_states = encode_range(rows, r0, r1, cfg, options.threads);
                row_states = &own_row_states;
            }

            auto fill_row = [&](std::size_t i) {
                const std::size_t j_begin = symmetric ? std::max(c0, i + 1) : c0;
                for (std::size_t j = j_begin; j < c1; ++j) {
                    const StateVector& col_state = col_states[j - c0];
                    double value;
                    if (sampled) {
                        const double p = sampled_probability(col_state, row_circuits[i]);
                        value = sample_fraction(p, spec.shots, pair_seed(seed, i, j));
                    } else {
                        value = std::norm(inner_product((*row_states)[i - r0], col_state));
                    }
                    out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = value;
                }
            };
            // Rows t and (m-1-t) share a task so triangular tiles stay balanced.
            const std::size_t m = r1 - r0;
            parallel_for((m + 1) / 2, options.threads, [&](std::size_t t) {
                fill_row(r0 + t);
                if (m - 1 - t != t) {
                    fill_row(r0 + m - 1 - t);
                }
            });
        }
    }
}

}  // namespace

double kernel_exact(const FeatureVector& xi, const FeatureVector& xj, const FeatureMapConfig& cfg) {
    check_same_length(xi, xj);
    return std::norm(inner_product(encode(xi, cfg), encode(xj, cfg)));
}

double kernel_sampled(const FeatureVector& xi, const FeatureVector& xj, const FeatureMapConfig& cfg,
                      int shots, std::uint64_t seed) {
    check_same_length(xi, xj);
    if (shots < 1) {
        throw ArgumentError("shots must be >= 1");
    }
    const double p = sampled_probability(encode(xj, cfg), build_circuit(xi, cfg));
    return sample_fraction(p, shots, seed);
}

double kernel_classical(std::span<const double> a, std::span<const double> b, const KernelSpec& spec) {
    if (a.size() != b.size()) {
        throw ArgumentError("feature vectors of different lengths");
    }
    switch (spec.kind) {
        case KernelKind::Linear:
        case KernelKind::Polynomial: {
            double dot = 0.0;
            for (std::size_t k = 0; k < a.size(); ++k) {
                dot += a[k] * b[k];
            }
            return spec.kind == KernelKind::Linear ? dot : std::pow(spec.gamma * dot, spec.degree);
        }
        case KernelKind::Rbf: {
            double dist2 = 0.0;
            for (std::size_t k = 0; k < a.size(); ++k) {
                const double diff = a[k] - b[k];
                dist2 += diff * diff;
            }
            return std::exp(-spec.gamma * dist2);
        }
        default:
            throw ArgumentError("kernel_classical called with quantum kind " +
                                std::string(to_string(spec.kind)));
    }
}

std::uint64_t pair_seed(std::uint64_t seed, std::uint64_t i, std::uint64_t j) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ i);
    return splitmix64(h ^ (j * 0xd1b54a32d192ed03ULL));
}

GramMatrix gram_matrix(std::span<const FeatureVector> X, const KernelSpec& spec, const FeatureMapConfig& cfg,
                       const GramOptions& options) {
    spec.validate();
    if (X.empty()) {
        throw ArgumentError("gram_matrix: empty sample");
    }
    check_uniform(X, X.front().size(), "gram_matrix");
    const auto n = static_cast<Eigen::Index>(X.size());
    GramMatrix gram(n, n);

    if (is_quantum(spec.kind)) {
        cfg.validate();
        if (X.front().size() != static_cast<std::size_t>(cfg.n_qubits)) {
            throw ArgumentError("gram_matrix: feature length does not match qubit count");
        }
        fill_quantum(X, X, true, spec, cfg, options, spec.seed, gram);
        for (Eigen::Index i = 0; i < n; ++i) {
            gram(i, i) = 1.0;
        }
    } else {
        parallel_for(X.size(), options.threads, [&](std::size_t i) {
            for (std::size_t j = i; j < X.size(); ++j) {
                gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    kernel_classical(X[i].values(), X[j].values(), spec);
            }
        });
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            gram(j, i) = gram(i, j);
        }
    }
    return gram;
}

Eigen::MatrixXd gram_cross(std::span<const FeatureVector> test, std::span<const FeatureVector> train,
                           const KernelSpec& spec, const FeatureMapConfig& cfg, const GramOptions& options) {
    spec.validate();
    if (test.empty() || train.empty()) {
        throw ArgumentError("gram_cross: empty sample");
    }
    const std::size_t width = train.front().size();
    check_uniform(test, width, "gram_cross");
    check_uniform(train, width, "gram_cross");

    Eigen::MatrixXd out(static_cast<Eigen::Index>(test.size()), static_cast<Eigen::Index>(train.size()));
    if (is_quantum(spec.kind)) {
        cfg.validate();
        if (width != static_cast<std::size_t>(cfg.n_qubits)) {
            throw ArgumentError("gram_cross: feature length does not match qubit count");
        }
        fill_quantum(test, train, false, spec, cfg, options, spec.seed ^ kCrossSeedDomain, out);
    } else {
        parallel_for(test.size(), options.threads, [&](std::size_t i) {
            for (std::size_t j = 0; j < train.size(); ++j) {
                out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    kernel_classical(test[i].values(), train[j].values(), spec);
            }
        });
    }
    return out;
}

}  // namespace qkernel
