#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "qkernel/featuremap.hpp"

namespace qkernel {

enum class KernelKind { QuantumExact, QuantumSampled, Linear, Polynomial, Rbf };

/// "quantum-exact", "quantum-sampled", "linear", "polynomial", "rbf".
std::string_view to_string(KernelKind kind);
/// Inverse of to_string. Throws ConfigError on an unknown name.
KernelKind parse_kernel_kind(std::string_view name);

inline bool is_quantum(KernelKind kind) {
    return kind == KernelKind::QuantumExact || kind == KernelKind::QuantumSampled;
}

struct KernelSpec {
    KernelKind kind = KernelKind::QuantumExact;
    int shots = 8192;    ///< quantum-sampled only
    double gamma = 1.0;  ///< polynomial and rbf
    int degree = 3;      ///< polynomial
    std::uint64_t seed = 0;

    /// Throws ConfigError on shots < 1 (sampled), gamma <= 0 or degree < 1.
    void validate() const;
};

/// Kernel matrices are plain dense matrices. A Gram matrix built by
/// gram_matrix() is exactly symmetric and has a unit diagonal for the quantum
/// and rbf kinds.
using GramMatrix = Eigen::MatrixXd;

/// |<Phi(xi)|Phi(xj)>|^2.
double kernel_exact(const FeatureVector& xi, const FeatureVector& xj, const FeatureMapConfig& cfg);

/// Simulated measurement of the kernel circuit: builds
/// U^dagger(xi) U(xj) |0...0>, takes p = |amplitude 0|^2 and returns
/// Binomial(shots, p) / shots drawn from a generator seeded with `seed`.
double kernel_sampled(const FeatureVector& xi, const FeatureVector& xj, const FeatureMapConfig& cfg,
                      int shots, std::uint64_t seed);

/// linear: a.b   polynomial: (gamma a.b)^degree   rbf: exp(-gamma |a-b|^2)
double kernel_classical(std::span<const double> a, std::span<const double> b, const KernelSpec& spec);

/// Seed for the (i, j) entry of a sampled kernel matrix.
std::uint64_t pair_seed(std::uint64_t seed, std::uint64_t i, std::uint64_t j);

struct GramOptions {
    int threads = 0;  ///< 0 = one per hardware thread
    /// Upper bound on memory spent caching encoded states. Larger inputs are
    /// processed tile by tile, re-encoding states per tile.
    std::size_t state_memory_bytes = std::size_t{2} << 30;
};

/// Symmetric kernel matrix over X. The upper triangle is evaluated once per
/// unordered pair and mirrored; quantum diagonals are set to exactly 1.
/// Sampled entries use pair_seed(spec.seed, i, j), so the result does not
/// depend on the thread count.
GramMatrix gram_matrix(std::span<const FeatureVector> X, const KernelSpec& spec,
                       const FeatureMapConfig& cfg, const GramOptions& options = {});

/// Rectangular matrix K[i][j] = k(test[i], train[j]).
Eigen::MatrixXd gram_cross(std::span<const FeatureVector> test, std::span<const FeatureVector> train,
                           const KernelSpec& spec, const FeatureMapConfig& cfg,
                           const GramOptions& options = {});

}  // namespace qkernel
