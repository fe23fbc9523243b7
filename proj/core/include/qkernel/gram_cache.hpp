#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>

#include "qkernel/kernel.hpp"

namespace qkernel {

/// 64-bit cache key over everything that determines a kernel matrix: the row
/// and column samples (bit patterns of every feature), the kernel spec
/// including its seed, and the feature-map configuration. Stable across
/// platforms with the same double representation.
std::uint64_t gram_cache_key(std::span<const FeatureVector> rows, std::span<const FeatureVector> cols,
                             const KernelSpec& spec, const FeatureMapConfig& cfg);

/// Binary matrix file, little-endian:
///   8 bytes  magic "QKGRAM01"
///   8 bytes  cache key (uint64)
///   8 bytes  rows (uint64)
///   8 bytes  cols (uint64)
///   rows*cols IEEE-754 doubles, row-major
void write_gram_binary(const std::filesystem::path& path, const Eigen::MatrixXd& matrix, std::uint64_t key);

struct StoredGram {
    std::uint64_t key;
    Eigen::MatrixXd matrix;
};

/// Throws IoError on a missing file and ParseError on a malformed one.
StoredGram read_gram_binary(const std::filesystem::path& path);

/// Plain CSV, one matrix row per line, 17 significant digits, no header.
void write_gram_csv(const std::filesystem::path& path, const Eigen::MatrixXd& matrix);

/// Directory of binary matrices named gram_<key as 16 hex digits>.bin.
class GramCache {
public:
    explicit GramCache(std::filesystem::path directory);

    const std::filesystem::path& directory() const noexcept { return dir_; }
    std::filesystem::path path_for(std::uint64_t key) const;

    /// The stored matrix for `key`, or nullopt if absent. A file whose header
    /// key disagrees with its name is treated as absent.
    std::optional<Eigen::MatrixXd> load(std::uint64_t key) const;
    void store(std::uint64_t key, const Eigen::MatrixXd& matrix) const;

private:
    std::filesystem::path dir_;
};

}  // namespace qkernel
