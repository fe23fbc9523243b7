#include "qkernel/gram_cache.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "qkernel/errors.hpp"

namespace qkernel {

namespace {

constexpr std::array<char, 8> kMagic = {'Q', 'K', 'G', 'R', 'A', 'M', '0', '1'};

static_assert(std::endian::native == std::endian::little, "binary Gram format assumes little-endian");

class Fnv1a {
public:
    void bytes(const void* data, std::size_t size) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < size; ++i) {
            hash_ ^= p[i];
            hash_ *= 0x100000001b3ULL;
        }
    }
    void u64(std::uint64_t v) { bytes(&v, sizeof v); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    std::uint64_t value() const { return hash_; }

private:
    std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

void hash_sample(Fnv1a& h, std::span<const FeatureVector> X) {
    h.u64(X.size());
    for (const auto& x : X) {
        h.u64(x.size());
        for (double v : x.values()) {
            h.f64(v);
        }
    }
}

void write_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint64_t read_u64(std::istream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

}  // namespace

std::uint64_t gram_cache_key(std::span<const FeatureVector> rows, std::span<const FeatureVector> cols,
                             const KernelSpec& spec, const FeatureMapConfig& cfg) {
    Fnv1a h;
    hash_sample(h, rows);
    hash_sample(h, cols);
    h.u64(static_cast<std::uint64_t>(spec.kind));
    h.u64(static_cast<std::uint64_t>(spec.shots));
    h.f64(spec.gamma);
    h.u64(static_cast<std::uint64_t>(spec.degree));
    h.u64(spec.seed);
    h.u64(static_cast<std::uint64_t>(cfg.n_qubits));
    h.u64(static_cast<std::uint64_t>(cfg.d));
    h.u64(static_cast<std::uint64_t>(cfg.n_layers));
    return h.value();
}

void write_gram_binary(const std::filesystem::path& path, const Eigen::MatrixXd& matrix, std::uint64_t key) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    os.write(kMagic.data(), kMagic.size());
    write_u64(os, key);
    write_u64(os, static_cast<std::uint64_t>(matrix.rows()));
    write_u64(os, static_cast<std::uint64_t>(matrix.cols()));
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const RowMajor rm = matrix;
    os.write(reinterpret_cast<const char*>(rm.data()),
             static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(rm.size())));
    if (!os) {
        throw IoError("failed writing " + path.string());
    }
}

StoredGram read_gram_binary(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw IoError("cannot open " + path.string());
    }
    std::array<char, 8> magic{};
    is.read(magic.data(), magic.size());
    if (!is || magic != kMagic) {
        throw ParseError(path.string() + ": not a Gram matrix file");
    }
    StoredGram out;
    out.key = read_u64(is);
    const std::uint64_t rows = read_u64(is);
    const std::uint64_t cols = read_u64(is);
    if (!is || rows > (1ULL << 32) || cols > (1ULL << 32)) {
        throw ParseError(path.string() + ": corrupt header");
    }
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(
        static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    is.read(reinterpret_cast<char*>(rm.data()),
            static_cast<std::streamsize>(sizeof(double) * rows * cols));
    if (!is) {
        throw ParseError(path.string() + ": truncated matrix payload");
    }
    out.matrix = rm;
    return out;
}

void write_gram_csv(const std::filesystem::path& path, const Eigen::MatrixXd& matrix) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
        for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
            if (j) {
                os << ',';
            }
            os << matrix(i, j);
        }
        os << '\n';
    }
}

GramCache::GramCache(std::filesystem::path directory) : dir_(std::move(directory)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) {
        throw IoError("cannot create cache directory " + dir_.string() + ": " + ec.message());
    }
}

std::filesystem::path GramCache::path_for(std::uint64_t key) const {
    std::ostringstream name;
    name << "gram_" << std::hex << std::setw(16) << std::setfill('0') << key << ".bin";
    return dir_ / name.str();
}

std::optional<Eigen::MatrixXd> GramCache::load(std::uint64_t key) const {
    const auto path = path_for(key);
    if (!std::filesystem::exists(path)) {
        return std::nullopt;
    }
    auto stored = read_gram_binary(path);
    if (stored.key != key) {
        return std::nullopt;
    }
    return std::move(stored.matrix);
}

void GramCache::store(std::uint64_t key, const Eigen::MatrixXd& matrix) const {
    // Write then rename so a concurrent reader never sees a partial file.
    auto final_path = path_for(key);
    auto tmp = final_path;
    tmp += ".tmp";
    write_gram_binary(tmp, matrix, key);
    std::filesystem::rename(tmp, final_path);
}

}  // namespace qkernel
