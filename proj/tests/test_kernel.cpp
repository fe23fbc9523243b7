#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <Eigen/Eigenvalues>

#include "oracles/matrix_circuit.hpp"
#include "qkernel/errors.hpp"
#include "qkernel/gram_cache.hpp"
#include "qkernel/kernel.hpp"
#include "support/generators.hpp"

using namespace qkernel;
namespace fs = std::filesystem;

namespace {

KernelSpec spec_of(KernelKind kind) {
    KernelSpec s;
    s.kind = kind;
    return s;
}

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("qkernel_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

double mean_abs_deviation(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).cwiseAbs().mean();
}

}  // namespace

TEST_CASE("kind names round-trip") {
    for (auto kind : {KernelKind::QuantumExact, KernelKind::QuantumSampled, KernelKind::Linear,
                      KernelKind::Polynomial, KernelKind::Rbf}) {
        CHECK(parse_kernel_kind(to_string(kind)) == kind);
    }
    CHECK_THROWS_AS(parse_kernel_kind("sigmoid"), ConfigError);
}

TEST_CASE("spec validation") {
    KernelSpec s = spec_of(KernelKind::QuantumSampled);
    s.shots = 0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = spec_of(KernelKind::Rbf);
    s.gamma = 0.0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = spec_of(KernelKind::Polynomial);
    s.degree = 0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("exact kernel") {
    gen::Rng rng(31);
    const FeatureMapConfig cfg{5, 3, 2};
    for (int trial = 0; trial < 30; ++trial) {
        const auto a = gen::random_feature_vector(rng, 5);
        const auto b = gen::random_feature_vector(rng, 5);
        CHECK(std::abs(kernel_exact(a, a, cfg) - 1.0) < 1e-12);
        const double ab = kernel_exact(a, b, cfg);
        CHECK(std::abs(ab - kernel_exact(b, a, cfg)) < 1e-12);
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0);
    }
    CHECK_THROWS_AS(kernel_exact(FeatureVector({0.1}), FeatureVector({0.1, 0.2}), {2, 3, 2}), ArgumentError);
}

TEST_CASE("exact kernel matches the kernel-circuit oracle at N=3") {
    gen::Rng rng(32);
    for (int trial = 0; trial < 30; ++trial) {
        const auto xi = gen::random_features(rng, 3);
        const auto xj = gen::random_features(rng, 3);
        const double expected = oracle::kernel_circuit_probability(xi, xj, 3, 2);
        CHECK(std::abs(kernel_exact(FeatureVector(xi), FeatureVector(xj), {3, 3, 2}) - expected) < 1e-10);
    }
}

TEST_CASE("sampled kernel") {
    gen::Rng rng(33);
    const FeatureMapConfig cfg{4, 3, 2};
    const auto a = gen::random_feature_vector(rng, 4);
    const auto b = gen::random_feature_vector(rng, 4);

    CHECK(kernel_sampled(a, b, cfg, 8192, 99) == kernel_sampled(a, b, cfg, 8192, 99));
    for (int shots : {1, 7, 8192}) {
        CHECK(kernel_sampled(a, a, cfg, shots, 5) == 1.0);
    }
    const double k = kernel_sampled(a, b, cfg, 100, 3);
    CHECK(k * 100 == std::round(k * 100));
    CHECK_THROWS_AS(kernel_sampled(a, b, cfg, 0, 1), ArgumentError);
}

TEST_CASE("sampled kernel concentrates around the exact value") {
    gen::Rng rng(34);
    const FeatureMapConfig cfg{4, 3, 2};
    int inside = 0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        const auto a = gen::random_feature_vector(rng, 4);
        const auto b = gen::random_feature_vector(rng, 4);
        const double p = kernel_exact(a, b, cfg);
        const double s = kernel_sampled(a, b, cfg, 8192, static_cast<std::uint64_t>(t));
        if (std::abs(s - p) <= 4.0 * std::sqrt(p * (1.0 - p) / 8192.0)) ++inside;
    }
    CHECK(inside >= 990);
}

TEST_CASE("classical kernels") {
    const std::vector<double> x{0.5, -0.25, 1.0};
    KernelSpec rbf = spec_of(KernelKind::Rbf);
    for (double g : {0.01, 1.0, 37.0}) {
        rbf.gamma = g;
        CHECK(kernel_classical(x, x, rbf) == 1.0);
    }
    rbf.gamma = 0.5;
    const std::vector<double> y{0.0, 0.0, 0.0};
    CHECK(kernel_classical(x, y, rbf) == doctest::Approx(std::exp(-0.5 * 1.3125)));

    const std::vector<double> e1{1.0, 0.0};
    const std::vector<double> e2{0.0, 1.0};
    CHECK(kernel_classical(e1, e2, spec_of(KernelKind::Linear)) == 0.0);
    CHECK(kernel_classical(x, x, spec_of(KernelKind::Linear)) == doctest::Approx(1.3125));

    KernelSpec poly = spec_of(KernelKind::Polynomial);
    poly.gamma = 1.0;
    poly.degree = 2;
    for (std::size_t n : {1u, 3u, 8u}) {
        const std::vector<double> ones(n, 1.0);
        CHECK(kernel_classical(ones, ones, poly) == doctest::Approx(static_cast<double>(n * n)));
    }
    poly.gamma = 0.5;
    poly.degree = 3;
    CHECK(kernel_classical(x, x, poly) == doctest::Approx(std::pow(0.5 * 1.3125, 3)));

    CHECK_THROWS_AS(kernel_classical(x, x, spec_of(KernelKind::QuantumExact)), ArgumentError);
    CHECK_THROWS_AS(kernel_classical(x, e1, spec_of(KernelKind::Linear)), ArgumentError);
}

TEST_CASE("gram matrix structure") {
    gen::Rng rng(35);
    for (int n : {4, 8}) {
        const auto X = gen::random_feature_vectors(rng, 50, n);
        const GramMatrix K = gram_matrix(X, spec_of(KernelKind::QuantumExact), {n, 3, 2});
        REQUIRE(K.rows() == 50);
        CHECK(K == K.transpose());
        for (int i = 0; i < 50; ++i) CHECK(K(i, i) == 1.0);
        CHECK(K.minCoeff() >= 0.0);
        CHECK(K.maxCoeff() <= 1.0);
        const double lambda_min = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(K).eigenvalues().minCoeff();
        CHECK(lambda_min >= -1e-9 * 50);
    }

    SUBCASE("size one") {
        const std::vector<FeatureVector> one{FeatureVector({0.3, -0.7})};
        for (auto kind : {KernelKind::QuantumExact, KernelKind::QuantumSampled, KernelKind::Rbf}) {
            const GramMatrix K = gram_matrix(one, spec_of(kind), {2, 3, 2});
            REQUIRE(K.rows() == 1);
            CHECK(K(0, 0) == 1.0);
        }
    }

    SUBCASE("duplicates give equal rows") {
        auto X = gen::random_feature_vectors(rng, 6, 4);
        X.push_back(X[1]);
        X.push_back(X[4]);
        const GramMatrix K = gram_matrix(X, spec_of(KernelKind::QuantumExact), {4, 3, 2});
        CHECK((K.row(1) - K.row(6)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((K.col(4) - K.col(7)).cwiseAbs().maxCoeff() < 1e-12);
    }

    SUBCASE("entries match single kernel calls") {
        const auto Y = gen::random_feature_vectors(rng, 7, 3);
        const GramMatrix K = gram_matrix(Y, spec_of(KernelKind::QuantumExact), {3, 3, 2});
        for (int i = 0; i < 7; ++i) {
            for (int j = i + 1; j < 7; ++j) {
                CHECK(std::abs(K(i, j) - kernel_exact(Y[i], Y[j], {3, 3, 2})) < 1e-14);
            }
        }
    }

    CHECK_THROWS_AS(gram_matrix({}, spec_of(KernelKind::QuantumExact), {2, 3, 2}), ArgumentError);
    const std::vector<FeatureVector> ragged{FeatureVector({0.1, 0.2}), FeatureVector({0.1})};
    CHECK_THROWS_AS(gram_matrix(ragged, spec_of(KernelKind::Linear), {2, 3, 2}), ArgumentError);
}

TEST_CASE("sampled gram") {
    gen::Rng rng(36);
    const auto X = gen::random_feature_vectors(rng, 12, 3);
    KernelSpec spec = spec_of(KernelKind::QuantumSampled);
    spec.shots = 512;
    spec.seed = 77;
    const GramMatrix K = gram_matrix(X, spec, {3, 3, 2});
    CHECK(K == K.transpose());
    for (int i = 0; i < 12; ++i) CHECK(K(i, i) == 1.0);
    for (int i = 0; i < 12; ++i) {
        for (int j = i + 1; j < 12; ++j) {
            CHECK(K(i, j) == kernel_sampled(X[i], X[j], {3, 3, 2}, 512, pair_seed(77, i, j)));
        }
    }
    // thread count must not change anything
    CHECK(gram_matrix(X, spec, {3, 3, 2}, {.threads = 1}) == gram_matrix(X, spec, {3, 3, 2}, {.threads = 5}));
    spec.seed = 78;
    CHECK(gram_matrix(X, spec, {3, 3, 2}) != K);
}

TEST_CASE("sampled gram deviation shrinks like 1/sqrt(shots)") {
    gen::Rng rng(37);
    const auto X = gen::random_feature_vectors(rng, 20, 4);
    const FeatureMapConfig cfg{4, 3, 2};
    const GramMatrix exact = gram_matrix(X, spec_of(KernelKind::QuantumExact), cfg);
    KernelSpec spec = spec_of(KernelKind::QuantumSampled);
    spec.seed = 5;
    spec.shots = 1024;
    const double dev_lo = mean_abs_deviation(gram_matrix(X, spec, cfg), exact);
    spec.shots = 4096;
    const double dev_hi = mean_abs_deviation(gram_matrix(X, spec, cfg), exact);
    const double ratio = dev_lo / dev_hi;
    CHECK(ratio >= 2.0 / 1.5);
    CHECK(ratio <= 2.0 * 1.5);
}

TEST_CASE("gram is reproducible and independent of threads and tiling") {
    gen::Rng rng(38);
    const auto X = gen::random_feature_vectors(rng, 30, 5);
    const FeatureMapConfig cfg{5, 3, 2};
    const KernelSpec spec = spec_of(KernelKind::QuantumExact);
    const GramMatrix base = gram_matrix(X, spec, cfg, {.threads = 1});
    CHECK(gram_matrix(X, spec, cfg, {.threads = 1}) == base);
    CHECK(gram_matrix(X, spec, cfg, {.threads = 3}) == base);
    // room for only a handful of states forces many tiles
    GramOptions tiny;
    tiny.threads = 2;
    tiny.state_memory_bytes = 4 * 32 * sizeof(Amplitude);
    CHECK(gram_matrix(X, spec, cfg, tiny) == base);
}

TEST_CASE("cross gram") {
    gen::Rng rng(39);
    const FeatureMapConfig cfg{3, 3, 2};
    const KernelSpec spec = spec_of(KernelKind::QuantumExact);
    const auto train = gen::random_feature_vectors(rng, 5, 3);
    const auto test = gen::random_feature_vectors(rng, 3, 3);

    const Eigen::MatrixXd C = gram_cross(test, train, spec, cfg);
    REQUIRE(C.rows() == 3);
    REQUIRE(C.cols() == 5);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 5; ++j) CHECK(std::abs(C(i, j) - kernel_exact(test[i], train[j], cfg)) < 1e-14);
    }

    const Eigen::MatrixXd same = gram_cross(train, train, spec, cfg);
    CHECK((same - gram_matrix(train, spec, cfg)).cwiseAbs().maxCoeff() < 1e-12);

    const std::vector<FeatureVector> one{train[2]};
    const Eigen::MatrixXd row = gram_cross(one, train, spec, cfg);
    CHECK(std::abs(row(0, 2) - 1.0) < 1e-12);

    KernelSpec lin = spec_of(KernelKind::Linear);
    const Eigen::MatrixXd L = gram_cross(test, train, lin, cfg);
    CHECK(L(1, 3) == doctest::Approx(kernel_classical(test[1].values(), train[3].values(), lin)));

    CHECK_THROWS_AS(gram_cross({}, train, spec, cfg), ArgumentError);
}

TEST_CASE("gram cache") {
    gen::Rng rng(40);
    const auto X = gen::random_feature_vectors(rng, 9, 3);
    const FeatureMapConfig cfg{3, 3, 2};
    KernelSpec spec = spec_of(KernelKind::QuantumSampled);
    spec.seed = 3;
    const GramMatrix K = gram_matrix(X, spec, cfg);
    const std::uint64_t key = gram_cache_key(X, X, spec, cfg);

    SUBCASE("key depends on every input") {
        KernelSpec other = spec;
        other.seed = 4;
        CHECK(gram_cache_key(X, X, other, cfg) != key);
        other = spec;
        other.shots = 100;
        CHECK(gram_cache_key(X, X, other, cfg) != key);
        CHECK(gram_cache_key(X, X, spec, {3, 2, 2}) != key);
        CHECK(gram_cache_key(X, X, spec, {3, 3, 1}) != key);
        auto Y = X;
        Y[4] = FeatureVector({0.0, 0.0, std::nextafter(0.0, 1.0)});
        CHECK(gram_cache_key(Y, Y, spec, cfg) != key);
        CHECK(gram_cache_key(X, X, spec, cfg) == key);
    }

    SUBCASE("binary round trip is bitwise") {
        const fs::path dir = scratch_dir("gram_bin");
        write_gram_binary(dir / "k.bin", K, key);
        const StoredGram back = read_gram_binary(dir / "k.bin");
        CHECK(back.key == key);
        CHECK(back.matrix == K);
        CHECK(fs::file_size(dir / "k.bin") == 32 + 81 * 8);
    }

    SUBCASE("cache directory") {
        const GramCache cache(scratch_dir("gram_cache"));
        CHECK_FALSE(cache.load(key).has_value());
        cache.store(key, K);
        CHECK(cache.path_for(key).filename().string().size() == std::string("gram_0123456789abcdef.bin").size());
        const auto loaded = cache.load(key);
        REQUIRE(loaded.has_value());
        CHECK(*loaded == K);
        // a file whose header disagrees with its name is ignored
        fs::copy_file(cache.path_for(key), cache.path_for(key + 1));
        CHECK_FALSE(cache.load(key + 1).has_value());
    }

    SUBCASE("malformed files") {
        const fs::path dir = scratch_dir("gram_bad");
        CHECK_THROWS_AS(read_gram_binary(dir / "missing.bin"), IoError);
        std::ofstream(dir / "junk.bin") << "not a matrix";
        CHECK_THROWS_AS(read_gram_binary(dir / "junk.bin"), ParseError);
        write_gram_binary(dir / "cut.bin", K, key);
        fs::resize_file(dir / "cut.bin", 100);
        CHECK_THROWS_AS(read_gram_binary(dir / "cut.bin"), ParseError);
    }

    SUBCASE("csv export") {
        const fs::path dir = scratch_dir("gram_csv");
        write_gram_csv(dir / "k.csv", K);
        std::ifstream in(dir / "k.csv");
        std::string line;
        int rows = 0;
        while (std::getline(in, line)) {
            ++rows;
            CHECK(std::count(line.begin(), line.end(), ',') == 8);
        }
        CHECK(rows == 9);
    }
}
