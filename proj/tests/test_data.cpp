#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "qkernel/data.hpp"
#include "qkernel/errors.hpp"
#include "qkernel/eval.hpp"
#include "qkernel/kernel.hpp"
#include "qkernel/svm.hpp"
#include "support/generators.hpp"

using namespace qkernel;
namespace fs = std::filesystem;

namespace {

fs::path write_file(const std::string& name, const std::string& text) {
    const fs::path p = fs::temp_directory_path() / ("qkernel_test_" + name);
    std::ofstream(p) << text;
    return p;
}

std::string error_text(const std::function<void()>& f) {
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return {};
}

Eigen::MatrixXd gaussian_cloud(gen::Rng& rng, int n, int m) {
    std::normal_distribution<double> normal;
    Eigen::MatrixXd X(n, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) X(i, j) = normal(rng);
    return X;
}

std::vector<int> labels_of(const Dataset& d, const std::vector<std::size_t>& idx) {
    std::vector<int> y;
    for (std::size_t i : idx) y.push_back(d.labels[i]);
    return y;
}

}  // namespace

TEST_CASE("load_csv") {
    SUBCASE("basic file") {
        const auto p = write_file("basic.csv", "a,b,label\n1.5,2,0\n-3,4e-1,1\n0,0,1\n");
        const Dataset d = load_csv(p);
        CHECK(d.size() == 3);
        CHECK(d.width() == 2);
        CHECK(d.labels == std::vector<int>{0, 1, 1});
        CHECK(d.features(1, 0) == -3.0);
        CHECK(d.features(1, 1) == 0.4);
        CHECK(d.feature_names == std::vector<std::string>{"a", "b"});
    }
    SUBCASE("label column anywhere, custom name, float labels") {
        const auto p = write_file("custom.csv", "cls,x\n1.0,0.5\n0.0,0.25\n");
        const Dataset d = load_csv(p, {.label_column = "cls"});
        CHECK(d.labels == std::vector<int>{1, 0});
        CHECK(d.width() == 1);
        CHECK(d.features(1, 0) == 0.25);
    }
    SUBCASE("NaN cell names row and column") {
        const auto p = write_file("nan.csv", "a,b,label\n1,2,0\n3,NaN,1\n");
        const std::string msg = error_text([&] { load_csv(p); });
        CHECK_THROWS_AS(load_csv(p), ParseError);
        CHECK(msg.find("row 2") != std::string::npos);
        CHECK(msg.find("'b'") != std::string::npos);
    }
    SUBCASE("non-numeric cell") {
        CHECK_THROWS_AS(load_csv(write_file("text.csv", "a,label\nabc,1\n")), ParseError);
    }
    SUBCASE("schema errors") {
        CHECK_THROWS_AS(load_csv(write_file("empty.csv", "")), SchemaError);
        CHECK_THROWS_AS(load_csv(write_file("nolabel.csv", "a,b\n1,2\n")), SchemaError);
        CHECK_THROWS_AS(load_csv(write_file("badlabel.csv", "a,label\n1,2\n")), SchemaError);
        CHECK_THROWS_AS(load_csv(write_file("ragged.csv", "a,b,label\n1,0\n")), SchemaError);
        CHECK_THROWS_AS(load_csv(write_file("onlylabel.csv", "label\n1\n")), SchemaError);
        CHECK_THROWS_AS(load_csv(write_file("header.csv", "a,label\n")), SchemaError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_csv(fs::temp_directory_path() / "qkernel_no_such.csv"), IoError);
    }
    SUBCASE("write then read") {
        gen::Rng rng(61);
        const Dataset d = generate_synthetic(20, 3, 1.0, 5);
        const auto p = fs::temp_directory_path() / "qkernel_test_roundtrip.csv";
        write_csv(p, d);
        const Dataset back = load_csv(p);
        CHECK(back.labels == d.labels);
        CHECK(back.features == d.features);
    }
}

TEST_CASE("pca") {
    SUBCASE("points on a line") {
        Eigen::MatrixXd X(5, 2);
        for (int i = 0; i < 5; ++i) X.row(i) << 2.0 * i - 1.0, -(i * 1.0) + 3.0;
        const PcaModel m = pca_fit(X, 1);
        const double total = ((X.rowwise() - X.colwise().mean()).squaredNorm()) / 4.0;
        CHECK(std::abs(m.explained_variance(0) - total) < 1e-10);
        const Eigen::Vector2d dir = Eigen::Vector2d(2.0, -1.0).normalized();
        CHECK(std::abs(std::abs(m.components.row(0).dot(dir)) - 1.0) < 1e-10);
        // sign convention: largest-magnitude coordinate positive
        CHECK(m.components(0, 0) > 0.0);
    }
    SUBCASE("isotropic cloud") {
        gen::Rng rng(62);
        const Eigen::MatrixXd X = gaussian_cloud(rng, 10000, 2);
        const PcaModel m = pca_fit(X, 2);
        CHECK(std::abs(m.explained_variance(0) / m.explained_variance(1) - 1.0) < 0.05);
    }
    SUBCASE("full rank change of basis") {
        gen::Rng rng(63);
        const Eigen::MatrixXd X = gaussian_cloud(rng, 30, 4);
        const PcaModel m = pca_fit(X, 4);
        const Eigen::MatrixXd Z = pca_transform(m, X);
        for (int i = 0; i < 30; ++i)
            for (int j = 0; j < 30; ++j)
                CHECK(std::abs((Z.row(i) - Z.row(j)).norm() - (X.row(i) - X.row(j)).norm()) < 1e-8);
        CHECK((m.components * m.components.transpose() - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);
        for (int k = 1; k < 4; ++k) CHECK(m.explained_variance(k) <= m.explained_variance(k - 1));
    }
    SUBCASE("transform examples") {
        gen::Rng rng(64);
        const Eigen::MatrixXd X = gaussian_cloud(rng, 50, 5);
        const PcaModel m = pca_fit(X, 3);
        const Eigen::MatrixXd mean_row = m.mean.transpose();
        CHECK(pca_transform(m, mean_row).cwiseAbs().maxCoeff() < 1e-12);

        const Eigen::MatrixXd shifted = mean_row + m.components.row(0);
        const Eigen::MatrixXd z = pca_transform(m, shifted);
        CHECK(std::abs(z(0, 0) - 1.0) < 1e-10);
        CHECK(std::abs(z(0, 1)) < 1e-10);
        CHECK(std::abs(z(0, 2)) < 1e-10);

        // rank-3 data is reproduced from its 3 coordinates
        const Eigen::MatrixXd low = gaussian_cloud(rng, 40, 3) * gaussian_cloud(rng, 3, 5);
        const PcaModel r = pca_fit(low, 3);
        CHECK((pca_inverse_transform(r, pca_transform(r, low)) - low).cwiseAbs().maxCoeff() < 1e-8);

        CHECK_THROWS_AS(pca_transform(m, Eigen::MatrixXd::Zero(2, 4)), ArgumentError);
    }
    SUBCASE("errors") {
        gen::Rng rng(65);
        const Eigen::MatrixXd X = gaussian_cloud(rng, 10, 3);
        CHECK_THROWS_AS(pca_fit(X, 4), ArgumentError);
        CHECK_THROWS_AS(pca_fit(X, 0), ArgumentError);
        CHECK_THROWS_AS(pca_fit(X.topRows(1), 1), ArgumentError);
        CHECK_THROWS_AS(pca_fit(Eigen::MatrixXd::Constant(10, 3, 2.5), 2), DegenerateDataError);
    }
}

TEST_CASE("rescale") {
    Eigen::MatrixXd train(3, 1);
    train << 0, 10, 4;
    const RescaleModel m = rescale_fit(train);
    Eigen::MatrixXd probe(5, 1);
    probe << 5, 0, 10, 12, -3;
    const Eigen::MatrixXd out = rescale_apply(m, probe);
    CHECK(out(0, 0) == 0.0);
    CHECK(out(1, 0) == -1.0);
    CHECK(out(2, 0) == 1.0);
    CHECK(out(3, 0) == 1.0);
    CHECK(out(4, 0) == -1.0);

    gen::Rng rng(66);
    for (int trial = 0; trial < 200; ++trial) {
        const double lo = gen::uniform(rng, -1e3, 1e3);
        const double hi = lo + gen::uniform(rng, 1e-3, 1e3);
        const double mid = lo + (hi - lo) / 2;
        if ((static_cast<long double>(lo) + hi) / 2 != mid) continue;  // midpoint not representable
        Eigen::MatrixXd col(2, 1);
        col << lo, hi;
        const RescaleModel r = rescale_fit(col);
        Eigen::MatrixXd q(3, 1);
        q << lo, hi, mid;
        const Eigen::MatrixXd z = rescale_apply(r, q);
        CHECK(z(0, 0) == -1.0);
        CHECK(z(1, 0) == 1.0);
        CHECK(std::abs(z(2, 0)) <= 1e-15);
    }

    CHECK_THROWS_AS(rescale_fit(Eigen::MatrixXd::Constant(4, 1, 3.0)), DegenerateDataError);
    CHECK_THROWS_AS(rescale_apply(m, Eigen::MatrixXd::Zero(2, 2)), ArgumentError);
}

TEST_CASE("synthetic generator") {
    const Dataset a = generate_synthetic(200, 23, 2.0, 9);
    const Dataset b = generate_synthetic(200, 23, 2.0, 9);
    CHECK(a.features == b.features);
    CHECK(a.labels == b.labels);
    CHECK(std::count(a.labels.begin(), a.labels.end(), 1) == 100);
    CHECK(a.width() == 23);
    CHECK(generate_synthetic(200, 23, 2.0, 10).features != a.features);

    // class-mean distance close to the requested separation
    const Dataset big = generate_synthetic(20000, 5, 3.0, 2);
    Eigen::VectorXd m0 = Eigen::VectorXd::Zero(5), m1 = Eigen::VectorXd::Zero(5);
    for (std::size_t i = 0; i < big.size(); ++i) {
        (big.labels[i] ? m1 : m0) += big.features.row(static_cast<Eigen::Index>(i)).transpose();
    }
    CHECK(std::abs(((m1 - m0) / 10000.0).norm() - 3.0) < 0.1);

    CHECK_THROWS_AS(generate_synthetic(201, 3, 1.0, 1), ArgumentError);
    CHECK_THROWS_AS(generate_synthetic(0, 3, 1.0, 1), ArgumentError);
    CHECK_THROWS_AS(generate_synthetic(10, 0, 1.0, 1), ArgumentError);
    CHECK_THROWS_AS(generate_synthetic(10, 3, -1.0, 1), ArgumentError);
}

TEST_CASE("synthetic separation controls difficulty") {
    SUBCASE("no separation: chance level") {
        // Fisher-style direction from the first half, scored on the second.
        const Dataset d = generate_synthetic(2000, 23, 0.0, 3);
        Eigen::VectorXd m0 = Eigen::VectorXd::Zero(23), m1 = Eigen::VectorXd::Zero(23);
        for (int i = 0; i < 1000; ++i) (d.labels[static_cast<std::size_t>(i)] ? m1 : m0) += d.features.row(i).transpose();
        const Eigen::VectorXd w = m1 - m0;
        std::vector<double> scores;
        std::vector<int> y;
        for (int i = 1000; i < 2000; ++i) {
            scores.push_back(d.features.row(i).dot(w));
            y.push_back(d.labels[static_cast<std::size_t>(i)]);
        }
        CHECK(std::abs(auc(scores, y) - 0.5) <= 0.05);
    }
    SUBCASE("wide separation: rbf SVM nearly perfect") {
        const Dataset d = generate_synthetic(200, 23, 10.0, 4);
        const auto splits = split_datasets(d, 1, 100, 11);
        const Dataset train_set = d.subset(splits[0].train);
        const Dataset test_set = d.subset(splits[0].test);
        const Preprocessor prep = Preprocessor::fit(train_set.features, 8);
        const auto Xtr = prep.apply(train_set.features);
        const auto Xte = prep.apply(test_set.features);
        KernelSpec rbf;
        rbf.kind = KernelKind::Rbf;
        rbf.gamma = 1.0;
        const SvmModel m = train(gram_matrix(Xtr, rbf, {8, 3, 2}), train_set.labels, 1.0);
        const auto scores = decision_scores(m, gram_cross(Xte, Xtr, rbf, {8, 3, 2}));
        CHECK(auc(scores, test_set.labels) >= 0.99);
    }
}

TEST_CASE("split_datasets") {
    const Dataset pool = generate_synthetic(400, 3, 1.0, 1);
    SUBCASE("disjoint draws use distinct events") {
        const auto splits = split_datasets(pool, 2, 100, 3);
        REQUIRE(splits.size() == 2);
        std::set<std::size_t> seen;
        for (const auto& s : splits) {
            CHECK(s.train.size() == 100);
            CHECK(s.test.size() == 100);
            seen.insert(s.train.begin(), s.train.end());
            seen.insert(s.test.begin(), s.test.end());
        }
        CHECK(seen.size() == 400);
    }
    SUBCASE("insufficient pool") {
        const Dataset small = generate_synthetic(300, 3, 1.0, 1);
        CHECK_THROWS_AS(split_datasets(small, 2, 100, 3), ArgumentError);
        CHECK_NOTHROW(split_datasets(small, 2, 100, 3, SamplingMode::Resample));
        CHECK_THROWS_AS(split_datasets(small, 1, 200, 3, SamplingMode::Resample), ArgumentError);
    }
    SUBCASE("stratification follows the pool balance") {
        // 30% signal pool
        Dataset skewed;
        skewed.features = Eigen::MatrixXd::Zero(1000, 2);
        for (int i = 0; i < 1000; ++i) {
            skewed.features(i, 0) = i;
            skewed.labels.push_back(i % 10 < 3 ? 1 : 0);
        }
        for (const auto& s : split_datasets(skewed, 3, 77, 5)) {
            for (const auto* idx : {&s.train, &s.test}) {
                const auto y = labels_of(skewed, *idx);
                const double sig = static_cast<double>(std::count(y.begin(), y.end(), 1));
                CHECK(std::abs(sig - 0.3 * 77) <= 1.0);
            }
        }
    }
    SUBCASE("resample keeps train and test apart") {
        for (const auto& s : split_datasets(pool, 5, 150, 8, SamplingMode::Resample)) {
            std::set<std::size_t> tr(s.train.begin(), s.train.end());
            for (std::size_t i : s.test) CHECK(tr.count(i) == 0);
            CHECK(tr.size() == 150);
        }
    }
    SUBCASE("seeded") {
        const auto a = split_datasets(pool, 2, 50, 42);
        const auto b = split_datasets(pool, 2, 50, 42);
        CHECK(a[1].train == b[1].train);
        CHECK(a[1].test == b[1].test);
        CHECK(split_datasets(pool, 2, 50, 43)[0].train != a[0].train);
    }
}

TEST_CASE("preprocessing is fitted on training rows only") {
    const Dataset d = generate_synthetic(300, 10, 1.5, 6);
    const auto s = split_datasets(d, 1, 100, 2)[0];
    const Dataset tr = d.subset(s.train);
    const Dataset te = d.subset(s.test);
    const Preprocessor prep = Preprocessor::fit(tr.features, 4);

    Eigen::MatrixXd both(tr.features.rows() + te.features.rows(), tr.features.cols());
    both << tr.features, te.features;
    const Preprocessor leaked = Preprocessor::fit(both, 4);
    CHECK(prep.pca.mean != leaked.pca.mean);
    CHECK(prep.rescale.min != leaked.rescale.min);

    // refitting on the training rows alone reproduces the same models
    const Preprocessor again = Preprocessor::fit(tr.features, 4);
    CHECK(prep.pca.components == again.pca.components);
    CHECK(prep.rescale.max == again.rescale.max);

    for (const auto& x : prep.apply(te.features)) {
        CHECK(x.size() == 4);
        for (double v : x.values()) {
            CHECK(v >= -1.0);
            CHECK(v <= 1.0);
        }
    }
}
