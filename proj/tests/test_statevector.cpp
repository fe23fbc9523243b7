#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles/matrix_circuit.hpp"
#include "qkernel/errors.hpp"
#include "qkernel/statevector.hpp"
#include "support/generators.hpp"

using namespace qkernel;

namespace {

constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

double max_diff(const StateVector& a, const StateVector& b) {
    double worst = 0.0;
    for (std::size_t k = 0; k < a.dimension(); ++k) {
        worst = std::max(worst, std::abs(a[k] - b[k]));
    }
    return worst;
}

oracle::CMatrix gate_matrix(int n, const Gate& g) {
    switch (g.kind) {
        case GateKind::H:
            return oracle::embed(n, g.target, oracle::h_matrix());
        case GateKind::Rz:
            return oracle::embed(n, g.target, oracle::rz_matrix(g.angle));
        case GateKind::Ry:
            return oracle::embed(n, g.target, oracle::ry_matrix(g.angle));
        case GateKind::Cnot:
            return oracle::cnot_matrix(n, g.control, g.target);
    }
    return {};
}

}  // namespace

TEST_CASE("init_state") {
    StateVector one(1);
    CHECK(one.dimension() == 2);
    CHECK(one[0] == Amplitude(1.0));
    CHECK(one[1] == Amplitude(0.0));

    StateVector two(2);
    REQUIRE(two.dimension() == 4);
    CHECK(two[0] == Amplitude(1.0));
    for (std::size_t k = 1; k < 4; ++k) CHECK(two[k] == Amplitude(0.0));

    CHECK_THROWS_AS(StateVector(25), ConfigError);
    CHECK_THROWS_AS(StateVector(0), ConfigError);
    CHECK_NOTHROW(StateVector(kMaxQubits > 20 ? 20 : kMaxQubits));
}

TEST_CASE("hadamard") {
    StateVector s(1);
    s.apply_h(0);
    CHECK(std::abs(s[0] - kInvSqrt2) < 1e-15);
    CHECK(std::abs(s[1] - kInvSqrt2) < 1e-15);

    // qubit 1 is bit 1: index 2 is |qubit1=1, qubit0=0>
    StateVector t(2);
    t.apply_h(1);
    CHECK(std::abs(t[0] - kInvSqrt2) < 1e-15);
    CHECK(std::abs(t[2] - kInvSqrt2) < 1e-15);
    CHECK(t[1] == Amplitude(0.0));
    CHECK(t[3] == Amplitude(0.0));

    gen::Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = gen::uniform_int(rng, 1, 6);
        const StateVector psi = gen::random_state(rng, n);
        StateVector phi = psi;
        const int q = gen::uniform_int(rng, 0, n - 1);
        phi.apply_h(q).apply_h(q);
        CHECK(max_diff(phi, psi) < 1e-12);
    }

    CHECK_THROWS_AS(StateVector(2).apply_h(2), ArgumentError);
    CHECK_THROWS_AS(StateVector(2).apply_h(-1), ArgumentError);
}

TEST_CASE("rz") {
    gen::Rng rng(12);
    const StateVector psi = gen::random_state(rng, 3);
    StateVector same = psi;
    same.apply_rz(1, 0.0);
    CHECK(same == psi);

    StateVector zero(1);
    zero.apply_rz(0, 1.234);
    CHECK(std::norm(zero[0]) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::norm(zero[1]) == 0.0);

    StateVector back = psi;
    back.apply_rz(2, std::numbers::pi).apply_rz(2, -std::numbers::pi);
    CHECK(max_diff(back, psi) < 1e-12);

    CHECK_THROWS_AS(StateVector(2).apply_rz(3, 0.1), ArgumentError);
    CHECK_THROWS_AS(StateVector(2).apply_rz(0, std::nan("")), ArgumentError);
    CHECK_THROWS_AS(StateVector(2).apply_rz(0, INFINITY), ArgumentError);
}

TEST_CASE("ry") {
    StateVector flip(1);
    flip.apply_ry(0, std::numbers::pi);
    CHECK(std::abs(flip[0]) < 1e-12);
    CHECK(std::abs(flip[1] - 1.0) < 1e-12);

    StateVector half(1);
    half.apply_ry(0, std::numbers::pi / 2);
    CHECK(std::abs(half[0] - std::cos(std::numbers::pi / 4)) < 1e-15);
    CHECK(std::abs(half[1] - std::sin(std::numbers::pi / 4)) < 1e-15);

    gen::Rng rng(13);
    const StateVector psi = gen::random_state(rng, 2);
    StateVector same = psi;
    same.apply_ry(0, 0.0);
    CHECK(same == psi);

    CHECK_THROWS_AS(StateVector(1).apply_ry(1, 0.1), ArgumentError);
    CHECK_THROWS_AS(StateVector(1).apply_ry(0, -INFINITY), ArgumentError);
}

TEST_CASE("cnot") {
    // |10> in the ket order (qubit 0, qubit 1) is qubit 0 set: index 1
    StateVector s = StateVector::from_amplitudes({0.0, 1.0, 0.0, 0.0});
    s.apply_cnot(0, 1);
    CHECK(s[3] == Amplitude(1.0));
    CHECK(s[1] == Amplitude(0.0));

    StateVector off(2);
    off.apply_cnot(0, 1);
    CHECK(off == StateVector(2));

    StateVector bell(2);
    bell.apply_h(0).apply_cnot(0, 1);
    CHECK(std::abs(bell[0] - kInvSqrt2) < 1e-15);
    CHECK(std::abs(bell[3] - kInvSqrt2) < 1e-15);
    CHECK(std::abs(bell[1]) == 0.0);
    CHECK(std::abs(bell[2]) == 0.0);

    CHECK_THROWS_AS(StateVector(2).apply_cnot(1, 1), ArgumentError);
    CHECK_THROWS_AS(StateVector(2).apply_cnot(0, 2), ArgumentError);
}

TEST_CASE("inner product") {
    gen::Rng rng(14);
    for (int n = 1; n <= 5; ++n) {
        const StateVector psi = gen::random_state(rng, n);
        CHECK(std::abs(inner_product(psi, psi) - 1.0) < 1e-12);
    }
    StateVector zero(1);
    StateVector one(1);
    one.apply_ry(0, std::numbers::pi);
    CHECK(std::abs(inner_product(zero, one)) < 1e-16);

    StateVector bell(2);
    bell.apply_h(0).apply_cnot(0, 1);
    CHECK(std::abs(inner_product(StateVector(2), bell) - kInvSqrt2) < 1e-15);

    // conjugate-linear in the first argument
    StateVector a(1);
    a.apply_h(0).apply_rz(0, 0.7);
    StateVector b(1);
    b.apply_ry(0, 0.3);
    CHECK(std::abs(inner_product(a, b) - std::conj(inner_product(b, a))) < 1e-15);

    CHECK_THROWS_AS(inner_product(StateVector(1), StateVector(2)), ArgumentError);
}

TEST_CASE("from_amplitudes validates size") {
    CHECK_THROWS_AS(StateVector::from_amplitudes({1.0, 0.0, 0.0}), ArgumentError);
    CHECK_THROWS_AS(StateVector::from_amplitudes({1.0}), ArgumentError);
    CHECK(StateVector::from_amplitudes({1.0, 0.0, 0.0, 0.0}).n_qubits() == 2);
}

TEST_CASE("norm preserved over random gate sequences") {
    gen::Rng rng(15);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = gen::uniform_int(rng, 1, 8);
        StateVector psi = gen::random_state(rng, n);
        psi.apply(gen::random_circuit(rng, n, 100));
        CHECK(std::abs(psi.norm() - 1.0) < 1e-10);
    }
}

TEST_CASE("gate followed by its inverse restores the state") {
    gen::Rng rng(16);
    for (int trial = 0; trial < 500; ++trial) {
        const int n = gen::uniform_int(rng, 2, 6);
        const StateVector psi = gen::random_state(rng, n);
        const Gate g = gen::random_gate(rng, n);
        StateVector phi = psi;
        phi.apply(g).apply(inverse(g));
        CHECK(max_diff(phi, psi) < 1e-12);
    }

    gen::Rng rng2(17);
    const StateVector psi = gen::random_state(rng2, 5);
    const auto circuit = gen::random_circuit(rng2, 5, 60);
    StateVector phi = psi;
    phi.apply(circuit).apply_inverse(circuit);
    CHECK(max_diff(phi, psi) < 1e-12);
}

TEST_CASE("agrees with the Kronecker-product matrix oracle") {
    gen::Rng rng(18);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = gen::uniform_int(rng, 1, 4);
        const auto amps = gen::random_amplitudes(rng, n);
        const auto circuit = gen::random_circuit(rng, n, 30);

        StateVector psi = StateVector::from_amplitudes(amps);
        psi.apply(circuit);

        oracle::CVector v = Eigen::Map<const oracle::CVector>(amps.data(), static_cast<Eigen::Index>(amps.size()));
        for (const Gate& g : circuit) v = gate_matrix(n, g) * v;

        for (std::size_t k = 0; k < psi.dimension(); ++k) {
            CHECK(std::abs(psi[k] - v(static_cast<Eigen::Index>(k))) < 1e-12);
        }
    }
}
