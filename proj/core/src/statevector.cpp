#include "qkernel/statevector.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <string>

#include "qkernel/errors.hpp"

namespace qkernel {

namespace {

void check_angle(double theta) {
    if (!std::isfinite(theta)) {
        throw ArgumentError("rotation angle must be finite");
    }
}

// Calls f(i0, i1) for every amplitude pair differing only in bit `qubit`,
// with bit `qubit` clear in i0.
template <typename F>
void for_each_pair(std::size_t dim, int qubit, F&& f) {
    const std::size_t stride = std::size_t{1} << qubit;
    for (std::size_t block = 0; block < dim; block += 2 * stride) {
        for (std::size_t i0 = block; i0 < block + stride; ++i0) {
            f(i0, i0 + stride);
        }
    }
}

}  // namespace

Gate inverse(const Gate& g) {
    Gate inv = g;
    if (g.kind == GateKind::Rz || g.kind == GateKind::Ry) {
        inv.angle = -g.angle;
    }
    return inv;
}

StateVector::StateVector(int n_qubits) : n_qubits_(n_qubits) {
    if (n_qubits < 1 || n_qubits > kMaxQubits) {
        throw ConfigError("qubit count " + std::to_string(n_qubits) + " outside [1, " +
                          std::to_string(kMaxQubits) + "]");
    }
    amps_.assign(std::size_t{1} << n_qubits, Amplitude{0.0, 0.0});
    amps_[0] = 1.0;
}

StateVector::StateVector(int n_qubits, std::vector<Amplitude> amplitudes)
    : n_qubits_(n_qubits), amps_(std::move(amplitudes)) {}

StateVector StateVector::from_amplitudes(std::vector<Amplitude> amplitudes) {
    const std::size_t dim = amplitudes.size();
    if (dim < 2 || !std::has_single_bit(dim)) {
        throw ArgumentError("amplitude count must be a power of two >= 2");
    }
    const int n = std::countr_zero(dim);
    if (n > kMaxQubits) {
        throw ConfigError("qubit count " + std::to_string(n) + " exceeds the ceiling");
    }
    return StateVector(n, std::move(amplitudes));
}

void StateVector::check_qubit(int qubit) const {
    if (qubit < 0 || qubit >= n_qubits_) {
        throw ArgumentError("qubit index " + std::to_string(qubit) + " out of range for " +
                            std::to_string(n_qubits_) + " qubits");
    }
}

StateVector& StateVector::apply_h(int qubit) {
    check_qubit(qubit);
    constexpr double s = std::numbers::sqrt2 / 2.0;
    for_each_pair(amps_.size(), qubit, [this, s](std::size_t i0, std::size_t i1) {
        const Amplitude a = amps_[i0];
        const Amplitude b = amps_[i1];
        amps_[i0] = s * (a + b);
        amps_[i1] = s * (a - b);
    });
    return *this;
}

StateVector& StateVector::apply_rz(int qubit, double theta) {
    check_qubit(qubit);
    check_angle(theta);
    const Amplitude phase0 = std::polar(1.0, -theta / 2.0);
    const Amplitude phase1 = std::polar(1.0, theta / 2.0);
    // Spelled out: operator*= on std::complex goes through the Annex G
    // NaN/inf recovery path, which is several times slower.
    auto rotate = [](Amplitude& a, const Amplitude& p) {
        a = Amplitude(a.real() * p.real() - a.imag() * p.imag(), a.real() * p.imag() + a.imag() * p.real());
    };
    for_each_pair(amps_.size(), qubit, [&](std::size_t i0, std::size_t i1) {
        rotate(amps_[i0], phase0);
        rotate(amps_[i1], phase1);
    });
    return *this;
}

StateVector& StateVector::apply_ry(int qubit, double theta) {
    check_qubit(qubit);
    check_angle(theta);
    const double c = std::cos(theta / 2.0);
    const double s = std::sin(theta / 2.0);
    for_each_pair(amps_.size(), qubit, [&](std::size_t i0, std::size_t i1) {
        const Amplitude a = amps_[i0];
        const Amplitude b = amps_[i1];
        amps_[i0] = c * a - s * b;
        amps_[i1] = s * a + c * b;
    });
    return *this;
}

StateVector& StateVector::apply_cnot(int control, int target) {
    check_qubit(control);
    check_qubit(target);
    if (control == target) {
        throw ArgumentError("CNOT control and target must differ");
    }
    const std::size_t cmask = std::size_t{1} << control;
    for_each_pair(amps_.size(), target, [&](std::size_t i0, std::size_t i1) {
        if (i0 & cmask) {
            std::swap(amps_[i0], amps_[i1]);
        }
    });
    return *this;
}

StateVector& StateVector::apply(const Gate& gate) {
    switch (gate.kind) {
        case GateKind::H:
            return apply_h(gate.target);
        case GateKind::Rz:
            return apply_rz(gate.target, gate.angle);
        case GateKind::Ry:
            return apply_ry(gate.target, gate.angle);
        case GateKind::Cnot:
            return apply_cnot(gate.control, gate.target);
    }
    throw ArgumentError("unknown gate kind");
}

StateVector& StateVector::apply(std::span<const Gate> circuit) {
    for (const Gate& g : circuit) {
        apply(g);
    }
    return *this;
}

StateVector& StateVector::apply_inverse(std::span<const Gate> circuit) {
    for (auto it = circuit.rbegin(); it != circuit.rend(); ++it) {
        apply(inverse(*it));
    }
    return *this;
}

double StateVector::norm() const {
    double sum = 0.0;
    for (const Amplitude& a : amps_) {
        sum += std::norm(a);
    }
    return std::sqrt(sum);
}

Amplitude inner_product(const StateVector& a, const StateVector& b) {
    if (a.n_qubits() != b.n_qubits()) {
        throw ArgumentError("inner product of states with different qubit counts");
    }
    const auto x = a.amplitudes();
    const auto y = b.amplitudes();
    double re = 0.0;
    double im = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        // conj(x) * y
        re += x[k].real() * y[k].real() + x[k].imag() * y[k].imag();
        im += x[k].real() * y[k].imag() - x[k].imag() * y[k].real();
    }
    return {re, im};
}

}  // namespace qkernel
