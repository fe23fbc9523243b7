#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace qkernel {

using Amplitude = std::complex<double>;

/// Largest qubit count a StateVector may hold (2^24 amplitudes, 256 MiB).
inline constexpr int kMaxQubits = 24;

enum class GateKind { H, Rz, Ry, Cnot };

/// One gate of a circuit. `control` is only meaningful for CNOT, `angle` only
/// for the rotations.
struct Gate {
    GateKind kind;
    int target;
    int control = -1;
    double angle = 0.0;

    static Gate h(int q) { return {GateKind::H, q}; }
    static Gate rz(int q, double theta) { return {GateKind::Rz, q, -1, theta}; }
    static Gate ry(int q, double theta) { return {GateKind::Ry, q, -1, theta}; }
    static Gate cnot(int c, int t) { return {GateKind::Cnot, t, c}; }
};

/// The gate undoing `g`: H and CNOT are self-inverse, rotations negate the angle.
Gate inverse(const Gate& g);

/// Dense pure state of n qubits.
///
/// Bit ordering: amplitude index k holds the basis state whose qubit q equals
/// bit q of k, so qubit 0 is the least significant bit. On two qubits the
/// index 2 (binary 10) is the state with qubit 1 set and qubit 0 clear.
///
/// Rotation conventions (half-angle):
///   Rz(t) = diag(exp(-i t/2), exp(+i t/2))
///   Ry(t) = [[cos(t/2), -sin(t/2)], [sin(t/2), cos(t/2)]]
///
/// Gates mutate the amplitudes in place in O(2^n) and return *this so calls
/// can be chained. A single instance is not safe for concurrent mutation;
/// distinct instances are independent.
class StateVector {
public:
    /// |0...0> on n_qubits qubits. Throws ConfigError outside [1, kMaxQubits].
    explicit StateVector(int n_qubits);

    /// Wraps an explicit amplitude array; its size must be a power of two.
    /// The caller is responsible for normalisation.
    static StateVector from_amplitudes(std::vector<Amplitude> amplitudes);

    int n_qubits() const noexcept { return n_qubits_; }
    std::size_t dimension() const noexcept { return amps_.size(); }
    std::span<const Amplitude> amplitudes() const noexcept { return amps_; }
    const Amplitude& operator[](std::size_t k) const { return amps_[k]; }

    StateVector& apply_h(int qubit);
    StateVector& apply_rz(int qubit, double theta);
    StateVector& apply_ry(int qubit, double theta);
    StateVector& apply_cnot(int control, int target);
    StateVector& apply(const Gate& gate);

    /// Applies the gates in order.
    StateVector& apply(std::span<const Gate> circuit);
    /// Applies the inverse of `circuit`: gates in reverse order, each inverted.
    StateVector& apply_inverse(std::span<const Gate> circuit);

    double norm() const;

    friend bool operator==(const StateVector&, const StateVector&) = default;

private:
    StateVector(int n_qubits, std::vector<Amplitude> amplitudes);
    void check_qubit(int qubit) const;

    int n_qubits_;
    std::vector<Amplitude> amps_;
};

/// <a|b> = sum_k conj(a_k) b_k. Throws ArgumentError on a qubit-count mismatch.
Amplitude inner_product(const StateVector& a, const StateVector& b);

}  // namespace qkernel
