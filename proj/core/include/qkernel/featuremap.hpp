#pragma once

#include <span>
#include <vector>

#include "qkernel/statevector.hpp"

namespace qkernel {

/// Classical input to the feature map: one rotation angle source per qubit,
/// every entry in [-1, +1].
class FeatureVector {
public:
    FeatureVector() = default;
    /// Throws DomainError if any entry is non-finite or outside [-1, +1].
    explicit FeatureVector(std::vector<double> values);

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    std::span<const double> values() const noexcept { return values_; }

    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;

private:
    std::vector<double> values_;
};

struct FeatureMapConfig {
    int n_qubits = 1;
    int d = 3;         ///< exponent of the B and A' angles
    int n_layers = 2;  ///< repetitions of (H^N, data unitary)

    /// Throws ConfigError when a field is out of range.
    void validate() const;
};

/// Gate list of the feature-map circuit for `x`.
///
/// Each layer is H on every qubit followed by the data unitary:
///   - per qubit k: Rz(x_k) then Ry(x_k^d)
///   - for each neighbour pair (k-1, k), k = 1..N-1:
///       CNOT(k-1 -> k), Rz(((x_{k-1} + x_k) / 2)^d) on k, CNOT(k-1 -> k)
///     with the even-k pairs applied first and the odd-k pairs second.
/// Qubit 0 has no pair rotation and the chain does not wrap around.
///
/// Throws ArgumentError when x.size() != cfg.n_qubits.
std::vector<Gate> build_circuit(const FeatureVector& x, const FeatureMapConfig& cfg);

/// |Phi(x)> = U_Phi(x) |0...0>.
StateVector encode(const FeatureVector& x, const FeatureMapConfig& cfg);

}  // namespace qkernel
