#include "qkernel/featuremap.hpp"

#include <cmath>
#include <string>

#include "qkernel/errors.hpp"

namespace qkernel {

FeatureVector::FeatureVector(std::vector<double> values) : values_(std::move(values)) {
    for (std::size_t i = 0; i < values_.size(); ++i) {
        const double v = values_[i];
        if (!std::isfinite(v) || v < -1.0 || v > 1.0) {
            throw DomainError("feature " + std::to_string(i) + " = " + std::to_string(v) +
                              " outside [-1, +1]");
        }
    }
}

void FeatureMapConfig::validate() const {
    if (n_qubits < 1 || n_qubits > kMaxQubits) {
        throw ConfigError("feature map qubit count " + std::to_string(n_qubits) +
                          " outside [1, " + std::to_string(kMaxQubits) + "]");
    }
    if (d < 1) {
        throw ConfigError("feature map exponent d must be >= 1");
    }
    if (n_layers < 1) {
        throw ConfigError("feature map layer count must be >= 1");
    }
}

namespace {

double ipow(double base, int exponent) {
    double r = 1.0;
    for (int i = 0; i < exponent; ++i) {
        r *= base;
    }
    return r;
}

void append_pair_block(std::vector<Gate>& gates, const FeatureVector& x, int k, int d) {
    const double angle = ipow((x[k - 1] + x[k]) / 2.0, d);
    gates.push_back(Gate::cnot(k - 1, k));
    gates.push_back(Gate::rz(k, angle));
    gates.push_back(Gate::cnot(k - 1, k));
}

}  // namespace

std::vector<Gate> build_circuit(const FeatureVector& x, const FeatureMapConfig& cfg) {
    cfg.validate();
    const int n = cfg.n_qubits;
    if (static_cast<int>(x.size()) != n) {
        throw ArgumentError("feature vector length " + std::to_string(x.size()) +
                            " does not match qubit count " + std::to_string(n));
    }

    std::vector<Gate> gates;
    gates.reserve(static_cast<std::size_t>(cfg.n_layers) * (3 * n + 3 * (n - 1)));
    for (int layer = 0; layer < cfg.n_layers; ++layer) {
        for (int k = 0; k < n; ++k) {
            gates.push_back(Gate::h(k));
        }
        for (int k = 0; k < n; ++k) {
            gates.push_back(Gate::rz(k, x[k]));
            gates.push_back(Gate::ry(k, ipow(x[k], cfg.d)));
        }
        for (int k = 2; k < n; k += 2) {
            append_pair_block(gates, x, k, cfg.d);
        }
        for (int k = 1; k < n; k += 2) {
            append_pair_block(gates, x, k, cfg.d);
        }
    }
    return gates;
}

StateVector encode(const FeatureVector& x, const FeatureMapConfig& cfg) {
    const auto circuit = build_circuit(x, cfg);
    StateVector state(cfg.n_qubits);
    state.apply(circuit);
    return state;
}

}  // namespace qkernel
