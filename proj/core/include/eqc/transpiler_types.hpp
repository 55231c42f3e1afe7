#pragma once

#include <string>
#include <vector>

#include "eqc/circuit.hpp"

namespace eqc {

/// Circuit-shape inputs of the device-quality model: critical depth, gate and
/// measurement counts of the transpiled circuit.
struct CircuitMetrics {
    int cd{0}; // scheduling layers containing at least one non-measure gate
    int g1{0}; // single-qubit basis gates
    int g2{0}; // two-qubit basis gates
    int m{0};  // measurements
};

/// A circuit mapped onto one device: basis gates on physical qubits, the final
/// logical->physical layout (routing permutations folded into measurement
/// relabeling), the ASAP schedule and the derived metrics.
struct TranspiledCircuit {
    std::string device_name;
    Circuit circuit;                      // physical-qubit gate list, basis kinds + MEASURE
    int n_logical{0};
    std::vector<int> layout;              // initial physical position -> final position
    std::vector<int> measured_physical;   // logical qubit i is read from this physical qubit
    std::vector<std::vector<int>> layers; // ASAP schedule over gate indices
    CircuitMetrics metrics;

    /// Copy with parameter slots resolved to literal angles.
    TranspiledCircuit bind(const std::vector<double>& bindings) const {
        TranspiledCircuit out = *this;
        out.circuit = circuit.bind(bindings);
        return out;
    }
};

} // namespace eqc
