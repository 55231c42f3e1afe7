#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "eqc/statevector.hpp"

namespace eqc {

using GraphEdges = std::vector<std::pair<int, int>>;
using ParamVector = std::vector<double>;

/// Weighted sum of Pauli strings plus a constant offset; Hermitian by
/// construction (real coefficients).
struct Hamiltonian {
    int n_qubits{0};
    std::vector<PauliString> terms;
    double constant{0.0};
};

struct LossSpec {
    Hamiltonian hamiltonian;
};

/// J * sum_(i,j) (XiXj + YiYj + ZiZj) + B * sum_i Zi. Zero-coefficient terms
/// are dropped.
Hamiltonian heisenberg_hamiltonian(int n_qubits, const GraphEdges& edges, double j_coupling,
                                   double b_field);

/// Crossing edges of the partition encoded by the bitstring (qubit 0
/// rightmost), unit weights.
double maxcut_cost(const std::string& assignment, const GraphEdges& edges);

/// H = -sum_(j,k) (1 - ZjZk)/2; ground value is -maxcut for unit weights.
Hamiltonian maxcut_hamiltonian(int n_qubits, const GraphEdges& edges);

/// Hardware-efficient ansatz: RY and RZ rotation layers, a linear CNOT chain,
/// two more rotation layers, terminal measurements. 4n parameter slots.
Circuit vqe_ansatz(int n_qubits);

/// Hadamards, ZZ(beta) on every edge (shared slot 0), RX(alpha) on every
/// qubit (shared slot 1), measurements.
Circuit qaoa_circuit(int n_qubits, const GraphEdges& edges);

Circuit ghz_circuit(int n_qubits);

/// Append the basis rotation making the term Z-diagonal (X -> H, Y ->
/// RZ(-pi/2) then H) in front of the terminal measurements.
Circuit measurement_circuit(const Circuit& base, const PauliString& term);

/// Sum of per-term parity expectations plus the constant; counts_per_term
/// must line up with spec.hamiltonian.terms.
double loss(const std::vector<Histogram>& counts_per_term, const LossSpec& spec);

ParamVector shift_params(const ParamVector& params, size_t index, int direction);

inline double gradient_from_pair(double loss_fwd, double loss_bck) {
    return (loss_fwd - loss_bck) / 2.0;
}

Eigen::MatrixXcd dense_matrix(const Hamiltonian& h);

/// Minimum eigenvalue of the dense Hamiltonian matrix, n_qubits <= 5.
double exact_ground_energy(const Hamiltonian& h);

/// Exact energy of the bound circuit state, via per-term statevector
/// expectations (diagnostic path used for per-update loss reporting).
double ideal_loss(const Circuit& circuit, const ParamVector& params, const Hamiltonian& h);

} // namespace eqc
