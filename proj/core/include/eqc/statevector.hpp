#pragma once

#include <complex>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eqc/circuit.hpp"
#include "eqc/rng.hpp"

namespace eqc {

using Amplitude = std::complex<double>;

/// Outcome histogram keyed by bitstring (qubit 0 rightmost). Counts are
/// integer-valued when produced by sampling; fractional weights are accepted
/// so exact probability tables can be fed through the same estimators.
using Histogram = std::map<std::string, double>;

/// Dense amplitude vector for an n-qubit register, n in [1, 12].
class StateVector {
  public:
    explicit StateVector(int n_qubits);

    int n_qubits() const { return n_qubits_; }
    size_t dim() const { return amplitudes_.size(); }
    const std::vector<Amplitude>& amplitudes() const { return amplitudes_; }
    std::vector<Amplitude>& amplitudes() { return amplitudes_; }

    double norm_sq() const;
    /// Probability of measuring qubit q as 1.
    double prob_one(int qubit) const;
    /// Project qubit q onto the given outcome and renormalize.
    void project(int qubit, int outcome);

  private:
    int n_qubits_;
    std::vector<Amplitude> amplitudes_;
};

/// Apply a (non-MEASURE) gate in place.
void apply_gate_in_place(StateVector& state, const Gate& gate);

StateVector apply_gate(StateVector state, const Gate& gate);

/// Run all non-MEASURE gates on |0...0>, resolving slots via bindings.
StateVector run_circuit(const Circuit& circuit, const std::vector<double>& bindings = {});

/// Draw `shots` independent samples from |a_k|^2.
Histogram sample(const StateVector& state, uint64_t shots, Rng& rng);

/// coefficient * <psi|P|psi>.
double expectation_pauli(const StateVector& state, const PauliString& pauli);

/// Parity estimator over the string's support; the histogram must come from a
/// circuit that already rotated the term into the Z basis.
double expectation_from_counts(const Histogram& counts, const PauliString& pauli);

/// Full unitary of a measurement-free circuit, n_qubits <= 5. Column k is the
/// image of basis state |k>.
Eigen::MatrixXcd unitary_of(const Circuit& circuit, const std::vector<double>& bindings = {});

/// Max absolute entry difference after aligning global phase on the largest
/// entry of `a`. Returns +inf if shapes differ.
double phase_aligned_distance(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

} // namespace eqc
