#pragma once

#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "eqc/statevector.hpp"
#include "eqc/transpiler_types.hpp"

namespace eqc {

/// One calibration report of a virtual QPU: per-gate depolarization, per-edge
/// CNOT error, per-qubit readout error and coherence times.
struct CalibrationSnapshot {
    std::map<GateKind, double> gamma;           // single-qubit gate error probability
    std::map<std::pair<int, int>, double> beta; // CNOT error probability per coupled pair (i<j)
    std::vector<double> omega;                  // readout flip probability per qubit
    std::vector<double> t1_us;
    std::vector<double> t2_us;
    double gate_time_1q_ns{0};
    double gate_time_2q_ns{0};
    double calibrated_at_s{0};

    double gamma_for(GateKind k) const;
    double beta_for(int q0, int q1) const;
    /// Throws std::invalid_argument on any violated bound (probabilities in
    /// [0,1], positive times, t2 <= 2*t1).
    void validate(int n_qubits) const;
};

/// Depolarization after a gate: with probability gamma (1q) or beta (per
/// operand of a 2q gate) a uniformly random non-identity Pauli hits the qubit.
void apply_gate_noise(StateVector& state, const Gate& gate, const CalibrationSnapshot& calib,
                      Rng& rng);

/// T1 amplitude damping (measure-and-reset trajectory) plus T_phi phase flip
/// for an idle window of `duration_ns`.
void apply_idle_decay(StateVector& state, int qubit, double duration_ns,
                      const CalibrationSnapshot& calib, Rng& rng);

/// Flip each bit independently with its qubit's readout error. Bit i of the
/// string (rightmost = bit 0) uses omega[qubit_of_bit[i]]; the convenience
/// overload assumes bit i belongs to qubit i.
std::string apply_readout_error(const std::string& bits, const std::vector<double>& omega_per_bit,
                                Rng& rng);
std::string apply_readout_error(const std::string& bits, const CalibrationSnapshot& calib,
                                Rng& rng);

/// Monte-Carlo execution of a transpiled circuit: per shot, ideal gate +
/// depolarization per gate, idle decay per scheduling layer on every qubit,
/// one terminal sample, readout flips. Keys are logical-qubit bitstrings.
Histogram run_noisy(const TranspiledCircuit& circuit, const CalibrationSnapshot& calib,
                    uint64_t shots, Rng& rng);

/// Exact channel composition for circuits on at most 2 qubits: depolarizing,
/// amplitude damping (Kraus form), phase flip. Readout confusion is applied
/// separately by readout_distribution so the returned matrix stays a physical
/// pre-measurement state.
Eigen::MatrixXcd density_oracle(const TranspiledCircuit& circuit,
                                const CalibrationSnapshot& calib);

/// Measurement distribution over logical bitstrings predicted by the oracle:
/// diagonal of the density matrix mapped through per-qubit readout confusion.
std::map<std::string, double> readout_distribution(const TranspiledCircuit& circuit,
                                                   const CalibrationSnapshot& calib);

/// Total variation distance between two histograms (normalized internally).
double total_variation(const Histogram& a, const Histogram& b);

} // namespace eqc
