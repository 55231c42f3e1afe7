#include "eqc/statevector.hpp"

#include <algorithm>
#include <cmath>

namespace eqc {

namespace {

constexpr double kSqrtHalf = 0.70710678118654752440;

struct Matrix2 {
    Amplitude u00, u01, u10, u11;
};

Matrix2 single_qubit_matrix(const Gate& g) {
    using namespace std::complex_literals;
    switch (g.kind) {
        case GateKind::H: return {kSqrtHalf, kSqrtHalf, kSqrtHalf, -kSqrtHalf};
        case GateKind::X: return {0.0, 1.0, 1.0, 0.0};
        case GateKind::SX: return {0.5 + 0.5i, 0.5 - 0.5i, 0.5 - 0.5i, 0.5 + 0.5i};
        case GateKind::ID: return {1.0, 0.0, 0.0, 1.0};
        case GateKind::RX: {
            const double c = std::cos(g.angle / 2), s = std::sin(g.angle / 2);
            return {c, -1.0i * s, -1.0i * s, c};
        }
        case GateKind::RY: {
            const double c = std::cos(g.angle / 2), s = std::sin(g.angle / 2);
            return {c, -s, s, c};
        }
        case GateKind::RZ: {
            // exp(-i theta Z / 2)
            const Amplitude e0 = std::exp(Amplitude(0, -g.angle / 2));
            const Amplitude e1 = std::exp(Amplitude(0, g.angle / 2));
            return {e0, 0.0, 0.0, e1};
        }
        default: throw std::invalid_argument("not a single-qubit unitary: " + gate_name(g.kind));
    }
}

void apply_1q(std::vector<Amplitude>& a, int q, const Matrix2& m) {
    const size_t step = 1ULL << q;
    const size_t dim = a.size();
    for (size_t base = 0; base < dim; base += 2 * step) {
        for (size_t k = base; k < base + step; ++k) {
            const Amplitude a0 = a[k];
            const Amplitude a1 = a[k + step];
            a[k] = m.u00 * a0 + m.u01 * a1;
            a[k + step] = m.u10 * a0 + m.u11 * a1;
        }
    }
}

void apply_cnot(std::vector<Amplitude>& a, int control, int target) {
    const size_t cbit = 1ULL << control;
    const size_t tbit = 1ULL << target;
    const size_t dim = a.size();
    for (size_t k = 0; k < dim; ++k)
        if ((k & cbit) && !(k & tbit)) std::swap(a[k], a[k | tbit]);
}

void apply_swap(std::vector<Amplitude>& a, int q0, int q1) {
    const size_t b0 = 1ULL << q0;
    const size_t b1 = 1ULL << q1;
    const size_t dim = a.size();
    for (size_t k = 0; k < dim; ++k)
        if ((k & b0) && !(k & b1)) std::swap(a[k], a[(k & ~b0) | b1]);
}

void apply_zz(std::vector<Amplitude>& a, int q0, int q1, double theta) {
    // exp(-i theta Z(x)Z): phase e^{-i theta} on equal bits, e^{+i theta} on unequal.
    const Amplitude same = std::exp(Amplitude(0, -theta));
    const Amplitude diff = std::exp(Amplitude(0, theta));
    const size_t dim = a.size();
    for (size_t k = 0; k < dim; ++k)
        a[k] *= (bit_at(k, q0) == bit_at(k, q1)) ? same : diff;
}

} // namespace

StateVector::StateVector(int n_qubits) : n_qubits_(n_qubits) {
    if (n_qubits < 1 || n_qubits > 12)
        throw std::invalid_argument("state vector qubit count must be in [1, 12]");
    amplitudes_.assign(1ULL << n_qubits, Amplitude(0, 0));
    amplitudes_[0] = 1.0;
}

double StateVector::norm_sq() const {
    double s = 0;
    for (const Amplitude& a : amplitudes_) s += std::norm(a);
    return s;
}

double StateVector::prob_one(int qubit) const {
    if (qubit < 0 || qubit >= n_qubits_) throw std::invalid_argument("qubit out of range");
    const size_t bit = 1ULL << qubit;
    double p = 0;
    for (size_t k = 0; k < amplitudes_.size(); ++k)
        if (k & bit) p += std::norm(amplitudes_[k]);
    return p;
}

void StateVector::project(int qubit, int outcome) {
    const size_t bit = 1ULL << qubit;
    double kept = 0;
    for (size_t k = 0; k < amplitudes_.size(); ++k) {
        const bool match = ((k & bit) != 0) == (outcome != 0);
        if (match)
            kept += std::norm(amplitudes_[k]);
        else
            amplitudes_[k] = 0.0;
    }
    if (kept <= 0) throw std::runtime_error("projection onto zero-probability outcome");
    const double scale = 1.0 / std::sqrt(kept);
    for (Amplitude& a : amplitudes_) a *= scale;
}

void apply_gate_in_place(StateVector& state, const Gate& gate) {
    const int n = state.n_qubits();
    const int q0 = gate.qubits[0];
    if (q0 < 0 || q0 >= n) throw std::invalid_argument("gate operand out of range");
    if (gate.kind == GateKind::MEASURE)
        throw std::invalid_argument("MEASURE is not a unitary; use sample()");
    if (gate.has_slot()) throw std::invalid_argument("unbound parameter slot");
    if (is_two_qubit(gate.kind)) {
        const int q1 = gate.qubits[1];
        if (q1 < 0 || q1 >= n || q1 == q0) throw std::invalid_argument("bad two-qubit operands");
        switch (gate.kind) {
            case GateKind::CNOT: apply_cnot(state.amplitudes(), q0, q1); break;
            case GateKind::SWAP: apply_swap(state.amplitudes(), q0, q1); break;
            case GateKind::ZZ: apply_zz(state.amplitudes(), q0, q1, gate.angle); break;
            default: break;
        }
        return;
    }
    apply_1q(state.amplitudes(), q0, single_qubit_matrix(gate));
}

StateVector apply_gate(StateVector state, const Gate& gate) {
    apply_gate_in_place(state, gate);
    return state;
}

StateVector run_circuit(const Circuit& circuit, const std::vector<double>& bindings) {
    StateVector state(circuit.n_qubits());
    for (const Gate& g : circuit.gates()) {
        if (g.kind == GateKind::MEASURE) continue;
        Gate bound = g;
        if (g.has_slot()) {
            bound.angle = g.bound_angle(bindings);
            bound.slot = -1;
        }
        apply_gate_in_place(state, bound);
    }
    return state;
}

Histogram sample(const StateVector& state, uint64_t shots, Rng& rng) {
    if (shots == 0) throw std::invalid_argument("shots must be >= 1");
    const auto& a = state.amplitudes();
    std::vector<double> cdf(a.size());
    double acc = 0;
    for (size_t k = 0; k < a.size(); ++k) {
        acc += std::norm(a[k]);
        cdf[k] = acc;
    }
    Histogram counts;
    for (uint64_t s = 0; s < shots; ++s) {
        const double u = rng.uniform() * acc;
        const size_t k = static_cast<size_t>(
            std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        counts[to_bitstring(std::min(k, a.size() - 1), state.n_qubits())] += 1.0;
    }
    return counts;
}

double expectation_pauli(const StateVector& state, const PauliString& pauli) {
    if (static_cast<int>(pauli.size()) != state.n_qubits())
        throw std::invalid_argument("Pauli string length does not match register");
    uint64_t flip = 0;
    std::vector<int> y_qubits, z_qubits;
    for (size_t q = 0; q < pauli.size(); ++q) {
        switch (pauli.paulis[q]) {
            case PauliOp::I: break;
            case PauliOp::X: flip |= 1ULL << q; break;
            case PauliOp::Y:
                flip |= 1ULL << q;
                y_qubits.push_back(static_cast<int>(q));
                break;
            case PauliOp::Z: z_qubits.push_back(static_cast<int>(q)); break;
        }
    }
    const auto& a = state.amplitudes();
    Amplitude sum = 0;
    for (size_t k = 0; k < a.size(); ++k) {
        // P|k> = phase * |k ^ flip>
        Amplitude phase = 1.0;
        for (int q : y_qubits) phase *= bit_at(k, q) ? Amplitude(0, -1) : Amplitude(0, 1);
        for (int q : z_qubits)
            if (bit_at(k, q)) phase = -phase;
        sum += std::conj(a[k ^ flip]) * phase * a[k];
    }
    return pauli.coefficient * sum.real();
}

double expectation_from_counts(const Histogram& counts, const PauliString& pauli) {
    if (counts.empty()) throw std::invalid_argument("empty histogram");
    double total = 0, signed_sum = 0;
    for (const auto& [bits, c] : counts) {
        if (bits.size() != pauli.size())
            throw std::invalid_argument("bitstring length does not match Pauli string");
        int parity = 0;
        for (size_t q = 0; q < pauli.size(); ++q)
            if (pauli.paulis[q] != PauliOp::I && bits[pauli.size() - 1 - q] == '1') parity ^= 1;
        total += c;
        signed_sum += parity ? -c : c;
    }
    if (total <= 0) throw std::invalid_argument("histogram has no weight");
    return pauli.coefficient * signed_sum / total;
}

Eigen::MatrixXcd unitary_of(const Circuit& circuit, const std::vector<double>& bindings) {
    const int n = circuit.n_qubits();
    if (n > 5) throw std::invalid_argument("unitary_of supports at most 5 qubits");
    if (circuit.has_measurements())
        throw std::invalid_argument("unitary_of requires a measurement-free circuit");
    const size_t dim = 1ULL << n;
    Eigen::MatrixXcd u(dim, dim);
    for (size_t col = 0; col < dim; ++col) {
        StateVector s(n);
        s.amplitudes().assign(dim, 0.0);
        s.amplitudes()[col] = 1.0;
        for (const Gate& g : circuit.gates()) {
            Gate bound = g;
            if (g.has_slot()) {
                bound.angle = g.bound_angle(bindings);
                bound.slot = -1;
            }
            apply_gate_in_place(s, bound);
        }
        for (size_t row = 0; row < dim; ++row) u(row, col) = s.amplitudes()[row];
    }
    return u;
}

double phase_aligned_distance(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        return std::numeric_limits<double>::infinity();
    Eigen::Index r = 0, c = 0;
    a.cwiseAbs().maxCoeff(&r, &c);
    if (std::abs(a(r, c)) < 1e-14 || std::abs(b(r, c)) < 1e-14)
        return (a - b).cwiseAbs().maxCoeff();
    const Amplitude phase = (a(r, c) / std::abs(a(r, c))) / (b(r, c) / std::abs(b(r, c)));
    return (a - phase * b).cwiseAbs().maxCoeff();
}

} // namespace eqc
