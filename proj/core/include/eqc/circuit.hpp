#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace eqc {

enum class GateKind { H, X, SX, ID, RX, RY, RZ, CNOT, ZZ, SWAP, MEASURE };

inline bool is_two_qubit(GateKind k) {
    return k == GateKind::CNOT || k == GateKind::ZZ || k == GateKind::SWAP;
}
inline bool is_parameterized(GateKind k) {
    return k == GateKind::RX || k == GateKind::RY || k == GateKind::RZ || k == GateKind::ZZ;
}

std::string gate_name(GateKind k);
GateKind gate_kind_from_name(const std::string& name);

/// One circuit operation. Parameterized gates either carry a literal angle or
/// reference a parameter slot; the bound angle is slot_scale * value + slot_offset
/// (transpilation folds rewrite rules into scale/offset).
struct Gate {
    GateKind kind{GateKind::ID};
    std::array<int, 2> qubits{-1, -1};
    int arity{1};
    double angle{0.0};
    int slot{-1};
    double slot_scale{1.0};
    double slot_offset{0.0};

    bool has_slot() const { return slot >= 0; }

    double bound_angle(const std::vector<double>& bindings) const {
        if (!has_slot()) return angle;
        if (slot >= static_cast<int>(bindings.size()))
            throw std::invalid_argument("unbound parameter slot " + std::to_string(slot));
        return slot_scale * bindings[static_cast<size_t>(slot)] + slot_offset;
    }
};

/// Ordered gate list over n qubits. Measurements, if present, are terminal per
/// qubit; parameter slots may be shared between gates.
class Circuit {
  public:
    Circuit() = default;
    explicit Circuit(int n_qubits);

    int n_qubits() const { return n_qubits_; }
    int n_slots() const { return n_slots_; }
    const std::vector<Gate>& gates() const { return gates_; }
    bool has_measurements() const { return measured_count_ > 0; }

    void add(GateKind kind, int q);
    void add(GateKind kind, int q0, int q1);
    void add(GateKind kind, int q, double angle);
    void add(GateKind kind, int q0, int q1, double angle);
    /// Parameterized gate bound to a slot; slots may repeat across gates.
    void add_slot(GateKind kind, int q, int slot, double scale = 1.0, double offset = 0.0);
    void add_slot(GateKind kind, int q0, int q1, int slot, double scale = 1.0, double offset = 0.0);
    void add_gate(Gate g);

    /// (gate index, slot id) pairs, in gate order.
    std::vector<std::pair<int, int>> param_slots() const;

    /// Qubits with a MEASURE gate, ascending.
    std::vector<int> measured_qubits() const;

    /// Copy with all slots resolved to literal angles.
    Circuit bind(const std::vector<double>& bindings) const;

    /// Copy without MEASURE gates.
    Circuit without_measurements() const;

  private:
    void check_operand(int q) const;
    int n_qubits_{0};
    int n_slots_{0};
    int measured_count_{0};
    std::vector<Gate> gates_;
    std::vector<uint8_t> measured_;
};

enum class PauliOp : uint8_t { I, X, Y, Z };

/// Weighted tensor product of Pauli factors, qubit 0 first.
struct PauliString {
    std::vector<PauliOp> paulis;
    double coefficient{1.0};

    size_t size() const { return paulis.size(); }
    /// Bitmask of non-identity positions.
    uint64_t support() const {
        uint64_t m = 0;
        for (size_t q = 0; q < paulis.size(); ++q)
            if (paulis[q] != PauliOp::I) m |= (1ULL << q);
        return m;
    }
    bool is_identity() const { return support() == 0; }
    std::string to_string() const;
};

PauliString parse_pauli(const std::string& label, double coefficient = 1.0);

// Bitstring convention: qubit 0 is the least-significant bit of the state
// index and renders as the rightmost character.
inline int bit_at(uint64_t index, int qubit) { return static_cast<int>((index >> qubit) & 1u); }

inline std::string to_bitstring(uint64_t index, int n_bits) {
    std::string s(static_cast<size_t>(n_bits), '0');
    for (int q = 0; q < n_bits; ++q)
        if (bit_at(index, q)) s[static_cast<size_t>(n_bits - 1 - q)] = '1';
    return s;
}

inline uint64_t from_bitstring(const std::string& bits) {
    uint64_t v = 0;
    for (size_t i = 0; i < bits.size(); ++i) {
        char c = bits[i];
        if (c != '0' && c != '1') throw std::invalid_argument("bad bitstring: " + bits);
        if (c == '1') v |= 1ULL << (bits.size() - 1 - i);
    }
    return v;
}

} // namespace eqc
