#include "eqc/circuit.hpp"

#include <algorithm>

namespace eqc {

std::string gate_name(GateKind k) {
    switch (k) {
        case GateKind::H: return "h";
        case GateKind::X: return "x";
        case GateKind::SX: return "sx";
        case GateKind::ID: return "id";
        case GateKind::RX: return "rx";
        case GateKind::RY: return "ry";
        case GateKind::RZ: return "rz";
        case GateKind::CNOT: return "cx";
        case GateKind::ZZ: return "zz";
        case GateKind::SWAP: return "swap";
        case GateKind::MEASURE: return "measure";
    }
    return "?";
}

GateKind gate_kind_from_name(const std::string& name) {
    if (name == "h") return GateKind::H;
    if (name == "x") return GateKind::X;
    if (name == "sx") return GateKind::SX;
    if (name == "id") return GateKind::ID;
    if (name == "rx") return GateKind::RX;
    if (name == "ry") return GateKind::RY;
    if (name == "rz") return GateKind::RZ;
    if (name == "cx" || name == "cnot") return GateKind::CNOT;
    if (name == "zz") return GateKind::ZZ;
    if (name == "swap") return GateKind::SWAP;
    if (name == "measure") return GateKind::MEASURE;
    throw std::invalid_argument("unknown gate kind: " + name);
}

Circuit::Circuit(int n_qubits) : n_qubits_(n_qubits), measured_(static_cast<size_t>(n_qubits), 0) {
    if (n_qubits < 1 || n_qubits > 12)
        throw std::invalid_argument("circuit qubit count must be in [1, 12]");
}

void Circuit::check_operand(int q) const {
    if (q < 0 || q >= n_qubits_) throw std::invalid_argument("gate operand out of range");
}

void Circuit::add_gate(Gate g) {
    const bool two = is_two_qubit(g.kind);
    g.arity = two ? 2 : 1;
    check_operand(g.qubits[0]);
    if (two) {
        check_operand(g.qubits[1]);
        if (g.qubits[0] == g.qubits[1]) throw std::invalid_argument("gate operands must be distinct");
    }
    for (int i = 0; i < g.arity; ++i)
        if (measured_[static_cast<size_t>(g.qubits[static_cast<size_t>(i)])])
            throw std::invalid_argument("gate after MEASURE on qubit " +
                                        std::to_string(g.qubits[static_cast<size_t>(i)]));
    if (g.has_slot()) {
        if (!is_parameterized(g.kind))
            throw std::invalid_argument("parameter slot on non-parameterized gate");
        n_slots_ = std::max(n_slots_, g.slot + 1);
    }
    if (g.kind == GateKind::MEASURE) {
        measured_[static_cast<size_t>(g.qubits[0])] = 1;
        ++measured_count_;
    }
    gates_.push_back(g);
}

void Circuit::add(GateKind kind, int q) { add_gate(Gate{kind, {q, -1}}); }

void Circuit::add(GateKind kind, int q0, int q1) { add_gate(Gate{kind, {q0, q1}}); }

void Circuit::add(GateKind kind, int q, double angle) {
    Gate g{kind, {q, -1}};
    g.angle = angle;
    add_gate(g);
}

void Circuit::add(GateKind kind, int q0, int q1, double angle) {
    Gate g{kind, {q0, q1}};
    g.angle = angle;
    add_gate(g);
}

void Circuit::add_slot(GateKind kind, int q, int slot, double scale, double offset) {
    Gate g{kind, {q, -1}};
    g.slot = slot;
    g.slot_scale = scale;
    g.slot_offset = offset;
    add_gate(g);
}

void Circuit::add_slot(GateKind kind, int q0, int q1, int slot, double scale, double offset) {
    Gate g{kind, {q0, q1}};
    g.slot = slot;
    g.slot_scale = scale;
    g.slot_offset = offset;
    add_gate(g);
}

std::vector<std::pair<int, int>> Circuit::param_slots() const {
    std::vector<std::pair<int, int>> out;
    for (size_t i = 0; i < gates_.size(); ++i)
        if (gates_[i].has_slot()) out.emplace_back(static_cast<int>(i), gates_[i].slot);
    return out;
}

std::vector<int> Circuit::measured_qubits() const {
    std::vector<int> out;
    for (int q = 0; q < n_qubits_; ++q)
        if (measured_[static_cast<size_t>(q)]) out.push_back(q);
    return out;
}

Circuit Circuit::bind(const std::vector<double>& bindings) const {
    Circuit c(n_qubits_);
    for (const Gate& g : gates_) {
        Gate b = g;
        if (g.has_slot()) {
            b.angle = g.bound_angle(bindings);
            b.slot = -1;
            b.slot_scale = 1.0;
            b.slot_offset = 0.0;
        }
        c.add_gate(b);
    }
    return c;
}

Circuit Circuit::without_measurements() const {
    Circuit c(n_qubits_);
    for (const Gate& g : gates_)
        if (g.kind != GateKind::MEASURE) c.add_gate(g);
    return c;
}

std::string PauliString::to_string() const {
    std::string s;
    for (PauliOp p : paulis) s += "IXYZ"[static_cast<int>(p)];
    return s;
}

PauliString parse_pauli(const std::string& label, double coefficient) {
    PauliString ps;
    ps.coefficient = coefficient;
    for (char c : label) {
        switch (c) {
            case 'I': ps.paulis.push_back(PauliOp::I); break;
            case 'X': ps.paulis.push_back(PauliOp::X); break;
            case 'Y': ps.paulis.push_back(PauliOp::Y); break;
            case 'Z': ps.paulis.push_back(PauliOp::Z); break;
            default: throw std::invalid_argument("bad Pauli label: " + label);
        }
    }
    return ps;
}

} // namespace eqc
