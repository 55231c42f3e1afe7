#include "eqc/vqa.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

namespace eqc {

namespace {

constexpr double kPi = std::numbers::pi;

void check_edges(int n_qubits, const GraphEdges& edges) {
    for (const auto& [a, b] : edges)
        if (a < 0 || b < 0 || a >= n_qubits || b >= n_qubits || a == b)
            throw std::invalid_argument("graph edge references invalid vertices");
}

PauliString two_body(int n, int qa, int qb, PauliOp op, double coeff) {
    PauliString ps;
    ps.paulis.assign(static_cast<size_t>(n), PauliOp::I);
    ps.paulis[static_cast<size_t>(qa)] = op;
    ps.paulis[static_cast<size_t>(qb)] = op;
    ps.coefficient = coeff;
    return ps;
}

PauliString one_body(int n, int q, PauliOp op, double coeff) {
    PauliString ps;
    ps.paulis.assign(static_cast<size_t>(n), PauliOp::I);
    ps.paulis[static_cast<size_t>(q)] = op;
    ps.coefficient = coeff;
    return ps;
}

} // namespace

Hamiltonian heisenberg_hamiltonian(int n_qubits, const GraphEdges& edges, double j_coupling,
                                   double b_field) {
    if (edges.empty()) throw std::invalid_argument("Heisenberg model needs a nonempty edge set");
    check_edges(n_qubits, edges);
    Hamiltonian h;
    h.n_qubits = n_qubits;
    if (j_coupling != 0.0)
        for (const auto& [a, b] : edges)
            for (PauliOp op : {PauliOp::X, PauliOp::Y, PauliOp::Z})
                h.terms.push_back(two_body(n_qubits, a, b, op, j_coupling));
    if (b_field != 0.0)
        for (int q = 0; q < n_qubits; ++q) h.terms.push_back(one_body(n_qubits, q, PauliOp::Z, b_field));
    return h;
}

double maxcut_cost(const std::string& assignment, const GraphEdges& edges) {
    const size_t n = assignment.size();
    check_edges(static_cast<int>(n), edges);
    auto side = [&](int q) { return assignment[n - 1 - static_cast<size_t>(q)] == '1' ? 1 : 0; };
    double cut = 0;
    for (const auto& [a, b] : edges) {
        const int xa = side(a), xb = side(b);
        cut += xa * (1 - xb) + xb * (1 - xa);
    }
    return cut;
}

Hamiltonian maxcut_hamiltonian(int n_qubits, const GraphEdges& edges) {
    if (edges.empty()) throw std::invalid_argument("MaxCut needs a nonempty edge set");
    check_edges(n_qubits, edges);
    Hamiltonian h;
    h.n_qubits = n_qubits;
    h.constant = -0.5 * static_cast<double>(edges.size());
    for (const auto& [a, b] : edges) h.terms.push_back(two_body(n_qubits, a, b, PauliOp::Z, 0.5));
    return h;
}

Circuit vqe_ansatz(int n_qubits) {
    if (n_qubits < 2) throw std::invalid_argument("ansatz needs at least 2 qubits");
    Circuit c(n_qubits);
    int slot = 0;
    for (int q = 0; q < n_qubits; ++q) c.add_slot(GateKind::RY, q, slot++);
    for (int q = 0; q < n_qubits; ++q) c.add_slot(GateKind::RZ, q, slot++);
    for (int q = 0; q + 1 < n_qubits; ++q) c.add(GateKind::CNOT, q, q + 1);
    for (int q = 0; q < n_qubits; ++q) c.add_slot(GateKind::RY, q, slot++);
    for (int q = 0; q < n_qubits; ++q) c.add_slot(GateKind::RZ, q, slot++);
    for (int q = 0; q < n_qubits; ++q) c.add(GateKind::MEASURE, q);
    return c;
}

Circuit qaoa_circuit(int n_qubits, const GraphEdges& edges) {
    check_edges(n_qubits, edges);
    Circuit c(n_qubits);
    for (int q = 0; q < n_qubits; ++q) c.add(GateKind::H, q);
    for (const auto& [a, b] : edges) c.add_slot(GateKind::ZZ, a, b, 0);
    for (int q = 0; q < n_qubits; ++q) c.add_slot(GateKind::RX, q, 1);
    for (int q = 0; q < n_qubits; ++q) c.add(GateKind::MEASURE, q);
    return c;
}

Circuit ghz_circuit(int n_qubits) {
    if (n_qubits < 2) throw std::invalid_argument("GHZ needs at least 2 qubits");
    Circuit c(n_qubits);
    c.add(GateKind::H, 0);
    for (int q = 0; q + 1 < n_qubits; ++q) c.add(GateKind::CNOT, q, q + 1);
    for (int q = 0; q < n_qubits; ++q) c.add(GateKind::MEASURE, q);
    return c;
}

Circuit measurement_circuit(const Circuit& base, const PauliString& term) {
    if (static_cast<int>(term.size()) != base.n_qubits())
        throw std::invalid_argument("term length does not match circuit");
    Circuit c = base.without_measurements();
    for (size_t q = 0; q < term.size(); ++q) {
        switch (term.paulis[q]) {
            case PauliOp::X: c.add(GateKind::H, static_cast<int>(q)); break;
            case PauliOp::Y:
                c.add(GateKind::RZ, static_cast<int>(q), -kPi / 2);
                c.add(GateKind::H, static_cast<int>(q));
                break;
            default: break;
        }
    }
    for (int q : base.measured_qubits()) c.add(GateKind::MEASURE, q);
    return c;
}

double loss(const std::vector<Histogram>& counts_per_term, const LossSpec& spec) {
    const auto& terms = spec.hamiltonian.terms;
    if (counts_per_term.size() != terms.size())
        throw std::invalid_argument("need one histogram per Hamiltonian term");
    double total = spec.hamiltonian.constant;
    for (size_t t = 0; t < terms.size(); ++t)
        total += expectation_from_counts(counts_per_term[t], terms[t]);
    return total;
}

ParamVector shift_params(const ParamVector& params, size_t index, int direction) {
    if (index >= params.size()) throw std::invalid_argument("parameter index out of range");
    if (direction != 1 && direction != -1) throw std::invalid_argument("direction must be +/-1");
    ParamVector out = params;
    out[index] += direction * kPi / 2.0;
    return out;
}

Eigen::MatrixXcd dense_matrix(const Hamiltonian& h) {
    const size_t dim = 1ULL << h.n_qubits;
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(dim, dim) * h.constant;
    for (const PauliString& term : h.terms) {
        if (static_cast<int>(term.size()) != h.n_qubits)
            throw std::invalid_argument("Hamiltonian term length mismatch");
        // P|k> = phase(k) |k ^ flip>
        uint64_t flip = 0;
        std::vector<int> ys, zs;
        for (size_t q = 0; q < term.size(); ++q) {
            if (term.paulis[q] == PauliOp::X || term.paulis[q] == PauliOp::Y) flip |= 1ULL << q;
            if (term.paulis[q] == PauliOp::Y) ys.push_back(static_cast<int>(q));
            if (term.paulis[q] == PauliOp::Z) zs.push_back(static_cast<int>(q));
        }
        for (size_t k = 0; k < dim; ++k) {
            Amplitude phase = term.coefficient;
            for (int q : ys) phase *= bit_at(k, q) ? Amplitude(0, -1) : Amplitude(0, 1);
            for (int q : zs)
                if (bit_at(k, q)) phase = -phase;
            m(static_cast<Eigen::Index>(k ^ flip), static_cast<Eigen::Index>(k)) += phase;
        }
    }
    return m;
}

double exact_ground_energy(const Hamiltonian& h) {
    if (h.n_qubits > 5) throw std::invalid_argument("exact diagonalization limited to 5 qubits");
    const Eigen::MatrixXcd m = dense_matrix(h);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(m, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");
    return solver.eigenvalues().minCoeff();
}

double ideal_loss(const Circuit& circuit, const ParamVector& params, const Hamiltonian& h) {
    const StateVector state = run_circuit(circuit, params);
    double total = h.constant;
    for (const PauliString& term : h.terms) total += expectation_pauli(state, term);
    return total;
}

} // namespace eqc
