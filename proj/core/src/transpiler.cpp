#include "eqc/transpiler.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>

#include "eqc/device.hpp"

namespace eqc {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<std::vector<int>> adjacency(const CouplingMap& coupling, int n) {
    std::vector<std::vector<int>> adj(static_cast<size_t>(n));
    for (const auto& [a, b] : coupling) {
        if (a < 0 || b < 0 || a >= n || b >= n || a == b)
            throw std::invalid_argument("coupling edge references invalid qubits");
        adj[static_cast<size_t>(a)].push_back(b);
        adj[static_cast<size_t>(b)].push_back(a);
    }
    for (auto& nb : adj) std::sort(nb.begin(), nb.end());
    return adj;
}

std::vector<int> bfs_dist(const std::vector<std::vector<int>>& adj, int from) {
    std::vector<int> dist(adj.size(), -1);
    std::deque<int> q{from};
    dist[static_cast<size_t>(from)] = 0;
    while (!q.empty()) {
        const int v = q.front();
        q.pop_front();
        for (int w : adj[static_cast<size_t>(v)])
            if (dist[static_cast<size_t>(w)] < 0) {
                dist[static_cast<size_t>(w)] = dist[static_cast<size_t>(v)] + 1;
                q.push_back(w);
            }
    }
    return dist;
}

bool connected(const std::vector<std::vector<int>>& adj) {
    if (adj.empty()) return false;
    const auto dist = bfs_dist(adj, 0);
    return std::none_of(dist.begin(), dist.end(), [](int d) { return d < 0; });
}

bool adjacent(const std::vector<std::vector<int>>& adj, int a, int b) {
    const auto& nb = adj[static_cast<size_t>(a)];
    return std::binary_search(nb.begin(), nb.end(), b);
}

} // namespace

RouteResult route(const Circuit& circuit, const CouplingMap& coupling, int n_physical) {
    if (circuit.n_qubits() > n_physical)
        throw std::invalid_argument("circuit does not fit on the device");
    const auto adj = adjacency(coupling, n_physical);
    if (!connected(adj)) throw std::invalid_argument("coupling graph is disconnected");

    // pos[x] = current physical position of the state that started at physical x.
    std::vector<int> pos(static_cast<size_t>(n_physical));
    for (int i = 0; i < n_physical; ++i) pos[static_cast<size_t>(i)] = i;
    std::vector<int> occupant = pos; // occupant[p] = initial index currently at p

    Circuit out(n_physical);
    std::vector<Gate> measures;

    auto do_swap = [&](int pa, int pb) {
        out.add(GateKind::SWAP, pa, pb);
        const int oa = occupant[static_cast<size_t>(pa)];
        const int ob = occupant[static_cast<size_t>(pb)];
        std::swap(occupant[static_cast<size_t>(pa)], occupant[static_cast<size_t>(pb)]);
        pos[static_cast<size_t>(oa)] = pb;
        pos[static_cast<size_t>(ob)] = pa;
    };

    for (const Gate& g : circuit.gates()) {
        if (g.kind == GateKind::MEASURE) {
            measures.push_back(g);
            continue;
        }
        Gate moved = g;
        moved.qubits[0] = pos[static_cast<size_t>(g.qubits[0])];
        if (!is_two_qubit(g.kind)) {
            out.add_gate(moved);
            continue;
        }
        moved.qubits[1] = pos[static_cast<size_t>(g.qubits[1])];
        // Walk the control toward the target along a shortest path,
        // preferring lower physical indices on ties.
        const auto dist = bfs_dist(adj, moved.qubits[1]);
        int cur = moved.qubits[0];
        while (dist[static_cast<size_t>(cur)] > 1) {
            int next = -1;
            for (int nb : adj[static_cast<size_t>(cur)])
                if (dist[static_cast<size_t>(nb)] == dist[static_cast<size_t>(cur)] - 1) {
                    next = nb;
                    break;
                }
            do_swap(cur, next);
            cur = next;
        }
        moved.qubits[0] = cur;
        if (!adjacent(adj, moved.qubits[0], moved.qubits[1]))
            throw std::logic_error("routing failed to make operands adjacent");
        out.add_gate(moved);
    }
    for (const Gate& g : measures) {
        Gate moved = g;
        moved.qubits[0] = pos[static_cast<size_t>(g.qubits[0])];
        out.add_gate(moved);
    }
    return RouteResult{std::move(out), std::move(pos)};
}

Circuit decompose(const Circuit& circuit, const std::set<GateKind>& basis) {
    for (GateKind k : {GateKind::CNOT, GateKind::ID, GateKind::RZ, GateKind::SX, GateKind::X})
        if (!basis.count(k)) throw std::invalid_argument("basis must include CNOT, ID, RZ, SX, X");

    Circuit out(circuit.n_qubits());
    auto rz = [&](int q, double angle) { out.add(GateKind::RZ, q, angle); };
    auto sx = [&](int q) { out.add(GateKind::SX, q); };
    // Middle RZ of the RX/RY/ZZ rewrites inherits the slot with the rule's
    // affine angle map.
    auto rz_slotted = [&](int q, const Gate& src, double scale, double offset) {
        if (src.has_slot())
            out.add_slot(GateKind::RZ, q, src.slot, scale * src.slot_scale,
                         scale * src.slot_offset + offset);
        else
            rz(q, scale * src.angle + offset);
    };

    for (const Gate& g : circuit.gates()) {
        if (g.kind == GateKind::MEASURE || basis.count(g.kind)) {
            out.add_gate(g);
            continue;
        }
        const int a = g.qubits[0], b = g.qubits[1];
        switch (g.kind) {
            case GateKind::SWAP:
                out.add(GateKind::CNOT, a, b);
                out.add(GateKind::CNOT, b, a);
                out.add(GateKind::CNOT, a, b);
                break;
            case GateKind::ZZ:
                out.add(GateKind::CNOT, a, b);
                rz_slotted(b, g, 2.0, 0.0);
                out.add(GateKind::CNOT, a, b);
                break;
            case GateKind::H:
                rz(a, kPi / 2);
                sx(a);
                rz(a, kPi / 2);
                break;
            case GateKind::RX:
                rz(a, kPi / 2);
                sx(a);
                rz_slotted(a, g, 1.0, kPi);
                sx(a);
                rz(a, kPi / 2);
                break;
            case GateKind::RY:
                sx(a);
                rz_slotted(a, g, 1.0, kPi);
                sx(a);
                rz(a, kPi);
                break;
            default:
                throw std::invalid_argument("no rewrite rule for gate kind " + gate_name(g.kind));
        }
    }
    return out;
}

std::vector<std::vector<int>> asap_layers(const Circuit& circuit) {
    std::vector<int> ready(static_cast<size_t>(circuit.n_qubits()), 0);
    std::vector<std::vector<int>> layers;
    const auto& gates = circuit.gates();
    for (size_t gi = 0; gi < gates.size(); ++gi) {
        const Gate& g = gates[gi];
        int layer = ready[static_cast<size_t>(g.qubits[0])];
        if (g.arity == 2) layer = std::max(layer, ready[static_cast<size_t>(g.qubits[1])]);
        if (layer == static_cast<int>(layers.size())) layers.emplace_back();
        layers[static_cast<size_t>(layer)].push_back(static_cast<int>(gi));
        for (int i = 0; i < g.arity; ++i)
            ready[static_cast<size_t>(g.qubits[static_cast<size_t>(i)])] = layer + 1;
    }
    return layers;
}

CircuitMetrics compute_metrics(const Circuit& circuit, const std::vector<std::vector<int>>& layers) {
    CircuitMetrics m;
    for (const Gate& g : circuit.gates()) {
        if (g.kind == GateKind::MEASURE)
            ++m.m;
        else if (g.arity == 2)
            ++m.g2;
        else
            ++m.g1;
    }
    for (const auto& layer : layers) {
        const bool has_gate = std::any_of(layer.begin(), layer.end(), [&](int gi) {
            return circuit.gates()[static_cast<size_t>(gi)].kind != GateKind::MEASURE;
        });
        if (has_gate) ++m.cd;
    }
    return m;
}

TranspiledCircuit transpile(const Circuit& circuit, const DeviceProfile& device) {
    if (circuit.n_qubits() > device.n_qubits)
        throw std::invalid_argument("circuit needs more qubits than device " + device.name);
    RouteResult routed = route(circuit, device.coupling, device.n_qubits);
    TranspiledCircuit tc;
    tc.device_name = device.name;
    tc.n_logical = circuit.n_qubits();
    tc.circuit = decompose(routed.circuit, device.basis_gates);
    tc.layout = std::move(routed.layout);
    for (int q : circuit.measured_qubits())
        tc.measured_physical.push_back(tc.layout[static_cast<size_t>(q)]);
    tc.layers = asap_layers(tc.circuit);
    tc.metrics = compute_metrics(tc.circuit, tc.layers);
    if (device.n_qubits <= 5 && !verify_equivalence(circuit, tc))
        throw std::logic_error("transpilation changed the circuit unitary on " + device.name);
    return tc;
}

bool verify_equivalence(const Circuit& original, const TranspiledCircuit& transpiled) {
    const int n_log = original.n_qubits();
    const int n_phys = transpiled.circuit.n_qubits();
    if (n_phys > 5) throw std::invalid_argument("equivalence oracle supports at most 5 qubits");

    std::vector<double> probe(static_cast<size_t>(
                                  std::max(original.n_slots(), transpiled.circuit.n_slots())),
                              0.0);
    for (size_t i = 0; i < probe.size(); ++i) probe[i] = 0.37 + 0.711 * static_cast<double>(i);

    const Eigen::MatrixXcd u_orig = unitary_of(original.without_measurements(), probe);
    const Eigen::MatrixXcd u_trans = unitary_of(transpiled.circuit.without_measurements(), probe);

    // Expected: layout permutation applied to (U_orig (x) I_ancilla).
    const size_t dim = 1ULL << n_phys;
    const size_t dlog = 1ULL << n_log;
    Eigen::MatrixXcd expected = Eigen::MatrixXcd::Zero(dim, dim);
    for (size_t col = 0; col < dim; ++col) {
        const size_t col_log = col & (dlog - 1);
        const size_t col_anc = col >> n_log;
        for (size_t row_log = 0; row_log < dlog; ++row_log) {
            const Amplitude v = u_orig(static_cast<Eigen::Index>(row_log),
                                       static_cast<Eigen::Index>(col_log));
            if (std::abs(v) < 1e-300) continue;
            const size_t row = row_log | (col_anc << n_log);
            size_t permuted = 0;
            for (int q = 0; q < n_phys; ++q)
                if (bit_at(row, q)) permuted |= 1ULL << transpiled.layout[static_cast<size_t>(q)];
            expected(static_cast<Eigen::Index>(permuted), static_cast<Eigen::Index>(col)) = v;
        }
    }
    return phase_aligned_distance(expected, u_trans) <= 1e-10;
}

} // namespace eqc
