#pragma once

#include <set>
#include <utility>
#include <vector>

#include "eqc/statevector.hpp"
#include "eqc/transpiler_types.hpp"

namespace eqc {

struct DeviceProfile;

using CouplingMap = std::vector<std::pair<int, int>>;

struct RouteResult {
    Circuit circuit;         // gates on physical qubits, SWAPs inserted
    std::vector<int> layout; // initial physical position -> final position
};

/// Make every two-qubit gate act on a coupling edge by inserting SWAPs along
/// a shortest path (control walks toward target, lexicographically smallest
/// path). Initial layout is the identity; measurements are re-emitted at the
/// final physical positions instead of undoing the permutation with SWAPs.
RouteResult route(const Circuit& circuit, const CouplingMap& coupling, int n_physical);

/// Rewrite into the target basis: SWAP -> 3 CNOT, ZZ(t) -> CNOT RZ(2t) CNOT,
/// H -> RZ(pi/2) SX RZ(pi/2), RX/RY -> RZ/SX sequences. Slot bindings survive
/// through the rewrite (folded into slot scale/offset).
Circuit decompose(const Circuit& circuit, const std::set<GateKind>& basis);

/// ASAP schedule: each gate lands in the earliest layer after every operand's
/// previous gate.
std::vector<std::vector<int>> asap_layers(const Circuit& circuit);

CircuitMetrics compute_metrics(const Circuit& circuit, const std::vector<std::vector<int>>& layers);

/// route + decompose + schedule + metrics; self-checks unitary equivalence on
/// devices small enough for the oracle.
TranspiledCircuit transpile(const Circuit& circuit, const DeviceProfile& device);

/// True iff the transpiled circuit, with its layout permutation applied,
/// matches the original unitary up to global phase within 1e-10. Parameter
/// slots on both sides are bound to a fixed set of probe angles.
bool verify_equivalence(const Circuit& original, const TranspiledCircuit& transpiled);

} // namespace eqc
