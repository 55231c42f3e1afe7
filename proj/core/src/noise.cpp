#include "eqc/noise.hpp"

#include <algorithm>
#include <cmath>

namespace eqc {

namespace {

constexpr PauliOp kPauliChoices[3] = {PauliOp::X, PauliOp::Y, PauliOp::Z};

void apply_pauli(StateVector& state, PauliOp op, int qubit) {
    auto& a = state.amplitudes();
    const size_t bit = 1ULL << qubit;
    switch (op) {
        case PauliOp::X:
            apply_gate_in_place(state, Gate{GateKind::X, {qubit, -1}});
            break;
        case PauliOp::Y:
            for (size_t k = 0; k < a.size(); ++k) {
                if (k & bit) continue;
                const Amplitude lo = a[k];
                const Amplitude hi = a[k | bit];
                a[k] = Amplitude(0, -1) * hi;
                a[k | bit] = Amplitude(0, 1) * lo;
            }
            break;
        case PauliOp::Z:
            for (size_t k = 0; k < a.size(); ++k)
                if (k & bit) a[k] = -a[k];
            break;
        case PauliOp::I: break;
    }
}

/// Dephasing time from T1/T2; +inf when T2 == 2*T1 exactly.
double t_phi_us(double t1, double t2) {
    const double inv = 1.0 / t2 - 1.0 / (2.0 * t1);
    if (inv < 0) throw std::invalid_argument("T2 > 2*T1: dephasing time undefined");
    if (inv == 0) return std::numeric_limits<double>::infinity();
    return 1.0 / inv;
}

double decay_prob(double duration_ns, double time_const_us) {
    if (duration_ns <= 0) return 0.0;
    if (!std::isfinite(time_const_us)) return 0.0;
    return 1.0 - std::exp(-duration_ns / (time_const_us * 1000.0));
}

struct LayerNoisePlan {
    std::vector<double> duration_ns; // per layer
    // per (layer, qubit): amplitude and phase event probabilities
    std::vector<std::vector<double>> p_amp;
    std::vector<std::vector<double>> p_phase;
    std::vector<double> gate_error; // per gate index (applies per operand for 2q)
    bool all_zero{true};
};

LayerNoisePlan plan_noise(const TranspiledCircuit& tc, const CalibrationSnapshot& calib) {
    const int n = tc.circuit.n_qubits();
    LayerNoisePlan plan;
    plan.gate_error.assign(tc.circuit.gates().size(), 0.0);
    for (size_t gi = 0; gi < tc.circuit.gates().size(); ++gi) {
        const Gate& g = tc.circuit.gates()[gi];
        if (g.kind == GateKind::MEASURE) continue;
        plan.gate_error[gi] = is_two_qubit(g.kind) ? calib.beta_for(g.qubits[0], g.qubits[1])
                                                   : calib.gamma_for(g.kind);
        if (plan.gate_error[gi] > 0) plan.all_zero = false;
    }
    plan.duration_ns.reserve(tc.layers.size());
    for (const auto& layer : tc.layers) {
        double d = 0;
        for (int gi : layer) {
            const Gate& g = tc.circuit.gates()[static_cast<size_t>(gi)];
            if (g.kind == GateKind::MEASURE) continue;
            d = std::max(d, is_two_qubit(g.kind) ? calib.gate_time_2q_ns : calib.gate_time_1q_ns);
        }
        plan.duration_ns.push_back(d);
        std::vector<double> pa(static_cast<size_t>(n), 0.0), pp(static_cast<size_t>(n), 0.0);
        for (int q = 0; q < n; ++q) {
            pa[static_cast<size_t>(q)] = decay_prob(d, calib.t1_us[static_cast<size_t>(q)]);
            pp[static_cast<size_t>(q)] = decay_prob(
                d, t_phi_us(calib.t1_us[static_cast<size_t>(q)], calib.t2_us[static_cast<size_t>(q)]));
            if (pa[static_cast<size_t>(q)] > 0 || pp[static_cast<size_t>(q)] > 0)
                plan.all_zero = false;
        }
        plan.p_amp.push_back(std::move(pa));
        plan.p_phase.push_back(std::move(pp));
    }
    for (int q : tc.measured_physical)
        if (calib.omega[static_cast<size_t>(q)] > 0) plan.all_zero = false;
    return plan;
}

void check_transpiled_kinds(const TranspiledCircuit& tc) {
    for (const Gate& g : tc.circuit.gates()) {
        switch (g.kind) {
            case GateKind::CNOT:
            case GateKind::ID:
            case GateKind::RZ:
            case GateKind::SX:
            case GateKind::X:
            case GateKind::MEASURE: break;
            default:
                throw std::invalid_argument("untranspiled gate kind in noisy run: " +
                                            gate_name(g.kind));
        }
        if (g.has_slot()) throw std::invalid_argument("unbound parameter slot in noisy run");
    }
}

std::string logical_bits(const StateVector& state, const TranspiledCircuit& tc, Rng& rng) {
    // Sample the full register once, then read logical bit i from its
    // physical position.
    const auto& a = state.amplitudes();
    double acc = 0;
    const double u0 = rng.uniform();
    size_t drawn = a.size() - 1;
    double target = u0;
    for (size_t k = 0; k < a.size(); ++k) {
        acc += std::norm(a[k]);
        if (target < acc) {
            drawn = k;
            break;
        }
    }
    const size_t n_log = tc.measured_physical.size();
    std::string bits(n_log, '0');
    for (size_t i = 0; i < n_log; ++i)
        if (bit_at(drawn, tc.measured_physical[i])) bits[n_log - 1 - i] = '1';
    return bits;
}

} // namespace

double CalibrationSnapshot::gamma_for(GateKind k) const {
    auto it = gamma.find(k);
    return it == gamma.end() ? 0.0 : it->second;
}

double CalibrationSnapshot::beta_for(int q0, int q1) const {
    auto it = beta.find({std::min(q0, q1), std::max(q0, q1)});
    return it == beta.end() ? 0.0 : it->second;
}

void CalibrationSnapshot::validate(int n_qubits) const {
    auto check_prob = [](double p, const char* what) {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(what) + " outside [0, 1]");
    };
    for (const auto& [k, p] : gamma) check_prob(p, "gamma");
    for (const auto& [e, p] : beta) check_prob(p, "beta");
    if (static_cast<int>(omega.size()) != n_qubits || static_cast<int>(t1_us.size()) != n_qubits ||
        static_cast<int>(t2_us.size()) != n_qubits)
        throw std::invalid_argument("per-qubit calibration arrays must have n_qubits entries");
    for (double p : omega) check_prob(p, "omega");
    for (int q = 0; q < n_qubits; ++q) {
        const double t1 = t1_us[static_cast<size_t>(q)], t2 = t2_us[static_cast<size_t>(q)];
        if (!(t1 > 0) || !(t2 > 0)) throw std::invalid_argument("T1/T2 must be positive");
        if (t2 > 2.0 * t1 + 1e-12) throw std::invalid_argument("T2 must satisfy T2 <= 2*T1");
    }
    if (!(gate_time_1q_ns > 0) || !(gate_time_2q_ns > 0))
        throw std::invalid_argument("gate times must be positive");
}

void apply_gate_noise(StateVector& state, const Gate& gate, const CalibrationSnapshot& calib,
                      Rng& rng) {
    if (gate.kind == GateKind::MEASURE)
        throw std::invalid_argument("gate noise does not apply to MEASURE");
    if (is_two_qubit(gate.kind)) {
        const double beta = calib.beta_for(gate.qubits[0], gate.qubits[1]);
        for (int i = 0; i < 2; ++i) {
            if (beta > 0 && rng.uniform() < beta)
                apply_pauli(state, kPauliChoices[rng.uniform_int(3)], gate.qubits[static_cast<size_t>(i)]);
        }
        return;
    }
    const double gamma = calib.gamma_for(gate.kind);
    if (gamma > 0 && rng.uniform() < gamma)
        apply_pauli(state, kPauliChoices[rng.uniform_int(3)], gate.qubits[0]);
}

void apply_idle_decay(StateVector& state, int qubit, double duration_ns,
                      const CalibrationSnapshot& calib, Rng& rng) {
    if (duration_ns < 0) throw std::invalid_argument("negative idle duration");
    const double t1 = calib.t1_us.at(static_cast<size_t>(qubit));
    const double t2 = calib.t2_us.at(static_cast<size_t>(qubit));
    const double p_amp = decay_prob(duration_ns, t1);
    const double p_phase = decay_prob(duration_ns, t_phi_us(t1, t2));
    if (p_amp > 0 && rng.uniform() < p_amp) {
        const int outcome = rng.uniform() < state.prob_one(qubit) ? 1 : 0;
        state.project(qubit, outcome);
        if (outcome == 1) apply_gate_in_place(state, Gate{GateKind::X, {qubit, -1}});
    }
    if (p_phase > 0 && rng.uniform() < p_phase) apply_pauli(state, PauliOp::Z, qubit);
}

std::string apply_readout_error(const std::string& bits, const std::vector<double>& omega_per_bit,
                                Rng& rng) {
    if (omega_per_bit.size() != bits.size())
        throw std::invalid_argument("omega list does not match bit count");
    std::string out = bits;
    for (size_t i = 0; i < bits.size(); ++i) {
        const double w = omega_per_bit[i];
        if (w > 0 && rng.uniform() < w) {
            const size_t pos = bits.size() - 1 - i; // bit i rendered at this position
            out[pos] = out[pos] == '0' ? '1' : '0';
        }
    }
    return out;
}

std::string apply_readout_error(const std::string& bits, const CalibrationSnapshot& calib,
                                Rng& rng) {
    std::vector<double> w(bits.size());
    for (size_t i = 0; i < bits.size(); ++i) w[i] = calib.omega.at(i);
    return apply_readout_error(bits, w, rng);
}

namespace {

// Gate matrices resolved once per execution so trajectories replay them
// without re-evaluating trig per shot.
struct CompiledGate {
    enum Kind { OneQ, Cnot, Measure } kind{OneQ};
    int q0{0}, q1{0};
    Amplitude u00, u01, u10, u11;
    double error_prob{0};
};

std::vector<CompiledGate> compile_gates(const TranspiledCircuit& tc, const LayerNoisePlan& plan) {
    std::vector<CompiledGate> out;
    out.reserve(tc.circuit.gates().size());
    for (size_t gi = 0; gi < tc.circuit.gates().size(); ++gi) {
        const Gate& g = tc.circuit.gates()[gi];
        CompiledGate cg;
        cg.q0 = g.qubits[0];
        cg.q1 = g.qubits[1];
        cg.error_prob = plan.gate_error[gi];
        if (g.kind == GateKind::MEASURE) {
            cg.kind = CompiledGate::Measure;
        } else if (g.kind == GateKind::CNOT) {
            cg.kind = CompiledGate::Cnot;
        } else {
            cg.kind = CompiledGate::OneQ;
            StateVector probe0(1), probe1(1);
            probe1.amplitudes() = {0.0, 1.0};
            Gate local = g;
            local.qubits = {0, -1};
            apply_gate_in_place(probe0, local);
            apply_gate_in_place(probe1, local);
            cg.u00 = probe0.amplitudes()[0];
            cg.u10 = probe0.amplitudes()[1];
            cg.u01 = probe1.amplitudes()[0];
            cg.u11 = probe1.amplitudes()[1];
        }
        out.push_back(cg);
    }
    return out;
}

void apply_compiled_1q(std::vector<Amplitude>& a, const CompiledGate& g) {
    const size_t step = 1ULL << g.q0;
    for (size_t base = 0; base < a.size(); base += 2 * step)
        for (size_t k = base; k < base + step; ++k) {
            const Amplitude a0 = a[k];
            const Amplitude a1 = a[k + step];
            a[k] = g.u00 * a0 + g.u01 * a1;
            a[k + step] = g.u10 * a0 + g.u11 * a1;
        }
}

void apply_compiled_cnot(std::vector<Amplitude>& a, const CompiledGate& g) {
    const size_t cbit = 1ULL << g.q0;
    const size_t tbit = 1ULL << g.q1;
    for (size_t k = 0; k < a.size(); ++k)
        if ((k & cbit) && !(k & tbit)) std::swap(a[k], a[k | tbit]);
}

} // namespace

Histogram run_noisy(const TranspiledCircuit& tc, const CalibrationSnapshot& calib, uint64_t shots,
                    Rng& rng) {
    if (shots == 0) throw std::invalid_argument("shots must be >= 1");
    check_transpiled_kinds(tc);
    calib.validate(tc.circuit.n_qubits());
    const LayerNoisePlan plan = plan_noise(tc, calib);
    const int n = tc.circuit.n_qubits();
    std::vector<double> meas_omega(tc.measured_physical.size());
    for (size_t i = 0; i < tc.measured_physical.size(); ++i)
        meas_omega[i] = calib.omega[static_cast<size_t>(tc.measured_physical[i])];

    const uint64_t base = rng.next();
    Histogram counts;

    if (plan.all_zero) {
        // Every trajectory is the ideal run; sample each shot from it.
        StateVector state(n);
        for (const Gate& g : tc.circuit.gates())
            if (g.kind != GateKind::MEASURE) apply_gate_in_place(state, g);
        for (uint64_t shot = 0; shot < shots; ++shot) {
            Rng shot_rng = Rng::stream(base, {shot});
            counts[logical_bits(state, tc, shot_rng)] += 1.0;
        }
        return counts;
    }

    const std::vector<CompiledGate> compiled = compile_gates(tc, plan);

    // Ideal end state: the exact trajectory of every shot in which no noise
    // event fires. Event patterns are drawn first without state math; only
    // eventful shots (rare at realistic error rates) replay the full
    // trajectory, re-deriving the same per-shot stream.
    StateVector ideal(n);
    for (const Gate& g : tc.circuit.gates())
        if (g.kind != GateKind::MEASURE) apply_gate_in_place(ideal, g);

    StateVector state(n);
    for (uint64_t shot = 0; shot < shots; ++shot) {
        Rng probe_rng = Rng::stream(base, {shot});
        bool eventful = false;
        for (size_t li = 0; li < tc.layers.size() && !eventful; ++li) {
            for (int gi : tc.layers[li]) {
                const CompiledGate& g = compiled[static_cast<size_t>(gi)];
                if (g.kind == CompiledGate::Measure || g.error_prob <= 0) continue;
                if (probe_rng.uniform() < g.error_prob) {
                    eventful = true;
                    break;
                }
                if (g.kind == CompiledGate::Cnot && probe_rng.uniform() < g.error_prob) {
                    eventful = true;
                    break;
                }
            }
            if (eventful) break;
            for (int q = 0; q < n; ++q) {
                const double pa = plan.p_amp[li][static_cast<size_t>(q)];
                const double pp = plan.p_phase[li][static_cast<size_t>(q)];
                if (pa > 0 && probe_rng.uniform() < pa) {
                    eventful = true;
                    break;
                }
                if (pp > 0 && probe_rng.uniform() < pp) {
                    eventful = true;
                    break;
                }
            }
        }

        std::string bits;
        if (!eventful) {
            bits = logical_bits(ideal, tc, probe_rng);
            bits = apply_readout_error(bits, meas_omega, probe_rng);
            counts[bits] += 1.0;
            continue;
        }

        Rng shot_rng = Rng::stream(base, {shot});
        state.amplitudes().assign(state.dim(), Amplitude(0, 0));
        state.amplitudes()[0] = 1.0;
        for (size_t li = 0; li < tc.layers.size(); ++li) {
            for (int gi : tc.layers[li]) {
                const CompiledGate& g = compiled[static_cast<size_t>(gi)];
                if (g.kind == CompiledGate::Measure) continue;
                if (g.kind == CompiledGate::Cnot)
                    apply_compiled_cnot(state.amplitudes(), g);
                else
                    apply_compiled_1q(state.amplitudes(), g);
                if (g.error_prob > 0) {
                    if (shot_rng.uniform() < g.error_prob)
                        apply_pauli(state, kPauliChoices[shot_rng.uniform_int(3)], g.q0);
                    if (g.kind == CompiledGate::Cnot && shot_rng.uniform() < g.error_prob)
                        apply_pauli(state, kPauliChoices[shot_rng.uniform_int(3)], g.q1);
                }
            }
            for (int q = 0; q < n; ++q) {
                const double pa = plan.p_amp[li][static_cast<size_t>(q)];
                const double pp = plan.p_phase[li][static_cast<size_t>(q)];
                if (pa > 0 && shot_rng.uniform() < pa) {
                    const int outcome = shot_rng.uniform() < state.prob_one(q) ? 1 : 0;
                    state.project(q, outcome);
                    if (outcome == 1) apply_gate_in_place(state, Gate{GateKind::X, {q, -1}});
                }
                if (pp > 0 && shot_rng.uniform() < pp) apply_pauli(state, PauliOp::Z, q);
            }
        }
        bits = logical_bits(state, tc, shot_rng);
        bits = apply_readout_error(bits, meas_omega, shot_rng);
        counts[bits] += 1.0;
    }
    return counts;
}

namespace {

using Mat = Eigen::MatrixXcd;

Mat lift_1q(const Mat& op, int qubit, int n) {
    Mat out = Mat::Identity(1, 1);
    for (int q = n - 1; q >= 0; --q) {
        const Mat factor = (q == qubit) ? op : Mat::Identity(2, 2);
        Mat next(out.rows() * factor.rows(), out.cols() * factor.cols());
        for (Eigen::Index i = 0; i < out.rows(); ++i)
            for (Eigen::Index j = 0; j < out.cols(); ++j)
                next.block(i * factor.rows(), j * factor.cols(), factor.rows(), factor.cols()) =
                    out(i, j) * factor;
        out = next;
    }
    return out;
}

Mat pauli_mat(PauliOp p) {
    Mat m(2, 2);
    switch (p) {
        case PauliOp::I: m << 1, 0, 0, 1; break;
        case PauliOp::X: m << 0, 1, 1, 0; break;
        case PauliOp::Y: m << 0, Amplitude(0, -1), Amplitude(0, 1), 0; break;
        case PauliOp::Z: m << 1, 0, 0, -1; break;
    }
    return m;
}

void depolarize(Mat& rho, double p, int qubit, int n) {
    if (p <= 0) return;
    Mat mix = Mat::Zero(rho.rows(), rho.cols());
    for (PauliOp op : {PauliOp::X, PauliOp::Y, PauliOp::Z}) {
        const Mat u = lift_1q(pauli_mat(op), qubit, n);
        mix += u * rho * u.adjoint();
    }
    rho = (1.0 - p) * rho + (p / 3.0) * mix;
}

void amplitude_damp(Mat& rho, double p, int qubit, int n) {
    if (p <= 0) return;
    Mat k0(2, 2), k1(2, 2);
    k0 << 1, 0, 0, std::sqrt(1.0 - p);
    k1 << 0, std::sqrt(p), 0, 0;
    const Mat K0 = lift_1q(k0, qubit, n);
    const Mat K1 = lift_1q(k1, qubit, n);
    rho = K0 * rho * K0.adjoint() + K1 * rho * K1.adjoint();
}

void phase_flip(Mat& rho, double p, int qubit, int n) {
    if (p <= 0) return;
    const Mat z = lift_1q(pauli_mat(PauliOp::Z), qubit, n);
    rho = (1.0 - p) * rho + p * (z * rho * z.adjoint());
}

} // namespace

Eigen::MatrixXcd density_oracle(const TranspiledCircuit& tc, const CalibrationSnapshot& calib) {
    const int n = tc.circuit.n_qubits();
    if (n > 2) throw std::invalid_argument("density oracle supports at most 2 qubits");
    check_transpiled_kinds(tc);
    calib.validate(n);
    const size_t dim = 1ULL << n;
    Mat rho = Mat::Zero(dim, dim);
    rho(0, 0) = 1.0;
    const LayerNoisePlan plan = plan_noise(tc, calib);
    for (size_t li = 0; li < tc.layers.size(); ++li) {
        for (int gi : tc.layers[li]) {
            const Gate& g = tc.circuit.gates()[static_cast<size_t>(gi)];
            if (g.kind == GateKind::MEASURE) continue;
            Circuit one(n);
            one.add_gate(g);
            const Mat u = unitary_of(one);
            rho = u * rho * u.adjoint();
            const double pe = plan.gate_error[static_cast<size_t>(gi)];
            if (pe > 0) {
                const int ops = is_two_qubit(g.kind) ? 2 : 1;
                for (int i = 0; i < ops; ++i)
                    depolarize(rho, pe, g.qubits[static_cast<size_t>(i)], n);
            }
        }
        for (int q = 0; q < n; ++q) {
            amplitude_damp(rho, plan.p_amp[li][static_cast<size_t>(q)], q, n);
            phase_flip(rho, plan.p_phase[li][static_cast<size_t>(q)], q, n);
        }
    }
    return rho;
}

std::map<std::string, double> readout_distribution(const TranspiledCircuit& tc,
                                                   const CalibrationSnapshot& calib) {
    const Mat rho = density_oracle(tc, calib);
    const int n = tc.circuit.n_qubits();
    const size_t n_log = tc.measured_physical.size();
    // Marginalize the diagonal onto the measured qubits (logical order).
    std::vector<double> probs(1ULL << n_log, 0.0);
    for (Eigen::Index k = 0; k < rho.rows(); ++k) {
        size_t idx = 0;
        for (size_t i = 0; i < n_log; ++i)
            if (bit_at(static_cast<uint64_t>(k), tc.measured_physical[i])) idx |= 1ULL << i;
        probs[idx] += rho(k, k).real();
    }
    (void)n;
    // Per-bit symmetric confusion.
    std::vector<double> out(probs.size(), 0.0);
    for (size_t b = 0; b < probs.size(); ++b) {
        if (probs[b] <= 0) continue;
        for (size_t b2 = 0; b2 < out.size(); ++b2) {
            double w = probs[b];
            for (size_t i = 0; i < n_log; ++i) {
                const double om = calib.omega[static_cast<size_t>(tc.measured_physical[i])];
                const bool flipped = ((b >> i) & 1) != ((b2 >> i) & 1);
                w *= flipped ? om : (1.0 - om);
            }
            out[b2] += w;
        }
    }
    std::map<std::string, double> dist;
    for (size_t b = 0; b < out.size(); ++b)
        if (out[b] > 0) dist[to_bitstring(b, static_cast<int>(n_log))] = out[b];
    return dist;
}

double total_variation(const Histogram& a, const Histogram& b) {
    double ta = 0, tb = 0;
    for (const auto& [k, v] : a) ta += v;
    for (const auto& [k, v] : b) tb += v;
    if (ta <= 0 || tb <= 0) throw std::invalid_argument("empty histogram in total_variation");
    std::map<std::string, double> diff;
    for (const auto& [k, v] : a) diff[k] += v / ta;
    for (const auto& [k, v] : b) diff[k] -= v / tb;
    double tv = 0;
    for (const auto& [k, v] : diff) tv += std::abs(v);
    return tv / 2.0;
}

} // namespace eqc
