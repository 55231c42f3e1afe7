#include "eqc/fidelity.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace eqc {

EffectiveRates aggregate_rates(const TranspiledCircuit& tc, const CalibrationSnapshot& calib) {
    EffectiveRates r;
    r.mu_1q_us = calib.gate_time_1q_ns / 1000.0;
    r.mu_2q_us = calib.gate_time_2q_ns / 1000.0;
    double gamma_sum = 0, beta_sum = 0, omega_sum = 0;
    int n1 = 0, n2 = 0;
    std::set<int> touched;
    for (const Gate& g : tc.circuit.gates()) {
        if (g.kind == GateKind::MEASURE) {
            omega_sum += calib.omega.at(static_cast<size_t>(g.qubits[0]));
            touched.insert(g.qubits[0]);
            continue;
        }
        touched.insert(g.qubits[0]);
        if (g.arity == 2) {
            touched.insert(g.qubits[1]);
            beta_sum += calib.beta_for(g.qubits[0], g.qubits[1]);
            ++n2;
        } else {
            gamma_sum += calib.gamma_for(g.kind);
            ++n1;
        }
    }
    r.gamma = n1 ? gamma_sum / n1 : 0.0;
    r.beta = n2 ? beta_sum / n2 : 0.0;
    r.omega = tc.metrics.m ? omega_sum / tc.metrics.m : 0.0;
    if (touched.empty()) {
        // Empty circuit: coherence terms drop out of the model anyway.
        r.t1_us = calib.t1_us.empty() ? 1.0 : calib.t1_us.front();
        r.t2_us = calib.t2_us.empty() ? 1.0 : calib.t2_us.front();
        return r;
    }
    for (int q : touched) {
        r.t1_us += calib.t1_us.at(static_cast<size_t>(q));
        r.t2_us += calib.t2_us.at(static_cast<size_t>(q));
    }
    r.t1_us /= static_cast<double>(touched.size());
    r.t2_us /= static_cast<double>(touched.size());
    return r;
}

double p_correct(const CircuitMetrics& metrics, const EffectiveRates& rates) {
    if (!(rates.t1_us > 0) || !(rates.t2_us > 0))
        throw std::invalid_argument("T1 and T2 must be positive");
    const double decay =
        std::exp(-metrics.cd * ((rates.mu_1q_us + rates.mu_2q_us) / 2.0) / (rates.t1_us * rates.t2_us));
    const double p = decay * std::pow(1.0 - rates.gamma, metrics.g1) *
                     std::pow(1.0 - rates.beta, metrics.g2) *
                     std::pow(1.0 - rates.omega, metrics.m);
    return std::clamp(p, 0.0, 1.0);
}

double p_correct(const TranspiledCircuit& circuit, const CalibrationSnapshot& calib) {
    return p_correct(circuit.metrics, aggregate_rates(circuit, calib));
}

double predicted_error(const CircuitMetrics& metrics, const EffectiveRates& rates) {
    return 1.0 - p_correct(metrics, rates);
}

double predicted_error(const TranspiledCircuit& circuit, const CalibrationSnapshot& calib) {
    return 1.0 - p_correct(circuit, calib);
}

std::map<std::string, double> normalize_weights(const std::map<std::string, double>& p_values,
                                                const WeightingConfig& cfg) {
    if (p_values.empty()) throw std::invalid_argument("no P_Correct values to normalize");
    cfg.validate();
    std::map<std::string, double> weights;
    if (!cfg.enabled) {
        for (const auto& [name, p] : p_values) weights[name] = 1.0;
        return weights;
    }
    double p_min = 1.0, p_max = 0.0;
    for (const auto& [name, p] : p_values) {
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("P_Correct outside [0, 1] for " + name);
        p_min = std::min(p_min, p);
        p_max = std::max(p_max, p);
    }
    if (p_max - p_min <= 1e-12) {
        for (const auto& [name, p] : p_values) weights[name] = (cfg.lo + cfg.hi) / 2.0;
        return weights;
    }
    for (const auto& [name, p] : p_values)
        weights[name] = cfg.lo + (cfg.hi - cfg.lo) * (p - p_min) / (p_max - p_min);
    return weights;
}

} // namespace eqc
