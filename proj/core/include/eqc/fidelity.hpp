#pragma once

#include <map>
#include <string>

#include "eqc/noise.hpp"
#include "eqc/transpiler_types.hpp"

namespace eqc {

/// Linear rescaling range for gradient weights.
struct WeightingConfig {
    double lo{0.5};
    double hi{1.5};
    bool enabled{true};

    void validate() const {
        if (enabled && !(lo > 0 && lo <= hi))
            throw std::invalid_argument("weight bounds must satisfy 0 < lo <= hi");
    }
};

/// Calibration values averaged over the elements a transpiled circuit
/// actually uses. Time unit convention: gate times in microseconds, T1*T2 in
/// microseconds squared.
struct EffectiveRates {
    double gamma{0.0};
    double beta{0.0};
    double omega{0.0};
    double t1_us{0.0};
    double t2_us{0.0};
    double mu_1q_us{0.0};
    double mu_2q_us{0.0};
};

EffectiveRates aggregate_rates(const TranspiledCircuit& circuit, const CalibrationSnapshot& calib);

/// Probability the circuit runs error-free:
///   exp(-CD * ((mu1 + mu2)/2) / (T1*T2)) * (1-gamma)^G1 * (1-beta)^G2 * (1-omega)^M
/// clamped to [0, 1].
double p_correct(const CircuitMetrics& metrics, const EffectiveRates& rates);
double p_correct(const TranspiledCircuit& circuit, const CalibrationSnapshot& calib);

double predicted_error(const CircuitMetrics& metrics, const EffectiveRates& rates);
double predicted_error(const TranspiledCircuit& circuit, const CalibrationSnapshot& calib);

/// Min-max rescale the fleet's p values into [lo, hi]; all-equal inputs map to
/// the midpoint, disabled weighting maps everything to 1.
std::map<std::string, double> normalize_weights(const std::map<std::string, double>& p_values,
                                                const WeightingConfig& cfg);

} // namespace eqc
