#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "eqc/noise.hpp"
#include "eqc/rng.hpp"
#include "eqc/transpiler_types.hpp"

namespace eqc {

enum class DriftTarget { Gamma, Beta, Omega };

/// Linear multiplicative degradation of error parameters with time since the
/// last calibration; clamped to [0, 1].
struct DriftModel {
    double rate_per_hour{0.0};
    std::set<DriftTarget> affected;
};

struct LatencyModel {
    double queue_wait_s{0.0};
    double jitter_s{0.0};
    double exec_per_shot_s{0.0};
    uint64_t stream_id{0}; // derived from the device name at load time
};

/// One virtual QPU: topology, basis gates, base calibration and its temporal
/// behavior. Immutable after load.
struct DeviceProfile {
    std::string name;
    int n_qubits{0};
    std::vector<std::pair<int, int>> coupling;
    std::set<GateKind> basis_gates;
    CalibrationSnapshot base_calibration;
    DriftModel drift;
    LatencyModel latency;
    double calibration_period_s{0.0};

    void validate() const;
};

/// Parse and validate one profile document; unknown fields are rejected.
DeviceProfile load_profile(const nlohmann::json& doc);
DeviceProfile load_profile_file(const std::filesystem::path& path);

/// Calibration in effect at virtual time `now`: affected error parameters
/// scale by (1 + rate * staleness_hours), resetting every calibration period.
CalibrationSnapshot current_calibration(const DeviceProfile& device, double now_s);

struct JobResult {
    Histogram counts;
    double completion_time_s{0.0};
};

/// Run the circuit under the device's current calibration and charge queue
/// wait plus per-shot execution time.
JobResult submit_job(const DeviceProfile& device, const TranspiledCircuit& circuit, uint64_t shots,
                     double submit_time_s, Rng& rng);

/// Load every *.json profile in the directory (sorted by filename).
std::vector<DeviceProfile> fleet_from_dir(const std::filesystem::path& dir);

} // namespace eqc
