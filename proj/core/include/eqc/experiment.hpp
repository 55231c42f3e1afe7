#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "eqc/ensemble.hpp"

namespace eqc {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kArtifactVersion = "0.1.0";
inline constexpr const char* kMetricsHeader =
    "step,epoch,param_index,device,gradient,weight,p_correct,staleness,virtual_time_s,ideal_loss";

struct ExperimentConfig {
    std::string problem_kind; // vqe | qaoa | ghz
    int n_qubits{0};
    GraphEdges edges;
    double j_coupling{1.0};
    double b_field{1.0};
    std::optional<double> reference_energy;
    TrainingConfig training;
    std::optional<std::string> fleet_dir;
};

ExperimentConfig load_experiment_config(const std::filesystem::path& path);
ExperimentConfig parse_experiment_config(const nlohmann::json& doc);

/// CLI overrides recorded in the run manifest.
struct Overrides {
    std::optional<uint64_t> seed;
    std::optional<WeightingConfig> weights;
    std::optional<RunMode> mode;
    std::optional<std::string> fleet_dir;

    nlohmann::json to_json() const;
    void apply(ExperimentConfig& cfg) const;
};

struct RunPaths {
    std::filesystem::path metrics_csv;
    std::filesystem::path summary_json;
    std::filesystem::path manifest_json;
};

struct RunResult {
    TrainingHistory history;
    RunPaths paths;
    nlohmann::json summary;
};

/// Train per the config and emit metrics.csv + summary.json + manifest.json
/// (manifest last).
RunResult run_training_experiment(const ExperimentConfig& cfg,
                                  const std::vector<DeviceProfile>& fleet,
                                  const std::filesystem::path& out_dir,
                                  const nlohmann::json& config_echo, const Overrides& overrides);

struct ModelValidationPoint {
    std::string device;
    double staleness_s{0.0};
    double predicted_error{0.0};
    double observed_error{0.0};
    double p_correct{0.0};
};

struct ModelValidationResult {
    std::vector<ModelValidationPoint> points;
    double pearson{0.0};
    RunPaths paths;
};

/// GHZ(n) across the fleet at several staleness points: predicted error from
/// the quality model vs observed mixed-parity fraction from noisy execution.
ModelValidationResult run_model_validation(const std::vector<DeviceProfile>& fleet,
                                           const std::filesystem::path& out_dir, int ghz_qubits,
                                           uint64_t shots, uint64_t seed,
                                           const Overrides& overrides);

double pearson_correlation(const std::vector<double>& xs, const std::vector<double>& ys);

void write_metrics_csv(const std::filesystem::path& path, const TrainingHistory& history);

/// Mixed-parity fraction of a GHZ histogram (anything that is not all-zeros
/// or all-ones).
double ghz_error_fraction(const Histogram& counts);

uint64_t file_fingerprint(const std::filesystem::path& path);

Problem make_problem(const ExperimentConfig& cfg);

} // namespace eqc
