#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "eqc/device.hpp"
#include "eqc/fidelity.hpp"
#include "eqc/transpiler.hpp"
#include "eqc/vqa.hpp"

namespace eqc {

enum class ProblemKind { Vqe, Qaoa };
enum class RunMode { Deterministic, Concurrent };

/// A training problem: Hamiltonian, ansatz, and the measurement circuits the
/// clients execute. VQE tasks are issued per Pauli term; QAOA tasks evaluate
/// the whole loss for one parameter.
struct Problem {
    ProblemKind kind{ProblemKind::Vqe};
    Hamiltonian hamiltonian;
    Circuit base;
    int n_params{0};

    struct MeasurementGroup {
        Circuit circuit;
        std::vector<size_t> term_indices;
    };
    std::vector<MeasurementGroup> groups;
};

Problem make_vqe_problem(int n_qubits, const GraphEdges& edges, double j_coupling, double b_field);
Problem make_qaoa_problem(int n_qubits, const GraphEdges& edges);

struct TrainingConfig {
    double learning_rate{0.1};
    int epochs{100};
    uint64_t shots{8192};
    WeightingConfig weighting{0.5, 1.5, false};
    uint64_t seed{1};
    RunMode mode{RunMode::Deterministic};
    std::optional<int> staleness_cap;   // diagnostic bound D
    std::optional<double> gradient_clip; // diagnostic bound C, off by default
    std::optional<ParamVector> initial_params; // default: U(-pi/2, pi/2) per slot

    void validate() const;
};

struct TaskAssignment {
    int param_index{0};
    std::optional<size_t> term_index; // set for VQE Pauli-term tasks
    ParamVector params_snapshot;
    uint64_t issue_step{0}; // tau: applied updates at dispatch
    int issue_epoch{0};
    uint64_t param_step_id{0}; // aggregation barrier key
    uint64_t task_id{0};
};

struct GradientReport {
    int param_index{0};
    std::optional<size_t> term_index;
    double value{0.0};
    double p_correct{1.0};
    std::string device;
    uint64_t issue_step{0};
    uint64_t apply_step{0};
    int issue_epoch{0};
    uint64_t param_step_id{0};
    uint64_t task_id{0};
    double submit_time_s{0.0};
    double complete_time_s{0.0};
};

struct UpdateRow {
    uint64_t step{0};
    int epoch{0};
    int param_index{0};
    std::string device;
    double gradient{0.0};
    double weight{1.0};
    double p_correct{1.0};
    uint64_t staleness{0};
    double virtual_time_s{0.0};
    double ideal_loss{0.0};
    uint64_t params_checksum{0};
};

struct TrainingHistory {
    std::vector<UpdateRow> rows;
    std::map<std::string, uint64_t> tasks_per_device;
    std::map<std::string, double> throughput_per_hour;
    std::map<int, uint64_t> staleness_histogram; // per report, t - tau
    uint64_t max_staleness{0};
    uint64_t accepted_reports{0};
    uint64_t applied_updates{0};
    ParamVector final_params;
    double final_virtual_time_s{0.0};
    std::vector<double> epoch_loss;
    double converged_loss{0.0};
    /// Raw measurement outcomes across all jobs (QAOA runs only; VQE counts
    /// live in rotated bases and are not aggregated).
    Histogram sampled_counts;
};

/// Single writer of parameters, weights and history. Tasks go out cyclically
/// over parameters (VQE: per-term subtasks first); an update applies when its
/// parameter-step is fully reported.
class MasterState {
  public:
    MasterState(const Problem& problem, const TrainingConfig& cfg, ParamVector initial);

    bool finished() const { return epoch_ >= cfg_.epochs; }
    std::optional<TaskAssignment> next_task();

    /// Returns true when the report completed a parameter-step and the update
    /// was applied. Throws on duplicate task ids.
    bool receive(GradientReport report);

    const ParamVector& params() const { return params_; }
    int epoch() const { return epoch_; }
    uint64_t applied_updates() const { return applied_; }
    uint64_t accepted_reports() const { return accepted_; }
    const std::vector<UpdateRow>& rows() const { return rows_; }
    const std::map<int, uint64_t>& staleness_histogram() const { return staleness_hist_; }
    uint64_t max_staleness() const { return max_staleness_; }
    const std::map<std::string, double>& weight_table() const { return weight_table_; }

  private:
    struct Pending {
        int param_index{0};
        int issue_epoch{0};
        size_t expected{0};
        std::vector<GradientReport> received;
    };
    void apply(const Pending& group, const GradientReport& last);

    const Problem& problem_;
    const TrainingConfig& cfg_;
    ParamVector params_;
    int epoch_{0};
    int cursor_{0};
    size_t term_cursor_{0};
    uint64_t applied_{0};
    uint64_t accepted_{0};
    uint64_t task_seq_{0};
    uint64_t param_step_seq_{0};
    std::map<uint64_t, Pending> pending_;
    std::map<std::string, double> latest_p_;
    std::map<std::string, double> weight_table_;
    std::set<uint64_t> seen_tasks_;
    std::vector<UpdateRow> rows_;
    std::map<int, uint64_t> staleness_hist_;
    uint64_t max_staleness_{0};
};

/// Spec-shaped single-report update path (QAOA tasks / tests); equivalent to
/// MasterState::receive for parameter-level tasks.
void apply_update(MasterState& master, GradientReport report, const TrainingConfig& cfg);

/// One device worker: caches transpiled measurement circuits at construction
/// and turns task assignments into gradient reports.
class ClientNode {
  public:
    ClientNode(const DeviceProfile& device, const Problem& problem, uint64_t seed);

    GradientReport step(const TaskAssignment& task, uint64_t shots, double start_time_s);
    const DeviceProfile& device() const { return *device_; }
    const TranspiledCircuit& circuit_for_group(size_t group) const { return circuits_.at(group); }
    const Histogram& sampled_counts() const { return sampled_; }

  private:
    const DeviceProfile* device_;
    const Problem* problem_;
    std::vector<TranspiledCircuit> circuits_;
    Rng rng_;
    Histogram sampled_;
};

TrainingHistory run_training(const Problem& problem, const std::vector<DeviceProfile>& fleet,
                             const TrainingConfig& cfg);

/// Binomial CDF: probability of at most `max_failures` failures in `trials`
/// independent attempts failing with probability `p_fail` each.
double failure_cdf(int trials, double p_fail, int max_failures);

struct StalenessAudit {
    uint64_t max_staleness{0};
    std::map<int, uint64_t> histogram;
};

/// Summarize gradient delay; throws if a configured staleness cap was
/// exceeded.
StalenessAudit staleness_audit(const TrainingHistory& history,
                               std::optional<int> cap = std::nullopt);

} // namespace eqc
