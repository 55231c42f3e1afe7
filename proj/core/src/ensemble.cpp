#include "eqc/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>
#include <numbers>
#include <queue>
#include <thread>

namespace eqc {

namespace {

uint64_t params_checksum(const ParamVector& params) {
    uint64_t h = 1469598103934665603ULL;
    for (double v : params) {
        uint64_t bits;
        static_assert(sizeof(bits) == sizeof(v));
        std::memcpy(&bits, &v, sizeof(bits));
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xffu;
            h *= 1099511628211ULL;
        }
    }
    return h;
}

std::vector<PauliOp> rotation_signature(const PauliString& term) {
    std::vector<PauliOp> sig(term.size(), PauliOp::I);
    for (size_t q = 0; q < term.size(); ++q)
        if (term.paulis[q] == PauliOp::X || term.paulis[q] == PauliOp::Y) sig[q] = term.paulis[q];
    return sig;
}

} // namespace

Problem make_vqe_problem(int n_qubits, const GraphEdges& edges, double j_coupling, double b_field) {
    Problem p;
    p.kind = ProblemKind::Vqe;
    p.hamiltonian = heisenberg_hamiltonian(n_qubits, edges, j_coupling, b_field);
    p.base = vqe_ansatz(n_qubits);
    p.n_params = p.base.n_slots();
    for (size_t t = 0; t < p.hamiltonian.terms.size(); ++t)
        p.groups.push_back({measurement_circuit(p.base, p.hamiltonian.terms[t]), {t}});
    return p;
}

Problem make_qaoa_problem(int n_qubits, const GraphEdges& edges) {
    Problem p;
    p.kind = ProblemKind::Qaoa;
    p.hamiltonian = maxcut_hamiltonian(n_qubits, edges);
    p.base = qaoa_circuit(n_qubits, edges);
    p.n_params = p.base.n_slots();
    // One circuit per distinct basis-rotation suffix; every MaxCut term is
    // Z-diagonal so this collapses to a single group.
    std::vector<std::vector<PauliOp>> signatures;
    for (size_t t = 0; t < p.hamiltonian.terms.size(); ++t) {
        const auto sig = rotation_signature(p.hamiltonian.terms[t]);
        size_t gi = signatures.size();
        for (size_t s = 0; s < signatures.size(); ++s)
            if (signatures[s] == sig) {
                gi = s;
                break;
            }
        if (gi == signatures.size()) {
            signatures.push_back(sig);
            p.groups.push_back({measurement_circuit(p.base, p.hamiltonian.terms[t]), {}});
        }
        p.groups[gi].term_indices.push_back(t);
    }
    return p;
}

void TrainingConfig::validate() const {
    if (!(learning_rate > 0)) throw std::invalid_argument("learning rate must be positive");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (shots < 1) throw std::invalid_argument("shots must be >= 1");
    weighting.validate();
    if (gradient_clip && !(*gradient_clip > 0))
        throw std::invalid_argument("gradient clip must be positive");
}

MasterState::MasterState(const Problem& problem, const TrainingConfig& cfg, ParamVector initial)
    : problem_(problem), cfg_(cfg), params_(std::move(initial)) {
    if (static_cast<int>(params_.size()) != problem.n_params)
        throw std::invalid_argument("initial parameter vector has wrong length");
}

std::optional<TaskAssignment> MasterState::next_task() {
    if (finished()) return std::nullopt;
    TaskAssignment task;
    task.param_index = cursor_;
    task.params_snapshot = params_;
    task.issue_step = applied_;
    task.issue_epoch = epoch_;
    task.param_step_id = param_step_seq_;
    task.task_id = task_seq_++;

    auto [pit, inserted] = pending_.try_emplace(param_step_seq_);
    if (inserted) {
        pit->second.param_index = cursor_;
        pit->second.issue_epoch = epoch_;
        pit->second.expected =
            problem_.kind == ProblemKind::Vqe ? problem_.hamiltonian.terms.size() : 1;
    }

    if (problem_.kind == ProblemKind::Vqe) {
        task.term_index = term_cursor_;
        ++term_cursor_;
        if (term_cursor_ < problem_.hamiltonian.terms.size()) return task;
        term_cursor_ = 0;
    }
    ++param_step_seq_;
    ++cursor_;
    if (cursor_ >= problem_.n_params) {
        cursor_ = 0;
        ++epoch_;
    }
    return task;
}

bool MasterState::receive(GradientReport report) {
    if (seen_tasks_.count(report.task_id))
        throw std::invalid_argument("duplicate gradient report for task " +
                                    std::to_string(report.task_id));
    seen_tasks_.insert(report.task_id);
    ++accepted_;
    latest_p_[report.device] = report.p_correct;

    auto it = pending_.find(report.param_step_id);
    if (it == pending_.end())
        throw std::invalid_argument("report for unknown parameter step");
    Pending& group = it->second;
    group.received.push_back(std::move(report));
    if (group.received.size() < group.expected) return false;
    apply(group, group.received.back());
    pending_.erase(it);
    return true;
}

void MasterState::apply(const Pending& group, const GradientReport& last) {
    weight_table_ = normalize_weights(latest_p_, cfg_.weighting);

    double gradient = 0.0, p_sum = 0.0, w_weighted = 0.0, p_mean = 0.0;
    uint64_t step_staleness = 0;
    for (const GradientReport& r : group.received) {
        gradient += r.value;
        const double w_r = cfg_.weighting.enabled ? weight_table_.at(r.device) : 1.0;
        p_sum += r.p_correct;
        w_weighted += r.p_correct * w_r;
        p_mean += r.p_correct;
        const uint64_t staleness = applied_ - r.issue_step;
        ++staleness_hist_[static_cast<int>(staleness)];
        max_staleness_ = std::max(max_staleness_, staleness);
        step_staleness = std::max(step_staleness, staleness);
    }
    p_mean /= static_cast<double>(group.received.size());
    double weight = 1.0;
    if (cfg_.weighting.enabled)
        weight = p_sum > 0 ? w_weighted / p_sum
                           : (cfg_.weighting.lo + cfg_.weighting.hi) / 2.0;
    if (cfg_.gradient_clip) gradient = std::clamp(gradient, -*cfg_.gradient_clip, *cfg_.gradient_clip);

    const int i = group.param_index;
    params_[static_cast<size_t>(i)] -= weight * cfg_.learning_rate * gradient;

    UpdateRow row;
    row.step = applied_;
    row.epoch = group.issue_epoch;
    row.param_index = i;
    row.device = last.device;
    row.gradient = gradient;
    row.weight = weight;
    row.p_correct = p_mean;
    row.staleness = step_staleness;
    row.virtual_time_s = last.complete_time_s;
    row.ideal_loss = ideal_loss(problem_.base, params_, problem_.hamiltonian);
    row.params_checksum = params_checksum(params_);
    rows_.push_back(std::move(row));
    ++applied_;
}

void apply_update(MasterState& master, GradientReport report, const TrainingConfig& cfg) {
    (void)cfg; // the master was constructed with the same config
    master.receive(std::move(report));
}

ClientNode::ClientNode(const DeviceProfile& device, const Problem& problem, uint64_t seed)
    : device_(&device), problem_(&problem),
      rng_(Rng::stream(seed, {fnv1a64(device.name), device.latency.stream_id})) {
    if (device.n_qubits < problem.base.n_qubits())
        throw std::invalid_argument("device " + device.name + " is too small for the problem");
    circuits_.reserve(problem.groups.size());
    for (const auto& group : problem.groups)
        circuits_.push_back(transpile(group.circuit, device));
}

GradientReport ClientNode::step(const TaskAssignment& task, uint64_t shots, double start_time_s) {
    const ParamVector fwd = shift_params(task.params_snapshot, static_cast<size_t>(task.param_index), 1);
    const ParamVector bck = shift_params(task.params_snapshot, static_cast<size_t>(task.param_index), -1);
    if (fwd == bck) throw std::logic_error("degenerate shift: forward equals backward bindings");

    std::vector<size_t> group_ids;
    if (task.term_index) {
        group_ids.push_back(*task.term_index);
    } else {
        group_ids.resize(problem_->groups.size());
        for (size_t g = 0; g < group_ids.size(); ++g) group_ids[g] = g;
    }

    const CalibrationSnapshot calib_at_submit = current_calibration(*device_, start_time_s);
    double loss_fwd = 0.0, loss_bck = 0.0, p_acc = 0.0;
    double clock = start_time_s;
    for (size_t g : group_ids) {
        const TranspiledCircuit& tc = circuits_.at(g);
        const JobResult job_f = submit_job(*device_, tc.bind(fwd), shots, clock, rng_);
        clock = job_f.completion_time_s;
        const JobResult job_b = submit_job(*device_, tc.bind(bck), shots, clock, rng_);
        clock = job_b.completion_time_s;
        for (size_t t : problem_->groups[g].term_indices) {
            const PauliString& term = problem_->hamiltonian.terms[t];
            loss_fwd += expectation_from_counts(job_f.counts, term);
            loss_bck += expectation_from_counts(job_b.counts, term);
        }
        p_acc += p_correct(tc, calib_at_submit);
        if (problem_->kind == ProblemKind::Qaoa) {
            for (const auto& [bits, c] : job_f.counts) sampled_[bits] += c;
            for (const auto& [bits, c] : job_b.counts) sampled_[bits] += c;
        }
    }

    GradientReport report;
    report.param_index = task.param_index;
    report.term_index = task.term_index;
    report.value = gradient_from_pair(loss_fwd, loss_bck);
    report.p_correct = p_acc / static_cast<double>(group_ids.size());
    report.device = device_->name;
    report.issue_step = task.issue_step;
    report.issue_epoch = task.issue_epoch;
    report.param_step_id = task.param_step_id;
    report.task_id = task.task_id;
    report.submit_time_s = start_time_s;
    report.complete_time_s = clock;
    return report;
}

namespace {

ParamVector initial_params(const Problem& problem, const TrainingConfig& cfg) {
    if (cfg.initial_params) {
        if (static_cast<int>(cfg.initial_params->size()) != problem.n_params)
            throw std::invalid_argument("initial parameter vector has wrong length");
        return *cfg.initial_params;
    }
    Rng rng = Rng::stream(cfg.seed, {0x1a17u});
    ParamVector params(static_cast<size_t>(problem.n_params));
    for (double& v : params) v = rng.uniform(-std::numbers::pi / 2, std::numbers::pi / 2);
    return params;
}

void finalize_history(TrainingHistory& h, const MasterState& master, const TrainingConfig& cfg) {
    h.rows = master.rows();
    h.staleness_histogram = master.staleness_histogram();
    h.max_staleness = master.max_staleness();
    h.accepted_reports = master.accepted_reports();
    h.applied_updates = master.applied_updates();
    h.final_params = master.params();
    for (const UpdateRow& row : h.rows)
        h.final_virtual_time_s = std::max(h.final_virtual_time_s, row.virtual_time_s);

    h.epoch_loss.assign(static_cast<size_t>(cfg.epochs), 0.0);
    std::vector<char> seen(static_cast<size_t>(cfg.epochs), 0);
    for (const UpdateRow& row : h.rows)
        if (row.epoch >= 0 && row.epoch < cfg.epochs) {
            h.epoch_loss[static_cast<size_t>(row.epoch)] = row.ideal_loss;
            seen[static_cast<size_t>(row.epoch)] = 1;
        }
    for (size_t e = 1; e < h.epoch_loss.size(); ++e)
        if (!seen[e]) h.epoch_loss[e] = h.epoch_loss[e - 1];

    const int tail = std::max(1, cfg.epochs / 10);
    double acc = 0;
    int count = 0;
    for (const UpdateRow& row : h.rows)
        if (row.epoch >= cfg.epochs - tail) {
            acc += row.ideal_loss;
            ++count;
        }
    h.converged_loss = count ? acc / count : (h.rows.empty() ? 0.0 : h.rows.back().ideal_loss);

    const double hours = h.final_virtual_time_s / 3600.0;
    for (const auto& [name, tasks] : h.tasks_per_device)
        h.throughput_per_hour[name] = hours > 0 ? static_cast<double>(tasks) / hours : 0.0;

    if (cfg.staleness_cap) (void)staleness_audit(h, cfg.staleness_cap);
}

TrainingHistory run_deterministic(const Problem& problem, const std::vector<const DeviceProfile*>& fleet,
                                  const TrainingConfig& cfg) {
    MasterState master(problem, cfg, initial_params(problem, cfg));
    std::vector<std::unique_ptr<ClientNode>> clients;
    clients.reserve(fleet.size());
    for (const DeviceProfile* d : fleet)
        clients.push_back(std::make_unique<ClientNode>(*d, problem, cfg.seed));

    TrainingHistory history;
    for (const DeviceProfile* d : fleet) history.tasks_per_device[d->name] = 0;

    struct Event {
        double time;
        std::string device;
        size_t client;
        GradientReport report;
    };
    auto later = [](const Event& a, const Event& b) {
        if (a.time != b.time) return a.time > b.time;
        return a.device > b.device;
    };
    std::priority_queue<Event, std::vector<Event>, decltype(later)> queue(later);

    auto issue = [&](size_t ci, double at) {
        auto task = master.next_task();
        if (!task) return;
        GradientReport report = clients[ci]->step(*task, cfg.shots, at);
        ++history.tasks_per_device[clients[ci]->device().name];
        queue.push(Event{report.complete_time_s, clients[ci]->device().name, ci, std::move(report)});
    };

    for (size_t ci = 0; ci < clients.size(); ++ci) issue(ci, 0.0);
    while (!queue.empty()) {
        Event ev = queue.top();
        queue.pop();
        master.receive(std::move(ev.report));
        issue(ev.client, ev.time);
    }
    for (const auto& client : clients)
        for (const auto& [bits, c] : client->sampled_counts()) history.sampled_counts[bits] += c;
    finalize_history(history, master, cfg);
    return history;
}

TrainingHistory run_concurrent(const Problem& problem, const std::vector<const DeviceProfile*>& fleet,
                               const TrainingConfig& cfg) {
    MasterState master(problem, cfg, initial_params(problem, cfg));
    TrainingHistory history;
    for (const DeviceProfile* d : fleet) history.tasks_per_device[d->name] = 0;

    std::mutex mutex;
    std::exception_ptr failure;
    std::vector<std::thread> workers;
    workers.reserve(fleet.size());
    for (const DeviceProfile* d : fleet) {
        workers.emplace_back([&, d] {
            try {
                ClientNode client(*d, problem, cfg.seed);
                double clock = 0.0;
                while (true) {
                    std::optional<TaskAssignment> task;
                    {
                        std::lock_guard lock(mutex);
                        if (failure) return;
                        task = master.next_task();
                    }
                    if (!task) {
                        std::lock_guard lock(mutex);
                        for (const auto& [bits, c] : client.sampled_counts())
                            history.sampled_counts[bits] += c;
                        return;
                    }
                    GradientReport report = client.step(*task, cfg.shots, clock);
                    clock = report.complete_time_s;
                    std::lock_guard lock(mutex);
                    master.receive(std::move(report));
                    ++history.tasks_per_device[d->name];
                }
            } catch (...) {
                std::lock_guard lock(mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& w : workers) w.join();
    if (failure) std::rethrow_exception(failure);
    finalize_history(history, master, cfg);
    return history;
}

} // namespace

TrainingHistory run_training(const Problem& problem, const std::vector<DeviceProfile>& fleet,
                             const TrainingConfig& cfg) {
    cfg.validate();
    if (fleet.empty()) throw std::invalid_argument("fleet must not be empty");
    for (const DeviceProfile& d : fleet)
        if (d.n_qubits < problem.base.n_qubits())
            throw std::invalid_argument("device " + d.name + " has fewer qubits than the problem");
    std::vector<const DeviceProfile*> ordered;
    ordered.reserve(fleet.size());
    for (const DeviceProfile& d : fleet) ordered.push_back(&d);
    std::sort(ordered.begin(), ordered.end(),
              [](const DeviceProfile* a, const DeviceProfile* b) { return a->name < b->name; });
    return cfg.mode == RunMode::Deterministic ? run_deterministic(problem, ordered, cfg)
                                              : run_concurrent(problem, ordered, cfg);
}

double failure_cdf(int trials, double p_fail, int max_failures) {
    if (trials < 0 || max_failures < 0 || max_failures > trials)
        throw std::invalid_argument("need 0 <= max_failures <= trials");
    if (!(p_fail >= 0.0 && p_fail <= 1.0))
        throw std::invalid_argument("failure probability outside [0, 1]");
    if (p_fail == 0.0) return 1.0;
    if (p_fail == 1.0) return max_failures >= trials ? 1.0 : 0.0;
    double sum = 0.0;
    for (int j = 0; j <= max_failures; ++j) {
        const double log_choose = std::lgamma(trials + 1.0) - std::lgamma(j + 1.0) -
                                  std::lgamma(trials - j + 1.0);
        sum += std::exp(log_choose + (trials - j) * std::log1p(-p_fail) + j * std::log(p_fail));
    }
    return std::min(1.0, sum);
}

StalenessAudit staleness_audit(const TrainingHistory& history, std::optional<int> cap) {
    StalenessAudit audit;
    audit.histogram = history.staleness_histogram;
    audit.max_staleness = history.max_staleness;
    if (cap && audit.max_staleness > static_cast<uint64_t>(*cap))
        throw std::runtime_error("staleness bound exceeded: max " +
                                 std::to_string(audit.max_staleness) + " > cap " +
                                 std::to_string(*cap));
    return audit;
}

} // namespace eqc
