#include <doctest.h>

#include <cmath>
#include <numbers>

#include "eqc/ensemble.hpp"
#include "test_helpers.hpp"

using namespace eqc;
using test::kRing4;
using test::test_profile;

namespace {

constexpr double kPi = std::numbers::pi;

// Single-parameter RY rotation against a <Z> loss; parameter-level tasks.
Problem toy_problem() {
    Problem p;
    p.kind = ProblemKind::Qaoa;
    p.hamiltonian.n_qubits = 1;
    p.hamiltonian.terms.push_back(parse_pauli("Z"));
    Circuit base(1);
    base.add_slot(GateKind::RY, 0, 0);
    base.add(GateKind::MEASURE, 0);
    p.base = base;
    p.n_params = 1;
    p.groups.push_back({base, {0}});
    return p;
}

TrainingConfig toy_config(uint64_t seed, int epochs = 20, uint64_t shots = 256) {
    TrainingConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.epochs = epochs;
    cfg.shots = shots;
    cfg.weighting = {0.5, 1.5, false};
    cfg.seed = seed;
    cfg.initial_params = ParamVector{1.5};
    return cfg;
}

GradientReport fake_report(const TaskAssignment& task, const std::string& device, double g,
                           double p) {
    GradientReport r;
    r.param_index = task.param_index;
    r.term_index = task.term_index;
    r.value = g;
    r.p_correct = p;
    r.device = device;
    r.issue_step = task.issue_step;
    r.issue_epoch = task.issue_epoch;
    r.param_step_id = task.param_step_id;
    r.task_id = task.task_id;
    return r;
}

} // namespace

TEST_CASE("qaoa tasks cycle over parameters and bump the epoch on wrap") {
    const Problem problem = make_qaoa_problem(4, kRing4);
    TrainingConfig cfg = toy_config(1, 2);
    cfg.initial_params = ParamVector{0.1, 0.2};
    MasterState master(problem, cfg, *cfg.initial_params);
    std::vector<int> order;
    for (int k = 0; k < 4; ++k) {
        auto task = master.next_task();
        REQUIRE(task.has_value());
        order.push_back(task->param_index);
        master.receive(fake_report(*task, "dev", 0.0, 1.0));
    }
    CHECK(order == std::vector<int>{0, 1, 0, 1});
    CHECK(master.epoch() == 2);
    CHECK(master.next_task() == std::nullopt);
}

TEST_CASE("vqe parameter steps issue one task per Hamiltonian term") {
    const Problem problem = make_vqe_problem(4, kRing4, 1.0, 1.0);
    TrainingConfig cfg = toy_config(2, 1);
    cfg.initial_params = ParamVector(16, 0.0);
    MasterState master(problem, cfg, *cfg.initial_params);
    for (int i = 0; i < 2; ++i)
        for (size_t t = 0; t < 16; ++t) {
            auto task = master.next_task();
            REQUIRE(task.has_value());
            CHECK(task->param_index == i);
            REQUIRE(task->term_index.has_value());
            CHECK(*task->term_index == t);
        }
}

TEST_CASE("task snapshots are immutable across later updates") {
    const Problem problem = make_qaoa_problem(4, kRing4);
    TrainingConfig cfg = toy_config(3, 5);
    cfg.initial_params = ParamVector{1.0, 2.0};
    MasterState master(problem, cfg, *cfg.initial_params);
    auto first = master.next_task();
    auto second = master.next_task();
    master.receive(fake_report(*first, "dev", 0.5, 1.0));
    CHECK(second->params_snapshot == ParamVector{1.0, 2.0});
    CHECK(master.params()[0] == doctest::Approx(1.0 - 0.1 * 0.5));
}

TEST_CASE("update arithmetic follows the weighted rule") {
    const Problem problem = make_qaoa_problem(4, kRing4);

    SUBCASE("plain SGD when weighting is disabled") {
        TrainingConfig cfg = toy_config(4, 5);
        cfg.initial_params = ParamVector{1.0, 0.0};
        MasterState master(problem, cfg, *cfg.initial_params);
        auto task = master.next_task();
        apply_update(master, fake_report(*task, "dev", 0.4, 0.9), cfg);
        CHECK(master.params()[0] == doctest::Approx(0.96).epsilon(1e-15));
        CHECK(master.rows().back().weight == doctest::Approx(1.0));
    }
    SUBCASE("normalized weight scales the step") {
        TrainingConfig cfg = toy_config(5, 5);
        cfg.weighting = {0.5, 1.5, true};
        cfg.initial_params = ParamVector{1.0, 1.0};
        MasterState master(problem, cfg, *cfg.initial_params);
        auto t0 = master.next_task();
        master.receive(fake_report(*t0, "noisy", 0.0, 0.2));
        CHECK(master.params()[0] == doctest::Approx(1.0)); // zero gradient
        CHECK(master.rows().back().weight == doctest::Approx(1.0)); // single reporter: midpoint
        auto t1 = master.next_task();
        master.receive(fake_report(*t1, "clean", 0.4, 0.8));
        CHECK(master.rows().back().weight == doctest::Approx(1.5));
        CHECK(master.params()[1] == doctest::Approx(0.94).epsilon(1e-15));
    }
    SUBCASE("duplicate reports are rejected") {
        TrainingConfig cfg = toy_config(6, 5);
        cfg.initial_params = ParamVector{0.0, 0.0};
        MasterState master(problem, cfg, *cfg.initial_params);
        auto task = master.next_task();
        master.receive(fake_report(*task, "dev", 0.1, 1.0));
        CHECK_THROWS_AS(master.receive(fake_report(*task, "dev", 0.1, 1.0)),
                        std::invalid_argument);
    }
}

TEST_CASE("client gradient on the noiseless toy problem is the analytic slope") {
    const Problem problem = toy_problem();
    const DeviceProfile dev = test_profile("toy", 1, {});
    ClientNode client(dev, problem, 11);
    TaskAssignment task;
    task.param_index = 0;
    task.params_snapshot = {kPi / 2};
    const GradientReport r = client.step(task, 8192, 0.0);
    // loss(theta) = cos(theta); slope at pi/2 is -1 and the two shifted
    // evaluations are deterministic eigenstates.
    CHECK(r.value == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(r.p_correct == doctest::Approx(1.0));
    CHECK(r.device == "toy");
}

TEST_CASE("reported p_correct degrades as the calibration goes stale") {
    DeviceProfile dev = test_profile("drifty", 1, {}, 0.001, 0.0, 0.02, 100.0, 120.0);
    dev.drift.rate_per_hour = 0.5;
    dev.drift.affected = {DriftTarget::Gamma, DriftTarget::Omega};
    const Problem problem = toy_problem();
    ClientNode client(dev, problem, 12);
    TaskAssignment task;
    task.param_index = 0;
    task.params_snapshot = {0.4};
    const GradientReport fresh = client.step(task, 64, 0.0);
    TaskAssignment later = task;
    later.task_id = 1;
    const GradientReport stale = client.step(later, 64, 2 * 3600.0);
    CHECK(stale.p_correct < fresh.p_correct);
}

TEST_CASE("single zero-latency device reproduces the synchronous SGD trace") {
    const Problem problem = make_qaoa_problem(4, kRing4);
    DeviceProfile dev = test_profile("sync", 4, test::full_coupling(4));
    dev.latency = {0.0, 0.0, 0.0, dev.latency.stream_id};
    TrainingConfig cfg = toy_config(7, 4, 128);
    cfg.initial_params = ParamVector{0.3, -0.2};

    const TrainingHistory history = run_training(problem, {dev}, cfg);

    // Synchronous oracle: same client stream, updates applied immediately.
    ClientNode client(dev, problem, cfg.seed);
    ParamVector params = *cfg.initial_params;
    std::vector<double> gradients;
    double clock = 0.0;
    uint64_t task_id = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch)
        for (int i = 0; i < problem.n_params; ++i) {
            TaskAssignment task;
            task.param_index = i;
            task.params_snapshot = params;
            task.task_id = task_id++;
            const GradientReport r = client.step(task, cfg.shots, clock);
            clock = r.complete_time_s;
            params[static_cast<size_t>(i)] -= cfg.learning_rate * r.value;
            gradients.push_back(r.value);
        }

    REQUIRE(history.rows.size() == gradients.size());
    for (size_t k = 0; k < gradients.size(); ++k)
        CHECK(history.rows[k].gradient == gradients[k]);
    CHECK(history.final_params == params);
    CHECK(history.max_staleness == 0);
}

TEST_CASE("deterministic mode is bit-reproducible") {
    const Problem problem = make_vqe_problem(4, kRing4, 1.0, 1.0);
    std::vector<DeviceProfile> fleet;
    fleet.push_back(test_profile("alpha", 5, test::line_coupling(5), 0.002, 0.02, 0.02, 90, 110));
    fleet.push_back(test_profile("bravo", 4, test::full_coupling(4), 0.001, 0.01, 0.01, 120, 140));
    fleet[0].latency = {30.0, 5.0, 0.001, fleet[0].latency.stream_id};
    fleet[1].latency = {5.0, 1.0, 0.0005, fleet[1].latency.stream_id};
    TrainingConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.epochs = 1;
    cfg.shots = 64;
    cfg.seed = 99;

    const TrainingHistory a = run_training(problem, fleet, cfg);
    const TrainingHistory b = run_training(problem, fleet, cfg);
    REQUIRE(a.rows.size() == b.rows.size());
    for (size_t k = 0; k < a.rows.size(); ++k) {
        CHECK(a.rows[k].params_checksum == b.rows[k].params_checksum);
        CHECK(a.rows[k].gradient == b.rows[k].gradient);
        CHECK(a.rows[k].device == b.rows[k].device);
        CHECK(a.rows[k].virtual_time_s == b.rows[k].virtual_time_s);
    }
    CHECK(a.final_params == b.final_params);
    CHECK(a.staleness_histogram == b.staleness_histogram);

    TrainingConfig other = cfg;
    other.seed = 100;
    const TrainingHistory c = run_training(problem, fleet, other);
    CHECK(a.final_params != c.final_params);
}

TEST_CASE("update serialization accounting") {
    const Problem problem = make_vqe_problem(4, kRing4, 1.0, 1.0);
    std::vector<DeviceProfile> fleet;
    for (const char* name : {"a1", "b2", "c3"})
        fleet.push_back(test_profile(name, 4, test::full_coupling(4)));
    TrainingConfig cfg;
    cfg.epochs = 1;
    cfg.shots = 32;
    cfg.seed = 5;
    const TrainingHistory h = run_training(problem, fleet, cfg);
    CHECK(h.applied_updates == 16);                 // one per parameter
    CHECK(h.accepted_reports == 16 * 16);           // one per term task
    CHECK(h.rows.size() == h.applied_updates);
    uint64_t tasks = 0;
    for (const auto& [name, n] : h.tasks_per_device) tasks += n;
    CHECK(tasks == h.accepted_reports);
    CHECK(h.max_staleness >= 1);
    CHECK(h.max_staleness <= 3 * 16);
}

TEST_CASE("a slow device raises observed staleness") {
    const Problem problem = make_qaoa_problem(4, kRing4);
    std::vector<DeviceProfile> fleet;
    fleet.push_back(test_profile("fast", 4, test::full_coupling(4)));
    fleet.push_back(test_profile("slow", 4, test::full_coupling(4)));
    fleet[0].latency = {1.0, 0.0, 0.0, fleet[0].latency.stream_id};
    fleet[1].latency = {10.0, 0.0, 0.0, fleet[1].latency.stream_id};
    TrainingConfig cfg = toy_config(8, 6, 64);
    cfg.initial_params = ParamVector{0.3, 0.4};
    const TrainingHistory h = run_training(problem, fleet, cfg);
    const StalenessAudit audit = staleness_audit(h);
    CHECK(audit.max_staleness >= 1);
    CHECK(audit.histogram.at(0) > 0);
    CHECK_THROWS_AS(staleness_audit(h, 0), std::runtime_error);
}

TEST_CASE("weighting keeps the clean device on top at every update") {
    const Problem problem = toy_problem();
    std::vector<DeviceProfile> fleet;
    fleet.push_back(test_profile("clean", 1, {}, 0.0005, 0.0, 0.005, 150, 180));
    fleet.push_back(test_profile("grimy", 1, {}, 0.05, 0.0, 0.25, 40, 50));
    fleet[0].latency = {2.0, 0.0, 0.001, fleet[0].latency.stream_id};
    fleet[1].latency = {3.0, 0.0, 0.001, fleet[1].latency.stream_id};
    TrainingConfig cfg = toy_config(9, 30, 128);
    cfg.weighting = {0.5, 1.5, true};
    const TrainingHistory h = run_training(problem, fleet, cfg);
    // Skip the warmup rows before both devices have reported once.
    size_t start = 0;
    for (size_t k = 0; k < h.rows.size(); ++k)
        if (h.rows[k].device == "grimy") {
            start = k;
            break;
        }
    REQUIRE(start > 0);
    double clean_min = 2.0, grimy_max = 0.0;
    for (size_t k = start; k < h.rows.size(); ++k) {
        const UpdateRow& row = h.rows[k];
        if (row.device == "clean") clean_min = std::min(clean_min, row.weight);
        if (row.device == "grimy") grimy_max = std::max(grimy_max, row.weight);
    }
    CHECK(clean_min >= grimy_max);
    CHECK(grimy_max == doctest::Approx(0.5));
    CHECK(clean_min == doctest::Approx(1.5));
}

TEST_CASE("two identical devices double task throughput") {
    const Problem problem = make_qaoa_problem(4, kRing4);
    auto make_fleet = [&](int k) {
        std::vector<DeviceProfile> fleet;
        for (int d = 0; d < k; ++d) {
            DeviceProfile p = test_profile("dev" + std::to_string(d), 4, test::full_coupling(4));
            p.latency = {8.0, 0.0, 0.001, p.latency.stream_id};
            fleet.push_back(p);
        }
        return fleet;
    };
    TrainingConfig cfg = toy_config(10, 12, 64);
    cfg.initial_params = ParamVector{0.3, 0.4};
    const TrainingHistory h1 = run_training(problem, make_fleet(1), cfg);
    const TrainingHistory h2 = run_training(problem, make_fleet(2), cfg);
    double r1 = 0, r2 = 0;
    for (const auto& [name, rate] : h1.throughput_per_hour) r1 += rate;
    for (const auto& [name, rate] : h2.throughput_per_hour) r2 += rate;
    CHECK(r2 / r1 > 2.0 * 0.8);
    CHECK(r2 / r1 < 2.0 * 1.2);
}

TEST_CASE("concurrent mode matches deterministic convergence on the toy problem") {
    const Problem problem = toy_problem();
    std::vector<DeviceProfile> fleet;
    fleet.push_back(test_profile("w0", 1, {}));
    fleet.push_back(test_profile("w1", 1, {}));
    double det_sum = 0, conc_sum = 0;
    for (uint64_t seed = 0; seed < 10; ++seed) {
        TrainingConfig cfg = toy_config(200 + seed, 40, 256);
        cfg.mode = RunMode::Deterministic;
        const TrainingHistory det = run_training(problem, fleet, cfg);
        cfg.mode = RunMode::Concurrent;
        const TrainingHistory conc = run_training(problem, fleet, cfg);
        det_sum += det.converged_loss;
        conc_sum += conc.converged_loss;
        CHECK(conc.applied_updates == det.applied_updates);
        CHECK(conc.accepted_reports == det.accepted_reports);
    }
    // Both modes drive the toy loss to its -1 floor; means agree inside
    // shot-noise wiggle.
    CHECK(det_sum / 10 < -0.9);
    CHECK(std::abs(det_sum - conc_sum) / 10 < 0.05);
}

TEST_CASE("run_training validates its inputs") {
    const Problem problem = make_qaoa_problem(4, kRing4);
    TrainingConfig cfg = toy_config(11, 2);
    cfg.initial_params = ParamVector{0.0, 0.0};
    CHECK_THROWS_AS(run_training(problem, {}, cfg), std::invalid_argument);
    const DeviceProfile small = test_profile("small", 2, {{0, 1}});
    CHECK_THROWS_AS(run_training(problem, {small}, cfg), std::invalid_argument);
    TrainingConfig bad = cfg;
    bad.learning_rate = 0.0;
    const DeviceProfile dev = test_profile("ok", 4, test::full_coupling(4));
    CHECK_THROWS_AS(run_training(problem, {dev}, bad), std::invalid_argument);
}

TEST_CASE("failure cdf closed form") {
    CHECK(failure_cdf(10, 0.0, 0) == doctest::Approx(1.0));
    CHECK(failure_cdf(10, 0.0, 7) == doctest::Approx(1.0));
    CHECK(failure_cdf(2, 0.5, 1) == doctest::Approx(0.75));
    CHECK(failure_cdf(20, 0.1, 5) == doctest::Approx(0.9887468658354914).epsilon(1e-12));
    CHECK(failure_cdf(20, 0.1, 20) == doctest::Approx(1.0));
    CHECK(failure_cdf(3, 1.0, 2) == doctest::Approx(0.0));
    CHECK_THROWS_AS(failure_cdf(5, -0.1, 2), std::invalid_argument);
    CHECK_THROWS_AS(failure_cdf(5, 0.1, 7), std::invalid_argument);
    CHECK_THROWS_AS(failure_cdf(5, 1.5, 2), std::invalid_argument);
}

TEST_CASE("failure cdf agrees with Monte Carlo") {
    const int trials = 20;
    const double p = 0.1;
    const int cap = 5;
    Rng rng(123456);
    const int samples = 1000000;
    int within = 0;
    for (int s = 0; s < samples; ++s) {
        int failures = 0;
        for (int t = 0; t < trials; ++t)
            if (rng.uniform() < p) ++failures;
        if (failures <= cap) ++within;
    }
    const double estimate = static_cast<double>(within) / samples;
    const double exact = failure_cdf(trials, p, cap);
    const double sigma = std::sqrt(exact * (1 - exact) / samples);
    CHECK(std::abs(estimate - exact) < 3 * sigma);
}
