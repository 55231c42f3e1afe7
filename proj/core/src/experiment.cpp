#include "eqc/experiment.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace eqc {

namespace {

void require_fields(const nlohmann::json& doc, const std::vector<std::string>& required,
                    const std::vector<std::string>& optional, const std::string& where) {
    for (const auto& [key, value] : doc.items()) {
        const bool known =
            std::find(required.begin(), required.end(), key) != required.end() ||
            std::find(optional.begin(), optional.end(), key) != optional.end();
        if (!known) throw std::runtime_error("unknown field '" + key + "' in " + where);
    }
    for (const auto& key : required)
        if (!doc.contains(key)) throw std::runtime_error("missing field '" + key + "' in " + where);
}

std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

uint64_t profile_fingerprint(const DeviceProfile& d) {
    std::ostringstream s;
    s << d.name << '|' << d.n_qubits << '|';
    for (const auto& [a, b] : d.coupling) s << a << '-' << b << ';';
    s << '|';
    for (GateKind k : d.basis_gates) s << gate_name(k) << ';';
    const CalibrationSnapshot& c = d.base_calibration;
    s << '|';
    for (const auto& [k, p] : c.gamma) s << gate_name(k) << '=' << format_double(p) << ';';
    for (const auto& [e, p] : c.beta)
        s << e.first << '-' << e.second << '=' << format_double(p) << ';';
    for (double v : c.omega) s << format_double(v) << ';';
    for (double v : c.t1_us) s << format_double(v) << ';';
    for (double v : c.t2_us) s << format_double(v) << ';';
    s << format_double(c.gate_time_1q_ns) << '|' << format_double(c.gate_time_2q_ns) << '|'
      << format_double(d.calibration_period_s) << '|' << format_double(d.drift.rate_per_hour)
      << '|' << format_double(d.latency.queue_wait_s) << '|' << format_double(d.latency.jitter_s)
      << '|' << format_double(d.latency.exec_per_shot_s);
    return fnv1a64(s.str());
}

nlohmann::json fleet_fingerprint(const std::vector<DeviceProfile>& fleet) {
    nlohmann::json arr = nlohmann::json::array();
    for (const DeviceProfile& d : fleet) {
        std::ostringstream hex;
        hex << std::hex << std::setw(16) << std::setfill('0') << profile_fingerprint(d);
        arr.push_back({{"name", d.name}, {"fnv1a64", hex.str()}});
    }
    return arr;
}

} // namespace

uint64_t file_fingerprint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return fnv1a64(buf.str());
}

ExperimentConfig parse_experiment_config(const nlohmann::json& doc) {
    require_fields(doc, {"schema_version", "problem", "training"}, {"weighting", "fleet_dir"},
                   "experiment config");
    if (doc.at("schema_version").get<int>() != kSchemaVersion)
        throw std::runtime_error("unsupported config schema_version");
    ExperimentConfig cfg;

    const auto& prob = doc.at("problem");
    require_fields(prob, {"kind", "n_qubits"}, {"edges", "j", "b", "reference_energy"}, "problem");
    cfg.problem_kind = prob.at("kind").get<std::string>();
    if (cfg.problem_kind != "vqe" && cfg.problem_kind != "qaoa" && cfg.problem_kind != "ghz")
        throw std::runtime_error("problem kind must be vqe, qaoa or ghz");
    cfg.n_qubits = prob.at("n_qubits").get<int>();
    if (prob.contains("edges"))
        for (const auto& e : prob.at("edges")) {
            if (!e.is_array() || e.size() != 2)
                throw std::runtime_error("edges must be [i, j] pairs");
            cfg.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
        }
    if (prob.contains("j")) cfg.j_coupling = prob.at("j").get<double>();
    if (prob.contains("b")) cfg.b_field = prob.at("b").get<double>();
    if (prob.contains("reference_energy"))
        cfg.reference_energy = prob.at("reference_energy").get<double>();

    const auto& train = doc.at("training");
    require_fields(train, {"learning_rate", "epochs", "shots", "seed"}, {"mode"}, "training");
    cfg.training.learning_rate = train.at("learning_rate").get<double>();
    cfg.training.epochs = train.at("epochs").get<int>();
    cfg.training.shots = train.at("shots").get<uint64_t>();
    cfg.training.seed = train.at("seed").get<uint64_t>();
    if (train.contains("mode")) {
        const std::string mode = train.at("mode").get<std::string>();
        if (mode == "deterministic")
            cfg.training.mode = RunMode::Deterministic;
        else if (mode == "concurrent")
            cfg.training.mode = RunMode::Concurrent;
        else
            throw std::runtime_error("mode must be deterministic or concurrent");
    }

    cfg.training.weighting.enabled = false;
    if (doc.contains("weighting")) {
        const auto& w = doc.at("weighting");
        require_fields(w, {"enabled", "lo", "hi"}, {}, "weighting");
        cfg.training.weighting.enabled = w.at("enabled").get<bool>();
        cfg.training.weighting.lo = w.at("lo").get<double>();
        cfg.training.weighting.hi = w.at("hi").get<double>();
    }
    if (doc.contains("fleet_dir")) cfg.fleet_dir = doc.at("fleet_dir").get<std::string>();
    cfg.training.validate();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("invalid JSON in " + path.string() + ": " + e.what());
    }
    return parse_experiment_config(doc);
}

nlohmann::json Overrides::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    if (seed) j["seed"] = *seed;
    if (weights) {
        if (weights->enabled)
            j["weights"] = {{"lo", weights->lo}, {"hi", weights->hi}};
        else
            j["weights"] = "none";
    }
    if (mode) j["mode"] = *mode == RunMode::Deterministic ? "deterministic" : "concurrent";
    if (fleet_dir) j["fleet"] = *fleet_dir;
    return j;
}

void Overrides::apply(ExperimentConfig& cfg) const {
    if (seed) cfg.training.seed = *seed;
    if (weights) cfg.training.weighting = *weights;
    if (mode) cfg.training.mode = *mode;
    if (fleet_dir) cfg.fleet_dir = *fleet_dir;
}

Problem make_problem(const ExperimentConfig& cfg) {
    if (cfg.problem_kind == "vqe")
        return make_vqe_problem(cfg.n_qubits, cfg.edges, cfg.j_coupling, cfg.b_field);
    if (cfg.problem_kind == "qaoa") return make_qaoa_problem(cfg.n_qubits, cfg.edges);
    throw std::runtime_error("problem kind '" + cfg.problem_kind + "' is not trainable");
}

void write_metrics_csv(const std::filesystem::path& path, const TrainingHistory& history) {
    std::ostringstream out;
    out << kMetricsHeader << "\n";
    for (const UpdateRow& row : history.rows) {
        out << row.step << ',' << row.epoch << ',' << row.param_index << ',' << row.device << ','
            << format_double(row.gradient) << ',' << format_double(row.weight) << ','
            << format_double(row.p_correct) << ',' << row.staleness << ','
            << format_double(row.virtual_time_s) << ',' << format_double(row.ideal_loss) << "\n";
    }
    atomic_write(path, out.str());
}

RunResult run_training_experiment(const ExperimentConfig& cfg,
                                  const std::vector<DeviceProfile>& fleet,
                                  const std::filesystem::path& out_dir,
                                  const nlohmann::json& config_echo, const Overrides& overrides) {
    std::filesystem::create_directories(out_dir);
    const Problem problem = make_problem(cfg);
    RunResult result;
    result.history = run_training(problem, fleet, cfg.training);
    result.paths = RunPaths{out_dir / "metrics.csv", out_dir / "summary.json",
                            out_dir / "manifest.json"};

    write_metrics_csv(result.paths.metrics_csv, result.history);

    const double exact = exact_ground_energy(problem.hamiltonian);
    nlohmann::json summary;
    summary["schema_version"] = kSchemaVersion;
    summary["experiment"] = cfg.problem_kind;
    summary["converged_loss"] = result.history.converged_loss;
    summary["reference_energy_exact"] = exact;
    summary["converged_error_vs_exact"] =
        std::abs(result.history.converged_loss - exact) / std::abs(exact);
    if (cfg.reference_energy) {
        summary["reference_energy"] = *cfg.reference_energy;
        summary["converged_error_vs_reference"] =
            std::abs(result.history.converged_loss - *cfg.reference_energy) /
            std::abs(*cfg.reference_energy);
    }
    summary["epochs"] = cfg.training.epochs;
    summary["epoch_loss"] = result.history.epoch_loss;
    summary["per_device_throughput_per_hour"] = result.history.throughput_per_hour;
    summary["tasks_per_device"] = result.history.tasks_per_device;
    summary["max_staleness"] = result.history.max_staleness;
    {
        nlohmann::json hist = nlohmann::json::object();
        for (const auto& [k, v] : result.history.staleness_histogram)
            hist[std::to_string(k)] = v;
        summary["staleness_histogram"] = hist;
    }
    summary["accepted_reports"] = result.history.accepted_reports;
    summary["applied_updates"] = result.history.applied_updates;
    summary["final_virtual_time_s"] = result.history.final_virtual_time_s;
    summary["final_params"] = result.history.final_params;
    if (cfg.problem_kind == "qaoa") {
        double best_cut = 0.0;
        std::string best_bits;
        for (const auto& [bits, count] : result.history.sampled_counts) {
            const double cut = maxcut_cost(bits, cfg.edges);
            if (best_bits.empty() || cut > best_cut) {
                best_cut = cut;
                best_bits = bits;
            }
        }
        summary["best_sampled_bitstring"] = best_bits;
        summary["best_sampled_cut"] = best_cut;
    }
    nlohmann::json metadata;
    metadata["p_correct_time_units"] =
        "decay exponent uses gate times in microseconds over T1*T2 in microseconds^2";
    if (cfg.problem_kind == "qaoa")
        metadata["shared_slot_shift"] =
            "pi/2 two-point rule applied to every gate sharing a slot (approximation)";
    summary["metadata"] = metadata;
    summary["config"] = config_echo;
    result.summary = summary;
    atomic_write(result.paths.summary_json, summary.dump(2) + "\n");

    nlohmann::json manifest;
    manifest["schema_version"] = kSchemaVersion;
    manifest["artifact_version"] = kArtifactVersion;
    manifest["seed"] = cfg.training.seed;
    manifest["config"] = config_echo;
    manifest["overrides"] = overrides.to_json();
    manifest["fleet"] = fleet_fingerprint(fleet);
    manifest["outputs"] = {result.paths.metrics_csv.filename().string(),
                           result.paths.summary_json.filename().string()};
    atomic_write(result.paths.manifest_json, manifest.dump(2) + "\n");
    return result;
}

double pearson_correlation(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("need two equal-length series of length >= 2");
    const double n = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx <= 0 || syy <= 0) throw std::invalid_argument("degenerate series in correlation");
    return sxy / std::sqrt(sxx * syy);
}

double ghz_error_fraction(const Histogram& counts) {
    double total = 0, bad = 0;
    for (const auto& [bits, c] : counts) {
        total += c;
        const bool all0 = bits.find('1') == std::string::npos;
        const bool all1 = bits.find('0') == std::string::npos;
        if (!all0 && !all1) bad += c;
    }
    if (total <= 0) throw std::invalid_argument("empty histogram");
    return bad / total;
}

ModelValidationResult run_model_validation(const std::vector<DeviceProfile>& fleet,
                                           const std::filesystem::path& out_dir, int ghz_qubits,
                                           uint64_t shots, uint64_t seed,
                                           const Overrides& overrides) {
    if (fleet.size() < 2) throw std::runtime_error("model validation needs at least 2 devices");
    std::filesystem::create_directories(out_dir);
    const Circuit ghz = ghz_circuit(ghz_qubits);
    const double fractions[] = {0.0, 0.5, 0.95};

    ModelValidationResult result;
    for (const DeviceProfile& device : fleet) {
        if (device.n_qubits < ghz_qubits) continue;
        const TranspiledCircuit tc = transpile(ghz, device);
        for (double f : fractions) {
            const double now = f * device.calibration_period_s;
            const CalibrationSnapshot calib = current_calibration(device, now);
            ModelValidationPoint pt;
            pt.device = device.name;
            pt.staleness_s = now;
            pt.p_correct = p_correct(tc, calib);
            pt.predicted_error = 1.0 - pt.p_correct;
            Rng rng = Rng::stream(seed, {fnv1a64(device.name), static_cast<uint64_t>(f * 1000)});
            pt.observed_error = ghz_error_fraction(run_noisy(tc, calib, shots, rng));
            result.points.push_back(pt);
        }
    }
    if (result.points.size() < 2)
        throw std::runtime_error("not enough devices can host the GHZ circuit");

    std::vector<double> pred, obs;
    for (const auto& pt : result.points) {
        pred.push_back(pt.predicted_error);
        obs.push_back(pt.observed_error);
    }
    result.pearson = pearson_correlation(pred, obs);

    result.paths = RunPaths{out_dir / "ghz_model.csv", out_dir / "summary.json",
                            out_dir / "manifest.json"};
    std::ostringstream csv;
    csv << "device,staleness_s,predicted_error,observed_error,p_correct\n";
    for (const auto& pt : result.points)
        csv << pt.device << ',' << format_double(pt.staleness_s) << ','
            << format_double(pt.predicted_error) << ',' << format_double(pt.observed_error) << ','
            << format_double(pt.p_correct) << "\n";
    atomic_write(result.paths.metrics_csv, csv.str());

    nlohmann::json summary;
    summary["schema_version"] = kSchemaVersion;
    summary["experiment"] = "validate-model";
    summary["ghz_qubits"] = ghz_qubits;
    summary["shots"] = shots;
    summary["seed"] = seed;
    summary["n_points"] = result.points.size();
    summary["pearson_correlation"] = result.pearson;
    summary["metadata"] = {{"p_correct_time_units",
                            "decay exponent uses gate times in microseconds over T1*T2 in "
                            "microseconds^2"}};
    atomic_write(result.paths.summary_json, summary.dump(2) + "\n");

    nlohmann::json manifest;
    manifest["schema_version"] = kSchemaVersion;
    manifest["artifact_version"] = kArtifactVersion;
    manifest["seed"] = seed;
    manifest["overrides"] = overrides.to_json();
    manifest["fleet"] = fleet_fingerprint(fleet);
    manifest["outputs"] = {result.paths.metrics_csv.filename().string(),
                           result.paths.summary_json.filename().string()};
    atomic_write(result.paths.manifest_json, manifest.dump(2) + "\n");
    return result;
}

} // namespace eqc
