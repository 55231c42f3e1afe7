#include "eqc/device.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>

namespace eqc {

namespace {

void require_fields(const nlohmann::json& doc, const std::vector<std::string>& allowed,
                    const std::string& where) {
    for (const auto& [key, value] : doc.items())
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw std::runtime_error("unknown field '" + key + "' in " + where);
    for (const auto& key : allowed)
        if (!doc.contains(key)) throw std::runtime_error("missing field '" + key + "' in " + where);
}

std::pair<int, int> parse_edge_key(const std::string& key) {
    const auto dash = key.find('-');
    if (dash == std::string::npos) throw std::runtime_error("bad beta key '" + key + "'");
    const int a = std::stoi(key.substr(0, dash));
    const int b = std::stoi(key.substr(dash + 1));
    return {std::min(a, b), std::max(a, b)};
}

bool coupling_connected(const std::vector<std::pair<int, int>>& edges, int n) {
    std::vector<std::vector<int>> adj(static_cast<size_t>(n));
    for (const auto& [a, b] : edges) {
        adj[static_cast<size_t>(a)].push_back(b);
        adj[static_cast<size_t>(b)].push_back(a);
    }
    std::vector<char> seen(static_cast<size_t>(n), 0);
    std::deque<int> q{0};
    seen[0] = 1;
    int reached = 1;
    while (!q.empty()) {
        const int v = q.front();
        q.pop_front();
        for (int w : adj[static_cast<size_t>(v)])
            if (!seen[static_cast<size_t>(w)]) {
                seen[static_cast<size_t>(w)] = 1;
                ++reached;
                q.push_back(w);
            }
    }
    return reached == n;
}

} // namespace

void DeviceProfile::validate() const {
    if (name.empty()) throw std::runtime_error("device profile needs a name");
    if (n_qubits < 1 || n_qubits > 12)
        throw std::runtime_error("device qubit count must be in [1, 12]: " + name);
    for (const auto& [a, b] : coupling)
        if (a < 0 || b < 0 || a >= n_qubits || b >= n_qubits || a == b)
            throw std::runtime_error("coupling edge references invalid qubits: " + name);
    if (n_qubits > 1 && (coupling.empty() || !coupling_connected(coupling, n_qubits)))
        throw std::runtime_error("coupling graph must be connected: " + name);
    for (GateKind k : {GateKind::CNOT, GateKind::ID, GateKind::RZ, GateKind::SX, GateKind::X})
        if (!basis_gates.count(k))
            throw std::runtime_error("basis gates must include cx, id, rz, sx, x: " + name);
    base_calibration.validate(n_qubits);
    for (const auto& [edge, p] : base_calibration.beta) {
        const bool known = std::any_of(coupling.begin(), coupling.end(), [&](const auto& e) {
            return std::minmax(e.first, e.second) == std::minmax(edge.first, edge.second);
        });
        if (!known) throw std::runtime_error("beta entry for non-coupled pair in " + name);
    }
    for (const auto& [a, b] : coupling)
        if (!base_calibration.beta.count({std::min(a, b), std::max(a, b)}))
            throw std::runtime_error("missing beta entry for coupling edge in " + name);
    if (drift.rate_per_hour < 0) throw std::runtime_error("drift rate must be >= 0: " + name);
    if (latency.queue_wait_s < 0 || latency.jitter_s < 0 || latency.exec_per_shot_s < 0)
        throw std::runtime_error("latency parameters must be >= 0: " + name);
    if (!(calibration_period_s > 0))
        throw std::runtime_error("calibration period must be positive: " + name);
}

DeviceProfile load_profile(const nlohmann::json& doc) {
    require_fields(doc,
                   {"name", "n_qubits", "coupling", "basis_gates", "gamma", "beta", "omega",
                    "t1_us", "t2_us", "gate_time_1q_ns", "gate_time_2q_ns", "calibration_period_s",
                    "drift", "latency"},
                   "device profile");
    DeviceProfile p;
    p.name = doc.at("name").get<std::string>();
    p.n_qubits = doc.at("n_qubits").get<int>();
    for (const auto& e : doc.at("coupling")) {
        if (!e.is_array() || e.size() != 2)
            throw std::runtime_error("coupling entries must be [i, j] pairs: " + p.name);
        p.coupling.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    for (const auto& g : doc.at("basis_gates"))
        p.basis_gates.insert(gate_kind_from_name(g.get<std::string>()));
    for (const auto& [key, value] : doc.at("gamma").items())
        p.base_calibration.gamma[gate_kind_from_name(key)] = value.get<double>();
    for (const auto& [key, value] : doc.at("beta").items())
        p.base_calibration.beta[parse_edge_key(key)] = value.get<double>();
    p.base_calibration.omega = doc.at("omega").get<std::vector<double>>();
    p.base_calibration.t1_us = doc.at("t1_us").get<std::vector<double>>();
    p.base_calibration.t2_us = doc.at("t2_us").get<std::vector<double>>();
    p.base_calibration.gate_time_1q_ns = doc.at("gate_time_1q_ns").get<double>();
    p.base_calibration.gate_time_2q_ns = doc.at("gate_time_2q_ns").get<double>();
    p.calibration_period_s = doc.at("calibration_period_s").get<double>();

    const auto& drift = doc.at("drift");
    require_fields(drift, {"rate_per_hour", "affected"}, "drift");
    p.drift.rate_per_hour = drift.at("rate_per_hour").get<double>();
    for (const auto& t : drift.at("affected")) {
        const std::string s = t.get<std::string>();
        if (s == "gamma")
            p.drift.affected.insert(DriftTarget::Gamma);
        else if (s == "beta")
            p.drift.affected.insert(DriftTarget::Beta);
        else if (s == "omega")
            p.drift.affected.insert(DriftTarget::Omega);
        else
            throw std::runtime_error("unknown drift target '" + s + "'");
    }
    const auto& lat = doc.at("latency");
    require_fields(lat, {"queue_wait_s", "jitter_s", "exec_per_shot_s"}, "latency");
    p.latency.queue_wait_s = lat.at("queue_wait_s").get<double>();
    p.latency.jitter_s = lat.at("jitter_s").get<double>();
    p.latency.exec_per_shot_s = lat.at("exec_per_shot_s").get<double>();
    p.latency.stream_id = fnv1a64(p.name);

    p.validate();
    return p;
}

DeviceProfile load_profile_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open profile file " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("invalid JSON in " + path.string() + ": " + e.what());
    }
    try {
        return load_profile(doc);
    } catch (const std::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

CalibrationSnapshot current_calibration(const DeviceProfile& device, double now_s) {
    if (now_s < 0) throw std::invalid_argument("virtual time must be >= 0");
    CalibrationSnapshot calib = device.base_calibration;
    const double staleness = std::fmod(now_s, device.calibration_period_s);
    calib.calibrated_at_s = now_s - staleness;
    const double factor = 1.0 + device.drift.rate_per_hour * staleness / 3600.0;
    auto scale = [&](double p) { return std::min(1.0, p * factor); };
    if (device.drift.affected.count(DriftTarget::Gamma))
        for (auto& [k, p] : calib.gamma) p = scale(p);
    if (device.drift.affected.count(DriftTarget::Beta))
        for (auto& [e, p] : calib.beta) p = scale(p);
    if (device.drift.affected.count(DriftTarget::Omega))
        for (auto& p : calib.omega) p = scale(p);
    return calib;
}

JobResult submit_job(const DeviceProfile& device, const TranspiledCircuit& circuit, uint64_t shots,
                     double submit_time_s, Rng& rng) {
    if (circuit.device_name != device.name)
        throw std::invalid_argument("circuit was transpiled for " + circuit.device_name +
                                    ", not " + device.name);
    if (circuit.circuit.n_qubits() != device.n_qubits)
        throw std::invalid_argument("circuit register does not match device " + device.name);
    for (const Gate& g : circuit.circuit.gates()) {
        if (g.kind != GateKind::MEASURE && !device.basis_gates.count(g.kind))
            throw std::invalid_argument("gate outside device basis: " + gate_name(g.kind));
        if (g.arity == 2) {
            const bool edge = std::any_of(
                device.coupling.begin(), device.coupling.end(), [&](const auto& e) {
                    return (e.first == g.qubits[0] && e.second == g.qubits[1]) ||
                           (e.first == g.qubits[1] && e.second == g.qubits[0]);
                });
            if (!edge)
                throw std::invalid_argument("two-qubit gate off the coupling map of " + device.name);
        }
    }
    const CalibrationSnapshot calib = current_calibration(device, submit_time_s);
    JobResult result;
    result.counts = run_noisy(circuit, calib, shots, rng);
    double wait = device.latency.queue_wait_s;
    if (device.latency.jitter_s > 0) wait += device.latency.jitter_s * rng.uniform(-1.0, 1.0);
    wait = std::max(0.0, wait);
    result.completion_time_s =
        submit_time_s + wait + static_cast<double>(shots) * device.latency.exec_per_shot_s;
    return result;
}

std::vector<DeviceProfile> fleet_from_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw std::runtime_error("fleet directory does not exist: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw std::runtime_error("no device profiles in " + dir.string());
    std::vector<DeviceProfile> fleet;
    for (const auto& f : files) {
        DeviceProfile p = load_profile_file(f);
        const bool dup = std::any_of(fleet.begin(), fleet.end(),
                                     [&](const DeviceProfile& q) { return q.name == p.name; });
        if (dup)
            throw std::runtime_error("duplicate device name '" + p.name + "' from " + f.string());
        fleet.push_back(std::move(p));
    }
    return fleet;
}

} // namespace eqc
