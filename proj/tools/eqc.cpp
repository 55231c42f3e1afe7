#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "eqc/experiment.hpp"

namespace fs = std::filesystem;
using namespace eqc;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string fleet_dir;
    std::string out_dir;
    std::optional<uint64_t> seed;
    std::string weights; // "lo,hi" or "none"
    std::string mode;
};

Overrides build_overrides(const CommonArgs& args) {
    Overrides ov;
    ov.seed = args.seed;
    if (!args.weights.empty()) {
        WeightingConfig w;
        if (args.weights == "none") {
            w.enabled = false;
        } else {
            const auto comma = args.weights.find(',');
            if (comma == std::string::npos)
                throw std::runtime_error("--weights expects 'lo,hi' or 'none'");
            w.enabled = true;
            w.lo = std::stod(args.weights.substr(0, comma));
            w.hi = std::stod(args.weights.substr(comma + 1));
        }
        ov.weights = w;
    }
    if (!args.mode.empty()) {
        if (args.mode == "deterministic")
            ov.mode = RunMode::Deterministic;
        else if (args.mode == "concurrent")
            ov.mode = RunMode::Concurrent;
        else
            throw std::runtime_error("--mode expects deterministic or concurrent");
    }
    if (!args.fleet_dir.empty()) ov.fleet_dir = args.fleet_dir;
    return ov;
}

int run_experiment(const CommonArgs& args, const std::string& expected_kind) {
    ExperimentConfig cfg = load_experiment_config(args.config_path);
    if (cfg.problem_kind != expected_kind)
        throw std::runtime_error("config problem kind is '" + cfg.problem_kind + "', expected '" +
                                 expected_kind + "'");
    const Overrides overrides = build_overrides(args);
    overrides.apply(cfg);
    if (!cfg.fleet_dir)
        throw std::runtime_error("no fleet directory (set fleet_dir in the config or pass --fleet)");
    const auto fleet = fleet_from_dir(*cfg.fleet_dir);

    nlohmann::json config_echo;
    {
        std::ifstream in(args.config_path);
        in >> config_echo;
    }
    const RunResult result =
        run_training_experiment(cfg, fleet, args.out_dir, config_echo, overrides);
    std::cout << "converged_loss " << result.history.converged_loss << "\n"
              << "applied_updates " << result.history.applied_updates << "\n"
              << "max_staleness " << result.history.max_staleness << "\n"
              << "outputs " << result.paths.metrics_csv.string() << " "
              << result.paths.summary_json.string() << " " << result.paths.manifest_json.string()
              << "\n";
    return 0;
}

int run_validate(const CommonArgs& args, uint64_t shots) {
    if (args.fleet_dir.empty()) throw std::runtime_error("--fleet is required");
    const auto fleet = fleet_from_dir(args.fleet_dir);
    const Overrides overrides = build_overrides(args);
    const ModelValidationResult result = run_model_validation(
        fleet, args.out_dir, 5, shots, args.seed.value_or(7), overrides);
    std::cout << "points " << result.points.size() << "\n"
              << "pearson_correlation " << result.pearson << "\n"
              << "outputs " << result.paths.metrics_csv.string() << " "
              << result.paths.summary_json.string() << "\n";
    return 0;
}

Circuit named_circuit(const std::string& name) {
    if (name == "vqe4") return vqe_ansatz(4);
    if (name == "qaoa4") return qaoa_circuit(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}});
    if (name == "ghz5") return ghz_circuit(5);
    throw std::runtime_error("unknown circuit '" + name + "' (expected vqe4, qaoa4 or ghz5)");
}

int run_transpile(const std::string& circuit_name, const std::string& profile_path) {
    const DeviceProfile device = load_profile_file(profile_path);
    const Circuit logical = named_circuit(circuit_name);
    const TranspiledCircuit tc = transpile(logical, device);

    std::cout << "circuit " << circuit_name << " on " << device.name << "\n";
    std::cout << "gates:\n";
    for (size_t gi = 0; gi < tc.circuit.gates().size(); ++gi) {
        const Gate& g = tc.circuit.gates()[gi];
        std::cout << "  [" << gi << "] " << gate_name(g.kind) << " q" << g.qubits[0];
        if (g.arity == 2) std::cout << " q" << g.qubits[1];
        if (g.has_slot())
            std::cout << " angle=" << g.slot_scale << "*theta[" << g.slot << "]+" << g.slot_offset;
        else if (is_parameterized(g.kind))
            std::cout << " angle=" << g.angle;
        std::cout << "\n";
    }
    std::cout << "layers:\n";
    for (size_t li = 0; li < tc.layers.size(); ++li) {
        std::cout << "  [" << li << "]";
        for (int gi : tc.layers[li]) std::cout << " " << gi;
        std::cout << "\n";
    }
    std::cout << "layout:";
    for (int p : tc.layout) std::cout << " " << p;
    std::cout << "\nmetrics cd=" << tc.metrics.cd << " g1=" << tc.metrics.g1
              << " g2=" << tc.metrics.g2 << " m=" << tc.metrics.m << "\n";
    const CalibrationSnapshot calib = current_calibration(device, 0.0);
    std::cout << "p_correct " << p_correct(tc, calib) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"EQC: ensemble training of variational quantum algorithms on virtual QPUs"};
    app.require_subcommand(1);

    CommonArgs args;
    uint64_t validate_shots = 4096;
    std::string circuit_name, profile_path;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        if (needs_config)
            cmd->add_option("--config", args.config_path, "experiment config JSON")->required();
        cmd->add_option("--fleet", args.fleet_dir, "directory of device profiles");
        cmd->add_option("--out", args.out_dir, "output directory")->required();
        cmd->add_option("--seed", args.seed, "override the config seed");
        cmd->add_option("--weights", args.weights, "override weighting: 'lo,hi' or 'none'");
        cmd->add_option("--mode", args.mode, "override mode: deterministic|concurrent");
    };

    CLI::App* vqe = app.add_subcommand("run-vqe", "train the Heisenberg VQE across the fleet");
    add_common(vqe, true);
    CLI::App* qaoa = app.add_subcommand("run-qaoa", "train the MaxCut QAOA across the fleet");
    add_common(qaoa, true);
    CLI::App* validate =
        app.add_subcommand("validate-model", "GHZ predicted-vs-observed error scatter");
    add_common(validate, false);
    validate->add_option("--shots", validate_shots, "shots per (device, staleness) point");
    CLI::App* transpile_cmd =
        app.add_subcommand("transpile", "print a named circuit transpiled onto one profile");
    transpile_cmd->add_option("--circuit", circuit_name, "vqe4 | qaoa4 | ghz5")->required();
    transpile_cmd->add_option("--profile", profile_path, "device profile JSON")->required();

    try {
        app.parse(argc, argv);
        if (app.got_subcommand(vqe)) return run_experiment(args, "vqe");
        if (app.got_subcommand(qaoa)) return run_experiment(args, "qaoa");
        if (app.got_subcommand(validate)) return run_validate(args, validate_shots);
        if (app.got_subcommand(transpile_cmd)) return run_transpile(circuit_name, profile_path);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
    return 0;
}
