// ionshuttle CLI: run / sweep / validate protocol configs, emitting CSV and
// JSON artifacts. Exit codes: 0 success, 2 validation failure, 3 numerical
// failure.

#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ionshuttle/artifacts.hpp"
#include "ionshuttle/config.hpp"
#include "ionshuttle/errors.hpp"
#include "ionshuttle/protocols.hpp"

namespace {

using namespace ionshuttle;

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw validation_error("config: cannot read '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<double> parse_durations(const std::string& arg) {
    std::vector<double> out;
    std::stringstream ss(arg);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw validation_error("sweep: cannot parse duration '" + item + "'");
        }
        if (used != item.size())
            throw validation_error("sweep: cannot parse duration '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw validation_error("sweep: empty duration list");
    return out;
}

int cmd_run(const std::string& config_path, const std::string& out_override) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string text = slurp(config_path);
    const config::ProtocolConfig cfg = config::parse_config(text);
    const protocols::SeparationSpec spec = cfg.to_spec();

    const protocols::ProtocolResult result = protocols::run(spec);

    artifacts::ManifestInfo info;
    info.command = "run";
    info.config_path = config_path;
    info.config_hash = config::config_hash(text);
    info.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::string out_dir = out_override.empty() ? cfg.output_directory : out_override;
    const auto outputs = artifacts::write_run_artifacts(out_dir, result, spec, cfg, info);

    std::printf("fidelity = %.6f\n", result.fidelity);
    if (!result.fock.populations.empty())
        std::printf("fock total = %.6f (deficit %.2e)\n", result.fock.total, result.fock.deficit);
    std::printf("max invariant residual = %.3e\n", result.summary.max_gamma_residual);
    std::printf("wrote %zu artifacts to %s\n", outputs.size(), out_dir.c_str());
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& durations_arg,
              bool durations_given, const std::string& out_override) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string text = slurp(config_path);
    const config::ProtocolConfig cfg = config::parse_config(text);
    protocols::SeparationSpec spec = cfg.to_spec();
    spec.fock_enabled = false;

    const std::vector<double> durations = durations_given
                                              ? parse_durations(durations_arg)
                                              : protocols::default_sweep_durations();
    const auto points = protocols::sweep(spec, durations);

    artifacts::ManifestInfo info;
    info.command = "sweep";
    info.config_path = config_path;
    info.config_hash = config::config_hash(text);
    info.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::string out_dir = out_override.empty() ? cfg.output_directory : out_override;
    const auto outputs = artifacts::write_sweep_artifacts(out_dir, points, cfg, info);

    std::size_t ok = 0;
    for (const auto& p : points) {
        std::printf("T = %8.4f  fidelity = %s  [%s]\n", p.duration,
                    artifacts::format_double(p.fidelity).c_str(), p.status.c_str());
        if (p.status == "ok") ++ok;
    }
    std::printf("wrote %zu artifacts to %s\n", outputs.size(), out_dir.c_str());
    if (ok == 0) throw numerical_error("sweep: every point failed");
    return 0;
}

int cmd_validate(const std::string& config_path) {
    const std::string text = slurp(config_path);
    const config::ProtocolConfig cfg = config::parse_config(text);
    cfg.to_spec();  // full physical-invariant checks
    const config::DerivedQuantities dq = config::derived_quantities(cfg);

    std::printf("config ok: %s\n", config_path.c_str());
    std::printf("  oscillator length  = %.6e m\n", dq.length_m);
    std::printf("  kappa              = %.6e\n", dq.kappa);
    std::printf("  initial separation = %.6e m (%.4f lengths)\n", dq.d0_m, dq.d0_lengths);
    std::printf("  omega_r / omega_t  = %.4f\n", cfg.omega_r_rad_s / cfg.omega_t_rad_s);
    std::printf("  duration           = %.4f / omega_t\n", cfg.duration_over_omega_t);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Invariant-based trap synthesis and Gaussian verification for "
                 "two-ion shuttling protocols"};
    app.require_subcommand(1);

    std::string config_path, out_dir, durations;

    CLI::App* run = app.add_subcommand("run", "Run a protocol and write trace artifacts");
    run->add_option("config", config_path, "protocol config (JSON)")->required();
    run->add_option("--out", out_dir, "output directory (overrides config)");

    CLI::App* sweep = app.add_subcommand("sweep", "Fidelity vs duration sweep");
    sweep->add_option("config", config_path, "protocol config (JSON)")->required();
    sweep->add_option("--durations", durations, "comma-separated list in units of 1/omega_t");
    sweep->add_option("--out", out_dir, "output directory (overrides config)");

    CLI::App* validate = app.add_subcommand("validate", "Schema and invariant checks only");
    validate->add_option("config", config_path, "protocol config (JSON)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        if (run->parsed()) return cmd_run(config_path, out_dir);
        if (sweep->parsed())
            return cmd_sweep(config_path, durations, sweep->count("--durations") > 0, out_dir);
        return cmd_validate(config_path);
    } catch (const validation_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const numerical_error& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
