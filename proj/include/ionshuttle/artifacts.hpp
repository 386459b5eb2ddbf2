// artifacts.hpp — CSV and JSON outputs for runs and sweeps. All CSV numbers
// use the shortest round-trip decimal representation so identical configs
// produce byte-identical files.

#pragma once

#include <string>
#include <vector>

#include "ionshuttle/config.hpp"
#include "ionshuttle/protocols.hpp"

namespace ionshuttle::artifacts {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

std::string format_double(double v);  // shortest round-trip

// Phase-space column labels, e.g. x1x, x1y, x2x, x2y, p1x, ...
std::vector<std::string> phase_labels(std::size_t n_ions, std::size_t dims);

struct CsvDocument {
    std::string name;
    std::string body;
};

// Trace CSVs for one protocol run: means, covariance (upper triangle),
// control (lab curvatures and forces), trap centers, diagnostics.
std::vector<CsvDocument> run_csvs(const protocols::ProtocolResult& result,
                                  const protocols::SeparationSpec& spec, std::size_t stride);

std::string sweep_csv(const std::vector<protocols::SweepPoint>& points);

// Covariance snapshots at t = 0, T/2, T plus the target ground-state
// covariance, in oscillator units.
std::string snapshots_json(const protocols::ProtocolResult& result);

struct ManifestInfo {
    std::string command;       // run | sweep
    std::string config_path;
    std::string config_hash;
    double wall_time_s = 0.0;
};

std::string run_manifest_json(const ManifestInfo& info, const config::ProtocolConfig& cfg,
                              const protocols::ProtocolResult& result,
                              const std::vector<std::string>& outputs);

std::string sweep_manifest_json(const ManifestInfo& info, const config::ProtocolConfig& cfg,
                                const std::vector<protocols::SweepPoint>& points,
                                const std::vector<std::string>& outputs);

// Write a run's artifact set into the output directory; returns file names.
std::vector<std::string> write_run_artifacts(const std::string& out_dir,
                                             const protocols::ProtocolResult& result,
                                             const protocols::SeparationSpec& spec,
                                             const config::ProtocolConfig& cfg,
                                             const ManifestInfo& info);

std::vector<std::string> write_sweep_artifacts(const std::string& out_dir,
                                               const std::vector<protocols::SweepPoint>& points,
                                               const config::ProtocolConfig& cfg,
                                               const ManifestInfo& info);

}  // namespace ionshuttle::artifacts
