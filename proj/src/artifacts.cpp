#include "ionshuttle/artifacts.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "ionshuttle/errors.hpp"

namespace ionshuttle::artifacts {

using nlohmann::json;
using protocols::ProtocolResult;
using protocols::SeparationSpec;

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::vector<std::string> phase_labels(std::size_t n_ions, std::size_t dims) {
    static const char* axes = "xyz";
    std::vector<std::string> labels;
    for (const char* kind : {"x", "p"})
        for (std::size_t i = 0; i < n_ions; ++i)
            for (std::size_t c = 0; c < dims; ++c)
                labels.push_back(std::string(kind) + std::to_string(i + 1) + axes[c]);
    return labels;
}

namespace {

void append_row(std::string& body, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        body += cells[i];
        body += (i + 1 < cells.size()) ? ',' : '\n';
    }
}

json matrix_json(const numkit::Mat& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

std::string fock_key(const std::vector<int>& tuple) {
    std::string key;
    for (std::size_t i = 0; i < tuple.size(); ++i) {
        key += std::to_string(tuple[i]);
        if (i + 1 < tuple.size()) key += ',';
    }
    return key;
}

json populations_json(const model::FockResult& fock, double floor = 1e-6) {
    json pops = json::object();
    for (const auto& [tuple, p] : fock.populations)
        if (p >= floor) pops[fock_key(tuple)] = p;
    return pops;
}

std::string iso_utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json summary_json(const ProtocolResult& result) {
    const auto& s = result.summary;
    json j{{"fidelity", result.fidelity},
           {"max_purity_drift", s.max_purity_drift},
           {"i_drift_rel", s.i_drift_rel},
           {"max_invariant_residual", s.max_gamma_residual},
           {"max_q_rel", s.max_q_rel},
           {"max_mean_error", s.max_mean_error},
           {"boundary_error_0", s.boundary_error_0},
           {"boundary_error_T", s.boundary_error_T},
           {"max_curvature_asymmetry", s.max_curvature_asymmetry},
           {"min_uncertainty_eig", s.min_uncertainty_eig}};
    if (!result.fock.populations.empty()) {
        j["populations"] = populations_json(result.fock);
        j["fock_total"] = result.fock.total;
        j["fock_deficit"] = result.fock.deficit;
        j["fock_cutoff_warning"] = result.fock.cutoff_warning;
    }
    return j;
}

json config_echo_json(const config::ProtocolConfig& cfg) {
    const config::DerivedQuantities dq = config::derived_quantities(cfg);
    return json{{"ion_mass_kg", cfg.ion_mass_kg},
                {"ion_charge_e", cfg.ion_charge_e},
                {"omega_t_rad_s", cfg.omega_t_rad_s},
                {"omega_r_rad_s", cfg.omega_r_rad_s},
                {"final_separation_m", cfg.final_separation_m},
                {"transverse_m", cfg.transverse_m},
                {"duration_over_omega_t", cfg.duration_over_omega_t},
                {"dimensions", cfg.dimensions},
                {"steps", cfg.steps},
                {"kappa", dq.kappa},
                {"d0_m", dq.d0_m},
                {"oscillator_length_m", dq.length_m}};
}

}  // namespace

std::vector<CsvDocument> run_csvs(const ProtocolResult& result, const SeparationSpec& spec,
                                  std::size_t stride) {
    if (stride == 0) throw validation_error("run_csvs: stride must be positive");
    const std::size_t dims = static_cast<std::size_t>(spec.spatial_dims);
    const std::size_t n2d = 2 * 2 * dims;
    const std::vector<std::string> labels = phase_labels(2, dims);
    const auto& times = result.trace.times;
    const std::size_t count = times.size();

    const auto sampled = [&](std::size_t i) { return i % stride == 0 || i + 1 == count; };

    std::vector<CsvDocument> docs;

    {
        CsvDocument means{"means.csv", ""};
        std::vector<std::string> row{"t"};
        for (const auto& l : labels) row.push_back(l);
        append_row(means.body, row);
        for (std::size_t i = 0; i < count; ++i) {
            if (!sampled(i)) continue;
            row.clear();
            row.push_back(format_double(times[i]));
            for (std::size_t k = 0; k < n2d; ++k)
                row.push_back(format_double(result.trace.states[i].z[k]));
            append_row(means.body, row);
        }
        docs.push_back(std::move(means));
    }

    {
        CsvDocument cov{"covariance.csv", ""};
        std::vector<std::string> row{"t"};
        for (std::size_t a = 0; a < n2d; ++a)
            for (std::size_t b = a; b < n2d; ++b) row.push_back("cov_" + labels[a] + "_" + labels[b]);
        append_row(cov.body, row);
        for (std::size_t i = 0; i < count; ++i) {
            if (!sampled(i)) continue;
            row.clear();
            row.push_back(format_double(times[i]));
            for (std::size_t a = 0; a < n2d; ++a)
                for (std::size_t b = a; b < n2d; ++b)
                    row.push_back(format_double(result.trace.states[i].sigma(a, b)));
            append_row(cov.body, row);
        }
        docs.push_back(std::move(cov));
    }

    {
        static const char* axes = "xyz";
        CsvDocument control{"control.csv", ""};
        std::vector<std::string> row{"t"};
        for (int ion = 1; ion <= 2; ++ion)
            for (std::size_t a = 0; a < dims; ++a)
                for (std::size_t b = a; b < dims; ++b)
                    row.push_back("m" + std::to_string(ion) + "_" + axes[a] + axes[b]);
        for (int ion = 1; ion <= 2; ++ion)
            for (std::size_t a = 0; a < dims; ++a)
                row.push_back("f" + std::to_string(ion) + axes[a]);
        append_row(control.body, row);
        for (std::size_t i = 0; i < count; ++i) {
            if (!sampled(i)) continue;
            row.clear();
            row.push_back(format_double(times[i]));
            for (int ion = 0; ion < 2; ++ion)
                for (std::size_t a = 0; a < dims; ++a)
                    for (std::size_t b = a; b < dims; ++b)
                        row.push_back(format_double(result.control.curvature[ion][i](a, b)));
            for (int ion = 0; ion < 2; ++ion)
                for (std::size_t a = 0; a < dims; ++a)
                    row.push_back(format_double(result.control.force[ion][i][a]));
            append_row(control.body, row);
        }
        docs.push_back(std::move(control));
    }

    {
        static const char* axes = "xyz";
        CsvDocument centers{"centers.csv", ""};
        const auto paths =
            protocols::trap_centers(result.control, {spec.ion, spec.ion});
        std::vector<std::string> row{"t"};
        for (int ion = 1; ion <= 2; ++ion)
            for (std::size_t a = 0; a < dims; ++a)
                row.push_back("c" + std::to_string(ion) + axes[a]);
        append_row(centers.body, row);
        for (std::size_t i = 0; i < count; ++i) {
            if (!sampled(i)) continue;
            row.clear();
            row.push_back(format_double(times[i]));
            for (int ion = 0; ion < 2; ++ion)
                for (std::size_t a = 0; a < dims; ++a)
                    row.push_back(format_double(paths[ion][i][a]));
            append_row(centers.body, row);
        }
        docs.push_back(std::move(centers));
    }

    {
        CsvDocument diag{"diagnostics.csv", ""};
        append_row(diag.body, {"t", "invariant_residual", "I_expect", "purity"});
        for (std::size_t i = 0; i < count; ++i) {
            if (!sampled(i)) continue;
            append_row(diag.body,
                       {format_double(times[i]), format_double(result.gamma_residual[i]),
                        format_double(result.i_expect[i]), format_double(result.trace.purity[i])});
        }
        docs.push_back(std::move(diag));
    }
    return docs;
}

std::string sweep_csv(const std::vector<protocols::SweepPoint>& points) {
    std::string body;
    append_row(body, {"T", "fidelity", "residual", "status"});
    for (const auto& p : points) {
        std::string status = p.status;
        for (char& c : status)
            if (c == ',' || c == '\n') c = ';';
        append_row(body, {format_double(p.duration), format_double(p.fidelity),
                          format_double(p.max_residual), status});
    }
    return body;
}

std::string snapshots_json(const ProtocolResult& result) {
    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["labels"] = phase_labels(2, result.trace.states.front().nd() / 2);
    doc["units"] = "harmonic oscillator (hbar = m = omega_t = 1)";
    json snaps = json::array();
    for (const auto& [t, sigma] : result.snapshots)
        snaps.push_back(json{{"t", t}, {"sigma", matrix_json(sigma)}});
    doc["snapshots"] = snaps;
    doc["target"] = json{{"sigma", matrix_json(result.target_sigma)}};
    return doc.dump(2) + "\n";
}

std::string run_manifest_json(const ManifestInfo& info, const config::ProtocolConfig& cfg,
                              const ProtocolResult& result,
                              const std::vector<std::string>& outputs) {
    json doc;
    doc["tool"] = "ionshuttle";
    doc["version"] = kToolVersion;
    doc["schema_version"] = kSchemaVersion;
    doc["command"] = info.command;
    doc["config_path"] = info.config_path;
    doc["config_hash"] = info.config_hash;
    doc["created_utc"] = iso_utc_now();
    doc["wall_time_s"] = info.wall_time_s;
    doc["outputs"] = outputs;
    doc["config"] = config_echo_json(cfg);
    doc["acceptance"] = summary_json(result);
    return doc.dump(2) + "\n";
}

std::string sweep_manifest_json(const ManifestInfo& info, const config::ProtocolConfig& cfg,
                                const std::vector<protocols::SweepPoint>& points,
                                const std::vector<std::string>& outputs) {
    json doc;
    doc["tool"] = "ionshuttle";
    doc["version"] = kToolVersion;
    doc["schema_version"] = kSchemaVersion;
    doc["command"] = info.command;
    doc["config_path"] = info.config_path;
    doc["config_hash"] = info.config_hash;
    doc["created_utc"] = iso_utc_now();
    doc["wall_time_s"] = info.wall_time_s;
    doc["outputs"] = outputs;
    doc["config"] = config_echo_json(cfg);
    json pts = json::array();
    for (const auto& p : points)
        pts.push_back(json{{"T", p.duration},
                           {"fidelity", p.fidelity},
                           {"residual", p.max_residual},
                           {"status", p.status}});
    doc["points"] = pts;
    return doc.dump(2) + "\n";
}

namespace {

std::string write_file(const std::string& dir, const std::string& name, const std::string& body) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const fs::path path = fs::path(dir) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw numerical_error("artifacts: cannot write " + path.string());
    out << body;
    return name;
}

}  // namespace

std::vector<std::string> write_run_artifacts(const std::string& out_dir,
                                             const ProtocolResult& result,
                                             const SeparationSpec& spec,
                                             const config::ProtocolConfig& cfg,
                                             const ManifestInfo& info) {
    std::vector<std::string> outputs;
    for (const auto& doc : run_csvs(result, spec, cfg.output_stride))
        outputs.push_back(write_file(out_dir, doc.name, doc.body));
    outputs.push_back(write_file(out_dir, "covariance_snapshots.json", snapshots_json(result)));
    outputs.push_back(write_file(out_dir, "manifest.json",
                                 run_manifest_json(info, cfg, result, outputs)));
    return outputs;
}

std::vector<std::string> write_sweep_artifacts(const std::string& out_dir,
                                               const std::vector<protocols::SweepPoint>& points,
                                               const config::ProtocolConfig& cfg,
                                               const ManifestInfo& info) {
    std::vector<std::string> outputs;
    outputs.push_back(write_file(out_dir, "fidelity_sweep.csv", sweep_csv(points)));
    outputs.push_back(write_file(out_dir, "manifest.json",
                                 sweep_manifest_json(info, cfg, points, outputs)));
    return outputs;
}

}  // namespace ionshuttle::artifacts
