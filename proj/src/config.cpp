#include "ionshuttle/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ionshuttle/coulomb.hpp"
#include "ionshuttle/errors.hpp"

namespace ionshuttle::config {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw validation_error("config: " + where + ": " + what);
}

const json& require(const json& node, const std::string& key, const std::string& where) {
    const auto it = node.find(key);
    if (it == node.end()) fail(where, "missing field '" + key + "'");
    return *it;
}

// Quantity record {"value": v, "unit": "..."}.
struct Quantity {
    double value;
    std::string unit;
};

Quantity quantity(const json& node, const std::string& where) {
    if (!node.is_object()) fail(where, "expected {\"value\": ..., \"unit\": ...}");
    const json& v = require(node, "value", where);
    const json& u = require(node, "unit", where);
    if (!v.is_number()) fail(where, "'value' must be a number");
    if (!u.is_string()) fail(where, "'unit' must be a string");
    return {v.get<double>(), u.get<std::string>()};
}

double angular_frequency(const Quantity& q, const std::string& where) {
    if (q.unit == "rad/s") return q.value;
    double scale = 0.0;
    if (q.unit == "Hz")
        scale = 1.0;
    else if (q.unit == "kHz")
        scale = 1e3;
    else if (q.unit == "MHz")
        scale = 1e6;
    else if (q.unit == "GHz")
        scale = 1e9;
    else
        fail(where, "unknown frequency unit '" + q.unit + "' (use Hz, kHz, MHz, GHz, rad/s)");
    return 2.0 * M_PI * q.value * scale;
}

double length_m(const Quantity& q, const std::string& where) {
    if (q.unit == "m") return q.value;
    if (q.unit == "mm") return q.value * 1e-3;
    if (q.unit == "um") return q.value * 1e-6;
    if (q.unit == "nm") return q.value * 1e-9;
    fail(where, "unknown length unit '" + q.unit + "' (use m, mm, um, nm)");
}

double mass_kg(const Quantity& q, const std::string& where) {
    if (q.unit == "kg") return q.value;
    if (q.unit == "amu") return q.value * units::kAtomicMassUnit;
    fail(where, "unknown mass unit '" + q.unit + "' (use amu, kg)");
}

double charge_e(const Quantity& q, const std::string& where) {
    if (q.unit == "e") return q.value;
    if (q.unit == "C") return q.value / units::kElementaryCharge;
    fail(where, "unknown charge unit '" + q.unit + "' (use e, C)");
}

}  // namespace

ProtocolConfig parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw validation_error("config: JSON parse error at line " + std::to_string(line) +
                               ", column " + std::to_string(col) + ": " + e.what());
    }
    if (!doc.is_object()) throw validation_error("config: top level must be a JSON object");

    ProtocolConfig cfg;

    const json& ion = require(doc, "ion", "ion");
    cfg.ion_mass_kg = mass_kg(quantity(require(ion, "mass", "ion.mass"), "ion.mass"), "ion.mass");
    cfg.ion_charge_e =
        charge_e(quantity(require(ion, "charge", "ion.charge"), "ion.charge"), "ion.charge");
    if (ion.contains("species")) cfg.ion_species = ion["species"].get<std::string>();
    if (!(cfg.ion_mass_kg > 0.0)) fail("ion.mass", "must be positive");
    if (!(cfg.ion_charge_e > 0.0)) fail("ion.charge", "must be positive");

    const json& trap = require(doc, "trap", "trap");
    cfg.omega_t_rad_s =
        angular_frequency(quantity(require(trap, "omega_t", "trap.omega_t"), "trap.omega_t"),
                          "trap.omega_t");
    cfg.omega_r_rad_s =
        angular_frequency(quantity(require(trap, "omega_r", "trap.omega_r"), "trap.omega_r"),
                          "trap.omega_r");
    if (!(cfg.omega_t_rad_s > 0.0)) fail("trap.omega_t", "must be positive");
    if (!(cfg.omega_r_rad_s > cfg.omega_t_rad_s))
        fail("trap.omega_r", "must exceed omega_t (the confinement rotates between the two)");

    const json& proto = require(doc, "protocol", "protocol");
    cfg.final_separation_m = length_m(
        quantity(require(proto, "final_separation", "protocol.final_separation"),
                 "protocol.final_separation"),
        "protocol.final_separation");
    if (!(cfg.final_separation_m > 0.0)) fail("protocol.final_separation", "must be positive");
    if (proto.contains("transverse_displacement"))
        cfg.transverse_m =
            length_m(quantity(proto["transverse_displacement"], "protocol.transverse_displacement"),
                     "protocol.transverse_displacement");
    else
        cfg.transverse_m = 100e-6;  // junction-arm default
    if (cfg.transverse_m < 0.0) fail("protocol.transverse_displacement", "must be non-negative");

    {
        const Quantity dur =
            quantity(require(proto, "duration", "protocol.duration"), "protocol.duration");
        const std::string& where = "protocol.duration";
        if (dur.unit == "1/omega_t")
            cfg.duration_over_omega_t = dur.value;
        else if (dur.unit == "s")
            cfg.duration_over_omega_t = dur.value * cfg.omega_t_rad_s;
        else if (dur.unit == "us")
            cfg.duration_over_omega_t = dur.value * 1e-6 * cfg.omega_t_rad_s;
        else if (dur.unit == "ns")
            cfg.duration_over_omega_t = dur.value * 1e-9 * cfg.omega_t_rad_s;
        else
            fail(where, "unknown duration unit '" + dur.unit + "' (use 1/omega_t, s, us, ns)");
        if (!(cfg.duration_over_omega_t > 0.0)) fail(where, "must be positive");
    }

    if (proto.contains("dimensions")) {
        if (!proto["dimensions"].is_number_integer()) fail("protocol.dimensions", "must be an integer");
        cfg.dimensions = proto["dimensions"].get<int>();
    }
    if (cfg.dimensions != 2 && cfg.dimensions != 3)
        fail("protocol.dimensions", "unsupported spatial dimension (use 2 or 3)");
    if (proto.contains("steps")) {
        if (!proto["steps"].is_number_integer() || proto["steps"].get<long>() < 2)
            fail("protocol.steps", "must be an integer >= 2");
        cfg.steps = proto["steps"].get<std::size_t>();
    }

    if (doc.contains("fock")) {
        const json& fock = doc["fock"];
        if (fock.contains("enabled")) cfg.fock_enabled = fock["enabled"].get<bool>();
        if (fock.contains("cutoff")) {
            cfg.fock_cutoff = fock["cutoff"].get<int>();
            if (cfg.fock_cutoff < 0) fail("fock.cutoff", "must be non-negative");
        }
        if (fock.contains("nodes")) {
            cfg.fock_nodes = fock["nodes"].get<int>();
            if (cfg.fock_nodes < 2) fail("fock.nodes", "must be at least 2");
        }
    }

    if (doc.contains("coulomb")) {
        const json& cb = doc["coulomb"];
        if (cb.contains("enabled")) cfg.coulomb_enabled = cb["enabled"].get<bool>();
        if (cb.contains("evaluation")) {
            const std::string mode = cb["evaluation"].get<std::string>();
            if (mode == "designed")
                cfg.coulomb_instantaneous = false;
            else if (mode == "instantaneous")
                cfg.coulomb_instantaneous = true;
            else
                fail("coulomb.evaluation", "must be 'designed' or 'instantaneous'");
        }
    }

    if (doc.contains("output")) {
        const json& out = doc["output"];
        if (out.contains("directory")) cfg.output_directory = out["directory"].get<std::string>();
        if (out.contains("stride")) {
            if (!out["stride"].is_number_integer() || out["stride"].get<long>() < 1)
                fail("output.stride", "must be an integer >= 1");
            cfg.output_stride = out["stride"].get<std::size_t>();
        }
    }
    return cfg;
}

ProtocolConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw validation_error("config: cannot read '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

units::UnitSystem ProtocolConfig::unit_system() const {
    return units::UnitSystem(ion_mass_kg, omega_t_rad_s);
}

protocols::SeparationSpec ProtocolConfig::to_spec() const {
    const units::UnitSystem us = unit_system();
    protocols::SeparationSpec spec;
    spec.omega_t = 1.0;
    spec.omega_r = omega_r_rad_s / omega_t_rad_s;
    spec.ion = units::IonSpecies{1.0, ion_charge_e};
    spec.kappa = coulomb_enabled ? us.kappa(ion_charge_e, ion_charge_e) : 0.0;
    spec.final_separation = us.position_from_si(final_separation_m);
    spec.transverse = us.position_from_si(transverse_m);
    spec.duration = duration_over_omega_t;
    spec.spatial_dims = dimensions;
    spec.steps = steps;
    spec.fock_enabled = fock_enabled;
    spec.fock_cutoff = fock_cutoff;
    spec.fock_nodes = fock_nodes;
    spec.coulomb_instantaneous = coulomb_instantaneous;
    spec.validate();
    return spec;
}

std::string config_hash(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[24];
    std::snprintf(buf, sizeof buf, "fnv1a:%016llx", static_cast<unsigned long long>(h));
    return buf;
}

DerivedQuantities derived_quantities(const ProtocolConfig& cfg) {
    const units::UnitSystem us = cfg.unit_system();
    DerivedQuantities dq;
    dq.length_m = us.length_m();
    dq.kappa = cfg.coulomb_enabled ? us.kappa(cfg.ion_charge_e, cfg.ion_charge_e) : 0.0;
    dq.d0_lengths = std::cbrt(2.0 * dq.kappa);  // softest axis is omega_t = 1
    dq.d0_m = us.position_to_si(dq.d0_lengths);
    return dq;
}

}  // namespace ionshuttle::config
