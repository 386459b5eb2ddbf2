// config.hpp — JSON protocol configs with explicit units, mapped onto the
// internal oscillator-unit SeparationSpec.

#pragma once

#include <optional>
#include <string>

#include "ionshuttle/protocols.hpp"
#include "ionshuttle/units.hpp"

namespace ionshuttle::config {

struct ProtocolConfig {
    // SI-side quantities
    double ion_mass_kg = 0.0;
    double ion_charge_e = 1.0;
    std::string ion_species;
    double omega_t_rad_s = 0.0;
    double omega_r_rad_s = 0.0;
    double final_separation_m = 0.0;
    double transverse_m = 0.0;
    double duration_over_omega_t = 0.0;  // duration in units of 1/omega_t
    int dimensions = 2;
    std::size_t steps = 4000;

    bool fock_enabled = true;
    int fock_cutoff = 4;
    int fock_nodes = 32;

    bool coulomb_enabled = true;
    bool coulomb_instantaneous = false;

    std::string output_directory = "out";
    std::size_t output_stride = 1;

    units::UnitSystem unit_system() const;
    protocols::SeparationSpec to_spec() const;
};

// Parse and schema-check a config document. Throws validation_error with a
// line-anchored message on malformed JSON and a field-anchored message on
// schema violations.
ProtocolConfig parse_config(const std::string& text);
ProtocolConfig load_config(const std::string& path);

// FNV-1a 64-bit hash of the raw config bytes, hex-encoded.
std::string config_hash(const std::string& text);

struct DerivedQuantities {
    double kappa = 0.0;
    double d0_lengths = 0.0;  // initial separation, oscillator lengths
    double d0_m = 0.0;
    double length_m = 0.0;
};

// Dimensionless parameters implied by the config (used by `validate`).
DerivedQuantities derived_quantities(const ProtocolConfig& cfg);

}  // namespace ionshuttle::config
