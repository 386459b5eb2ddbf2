// units.hpp — internal unit system and ion species.
//
// All numerics run in harmonic-oscillator units of a reference ion in the
// reference trap: hbar = 1, mass = m_ref, frequency = omega_ref. The vacuum
// covariance is then diag(1/2, ...) and every matrix in the pipeline sits
// near unity. UnitSystem converts config-level SI quantities in and out.

#pragma once

namespace ionshuttle::units {

// CODATA 2018
inline constexpr double kHbar = 1.054571817e-34;          // J s
inline constexpr double kElementaryCharge = 1.602176634e-19;  // C
inline constexpr double kCoulombConstant = 8.9875517923e9;    // N m^2 / C^2 (1/(4 pi eps0))
inline constexpr double kAtomicMassUnit = 1.66053906660e-27;  // kg

struct IonSpecies {
    double mass = 1.0;    // in units of the reference mass
    double charge = 1.0;  // in units of the elementary charge
};

class UnitSystem {
  public:
    UnitSystem(double ref_mass_kg, double ref_omega_rad_s);

    double ref_mass_kg() const { return mass_kg_; }
    double ref_omega() const { return omega_; }

    double length_m() const { return length_; }    // sqrt(hbar / (m omega))
    double energy_j() const;                       // hbar omega
    double time_s() const { return 1.0 / omega_; }

    // Dimensionless Coulomb strength kappa = q1 q2 e^2/(4 pi eps0) / (m w^2 l^3)
    double kappa(double charge1 = 1.0, double charge2 = 1.0) const;

    double position_to_si(double x) const { return x * length_; }
    double position_from_si(double x_m) const { return x_m / length_; }
    double time_to_si(double t) const { return t / omega_; }
    double time_from_si(double t_s) const { return t_s * omega_; }
    double frequency_from_si(double omega_rad_s) const { return omega_rad_s / omega_; }
    double mass_from_si(double m_kg) const { return m_kg / mass_kg_; }

  private:
    double mass_kg_;
    double omega_;
    double length_;
};

}  // namespace ionshuttle::units
