#include "ionshuttle/units.hpp"

#include <cmath>

#include "ionshuttle/errors.hpp"

namespace ionshuttle::units {

UnitSystem::UnitSystem(double ref_mass_kg, double ref_omega_rad_s)
    : mass_kg_(ref_mass_kg), omega_(ref_omega_rad_s) {
    if (!(mass_kg_ > 0.0) || !(omega_ > 0.0))
        throw validation_error("UnitSystem: reference mass and frequency must be positive");
    length_ = std::sqrt(kHbar / (mass_kg_ * omega_));
}

double UnitSystem::energy_j() const { return kHbar * omega_; }

double UnitSystem::kappa(double charge1, double charge2) const {
    if (!(charge1 > 0.0) || !(charge2 > 0.0))
        throw validation_error("UnitSystem::kappa: charges must be positive");
    const double c_coul =
        charge1 * charge2 * kElementaryCharge * kElementaryCharge * kCoulombConstant;
    return c_coul / (mass_kg_ * omega_ * omega_ * length_ * length_ * length_);
}

}  // namespace ionshuttle::units
