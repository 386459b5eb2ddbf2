// coulomb.hpp — Coulomb coupling matrices, second-order expansion, and
// classical equilibrium positions of two trapped ions.

#pragma once

#include <utility>

#include "ionshuttle/numkit.hpp"
#include "ionshuttle/units.hpp"

namespace ionshuttle::coulomb {

using numkit::Mat;
using numkit::Vec;

// Separations below this (in oscillator lengths) count as ion coalescence.
inline constexpr double kMinSeparation = 1e-9;

// Interaction matrix D(r) = kappa (1/|r|^3 - 3 r r^T/|r|^5).
// kappa == 0 returns the zero matrix regardless of r.
Mat interaction_matrix(const Vec& r, double kappa);

struct QuadraticExpansion {
    double value;  // kappa/|r|
    Vec gradient;  // d/dr (kappa/|r|) = -kappa r/|r|^3
    Mat hessian;   // d^2/dr^2 (kappa/|r|)  (= -D(r))
};

// Second-order Taylor data of the pair potential kappa/|r|.
QuadraticExpansion coulomb_quadratic(const Vec& r, double kappa);

// Classical equilibrium of two ions in a shared harmonic well centred at the
// origin with curvature m0 (per unit mass). Ions must have equal masses; the
// pair separates along the softest axis of m0. Returns (x1, x2) with
// x2 = -x1. Newton iteration, residual force below 1e-12 per component.
std::pair<Vec, Vec> equilibrium_positions(const Mat& m0, const units::IonSpecies& ion1,
                                          const units::IonSpecies& ion2, double kappa);

// General variant: each ion i sits in its own well of curvature m_i centred
// at w_i. Seeded from the given guess (pass the well centres when in doubt).
std::pair<Vec, Vec> equilibrium_in_wells(const Mat& m1, const Vec& w1, const Mat& m2,
                                         const Vec& w2, double mass1, double mass2, double kappa,
                                         const Vec& guess1, const Vec& guess2);

}  // namespace ionshuttle::coulomb
