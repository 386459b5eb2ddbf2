// dynamics.hpp — exact Gaussian forward simulation under a time-dependent
// quadratic Hamiltonian, plus invariant-conservation diagnostics.

#pragma once

#include <vector>

#include "ionshuttle/invariant.hpp"
#include "ionshuttle/model.hpp"
#include "ionshuttle/numkit.hpp"

namespace ionshuttle::dynamics {

using numkit::Mat;
using numkit::Vec;

// Hamiltonian sampled on the half-step grid (2n + 1 samples for n steps), so
// RK4 stages see exact midpoint coefficients instead of interpolated ones.
struct HamiltonianPath {
    Vec times;                  // n + 1 output instants
    std::vector<Mat> omega_xx;  // 2n + 1 half-grid samples
    std::vector<Vec> v;         // 2n + 1 half-grid samples
    Mat omega_pp;               // constant (masses do not change)

    std::size_t steps() const { return times.size() - 1; }
    model::QuadraticHamiltonian at_sample(std::size_t i) const;  // i-th output instant
};

struct SimulationTrace {
    Vec times;
    std::vector<model::GaussianState> states;
    Vec purity;  // det(2 Sigma) per sample
};

// Mean flow Zdot = S V + S Omega Z and covariance flow
// Sigmadot = (S Omega) Sigma + Sigma (S Omega)^T, fixed-step RK4.
// Purity drift beyond 1e-4 raises a step-size error.
SimulationTrace propagate(const HamiltonianPath& h, const model::GaussianState& s0);

// Per-sample relative residual of Gammadot = Omega S Gamma - Gamma S Omega,
// with Gammadot from a fourth-order central difference. Entries where the
// five-point stencil does not fit are zero.
Vec invariant_residual(const std::vector<Mat>& gammas, const HamiltonianPath& h);

// <I> = tr(Gamma Sigma)/2 + (Z_s - Z_f)^T Gamma (Z_s - Z_f)/2.
double invariant_expectation(const model::GaussianState& state,
                             const invariant::InvariantFrame& frame);

}  // namespace ionshuttle::dynamics
