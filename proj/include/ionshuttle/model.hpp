// model.hpp — quadratic Hamiltonians, Gaussian states, ground states,
// state fidelity, and Fock-basis populations.
//
// Phase-space ordering follows X = (x_1 .. x_N, p_1 .. p_N); the vacuum
// covariance in internal units is diag(1/2, ...).

#pragma once

#include <map>
#include <utility>
#include <vector>

#include "ionshuttle/numkit.hpp"
#include "ionshuttle/units.hpp"

namespace ionshuttle::model {

using numkit::Mat;
using numkit::Vec;

// Symplectic form S = [[0, 1], [-1, 0]] in Nd-dimensional blocks.
Mat symplectic_form(std::size_t nd);

struct QuadraticHamiltonian {
    Mat omega_xx;  // Nd x Nd, symmetric
    Mat omega_pp;  // Nd x Nd, diagonal 1/m per coordinate
    Vec v;         // 2Nd linear coefficients, H = X^T Omega X / 2 + V.X

    std::size_t nd() const { return omega_xx.rows(); }
    Mat full_omega() const;   // blockdiag(omega_xx, omega_pp)
    Vec masses() const;       // per-coordinate masses from omega_pp
};

struct GaussianState {
    Vec z;      // 2Nd means, positions then momenta
    Mat sigma;  // 2Nd x 2Nd covariance

    std::size_t nd() const { return z.size() / 2; }
    double purity_det() const;  // det(2 Sigma); 1 for pure states
    bool is_pure(double tol = 1e-6) const;
};

struct TrapTerm {
    Mat curvature;  // M_i, d x d (per unit mass)
    Vec force;      // F_i, d
};

// Omega_xx gets diagonal blocks m_i M_i and off-diagonal coupling blocks;
// V = (-F_1 .. -F_N, 0 .. 0). Coupling keys are (i, j) with i < j.
QuadraticHamiltonian assemble_hamiltonian(
    const std::vector<TrapTerm>& traps,
    const std::map<std::pair<std::size_t, std::size_t>, Mat>& couplings,
    const std::vector<units::IonSpecies>& ions);

// Gaussian ground state via mass-weighted normal modes. Requires omega_xx
// positive definite.
GaussianState ground_state(const QuadraticHamiltonian& h);

// |<a|b>|^2 for pure Gaussian states.
double fidelity(const GaussianState& a, const GaussianState& b);

struct NormalModes {
    Vec frequencies;   // one per mode, ordered by dominant coordinate
    Mat mode_matrix;   // columns = mass-weighted eigenvectors, reordered
    Vec masses;        // per coordinate
    Vec origin;        // stationary mean positions of the reference
};

NormalModes normal_modes(const QuadraticHamiltonian& h);

struct FockResult {
    std::map<std::vector<int>, double> populations;
    double total = 0.0;          // sum over the enumerated tuples
    double deficit = 0.0;        // 1 - total
    bool cutoff_warning = false; // total below 0.99
};

// Populations |<n_1..n_m|psi>|^2 in the normal-mode Fock basis of h_ref,
// by tensor-product Gauss-Hermite quadrature of the position-space overlap.
// cutoff = max quanta per mode; quad_nodes = nodes per dimension.
FockResult fock_populations(const GaussianState& state, const QuadraticHamiltonian& h_ref,
                            int cutoff, int quad_nodes = 32);

// Gauss-Hermite nodes/weights for weight exp(-z^2), ascending nodes.
struct GaussHermite {
    Vec nodes;
    Vec weights;
};
GaussHermite gauss_hermite(int n);

}  // namespace ionshuttle::model
