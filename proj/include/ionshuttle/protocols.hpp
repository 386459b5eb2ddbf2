// protocols.hpp — build and run the two-ion separation protocol (and
// variants) from spec parameters to a full result record.
//
// All quantities are in internal oscillator units of the reference ion
// (hbar = m = omega_t = 1); the config layer converts SI values in and out.

#pragma once

#include <array>
#include <string>
#include <vector>

#include "ionshuttle/coulomb.hpp"
#include "ionshuttle/dynamics.hpp"
#include "ionshuttle/invariant.hpp"
#include "ionshuttle/model.hpp"
#include "ionshuttle/units.hpp"

namespace ionshuttle::protocols {

using numkit::CMat;
using numkit::Mat;
using numkit::Vec;

struct SeparationSpec {
    double omega_t = 1.0;
    double omega_r = 10.0;
    units::IonSpecies ion{1.0, 1.0};
    double kappa = 0.0;             // dimensionless Coulomb strength
    double final_separation = 0.0;  // distance between the final wells
    double transverse = 0.0;        // displacement into the junction arm
    double duration = 3.0;
    int spatial_dims = 2;
    std::size_t steps = 4000;

    bool fock_enabled = true;
    int fock_cutoff = 4;
    int fock_nodes = 32;

    // Evaluate the Coulomb coupling at the instantaneous simulated means
    // instead of the designed ones (nonlinear replay of the lab controls).
    bool coulomb_instantaneous = false;

    void validate() const;  // throws validation_error naming the violation
};

// p(tau) = 10 tau^3 - 15 tau^4 + 6 tau^5; tau outside [0, 1] is a range error.
double polynomial_p(double tau);
invariant::Quintic polynomial_p_derivatives(double tau);

// Everything the synthesis produces before any simulation happens.
struct SeparationBuild {
    Vec times;                      // n + 1 sample instants
    dynamics::HamiltonianPath ham;  // effective Hamiltonian, half-grid sampled
    invariant::TrapControl control; // physical (lab) curvatures and forces
    std::vector<invariant::InvariantFrame> frames;
    std::vector<CMat> y_path;       // Y(t) = U R / sqrt(m), one per sample
    std::vector<Mat> m_eff;         // effective single-ion curvature per sample
    std::vector<Mat> coupling;      // D(t) per sample
    std::vector<Vec> z_design;      // designed phase-space trajectory
    model::GaussianState initial;
    model::QuadraticHamiltonian h_initial;
    model::QuadraticHamiltonian h_final;
    model::QuadraticHamiltonian h_ref_local;  // decoupled final-trap reference
    Mat lab_confinement_0, lab_confinement_T;
    // half-grid data kept for the nonlinear replay
    std::vector<Mat> mtilde_half;
    std::vector<std::array<Vec, 2>> force_lab_half;
};

SeparationBuild build_separation(const SeparationSpec& spec);

struct ResidualSummary {
    double max_purity_drift = 0.0;      // max |det(2 Sigma) - 1|
    double i_drift_rel = 0.0;           // max relative drift of <I>
    double max_gamma_residual = 0.0;    // invariant equation-of-motion residual
    double max_q_rel = 0.0;             // max relative ||Q_i||
    double max_mean_error = 0.0;        // max |Z_sim - Z_design| component
    double boundary_error_0 = 0.0;      // ||M(0) - configured|| (max entry)
    double boundary_error_T = 0.0;
    double max_curvature_asymmetry = 0.0;
    double min_uncertainty_eig = 0.0;   // min eig of Sigma + (i/2) S over the run
};

struct ProtocolResult {
    double fidelity = 0.0;
    model::FockResult fock;
    dynamics::SimulationTrace trace;
    invariant::TrapControl control;
    std::vector<Vec> z_design;
    Vec i_expect;
    Vec gamma_residual;
    Vec q_rel;
    model::GaussianState target;
    std::vector<std::pair<double, Mat>> snapshots;  // covariance at 0, T/2, T
    Mat target_sigma;
    ResidualSummary summary;
};

ProtocolResult run(const SeparationSpec& spec);

struct SweepPoint {
    double duration = 0.0;
    double fidelity = 0.0;
    double max_residual = 0.0;
    std::string status;  // "ok" or an error description
};

// Independent runs per duration, distributed over a worker pool
// (IONSHUTTLE_WORKERS caps the thread count). Grid sizes scale with T.
std::vector<SweepPoint> sweep(const SeparationSpec& spec, const std::vector<double>& durations);

// Default fidelity-sweep grid: 15 points, geometric between 2 and 12.
std::vector<double> default_sweep_durations();

// c_i(t) = (m_i M_i(t))^-1 F_i(t) per ion; singular M_i is reported with its
// time stamp.
std::vector<std::vector<Vec>> trap_centers(const invariant::TrapControl& control,
                                           const std::vector<units::IonSpecies>& ions);

}  // namespace ionshuttle::protocols
