// invariant.hpp — the inverse-engineering engine. From a designed schedule of
// the positive-definite matrix R(t) and classical trajectories, produce the
// trap curvatures M(t), drives V(t), and the invariant data (U, Gamma), with
// residual checks.
//
// Conventions for the symmetric two-ion reduction: P = sqrt(m_i) Y_i obeys
// P'' + P Mtilde = 0 with Mtilde = M + D/sqrt(m1 m2). P = U R with U unitary
// (U' = U A) and R the designed positive-definite factor.

#pragma once

#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "ionshuttle/model.hpp"
#include "ionshuttle/numkit.hpp"

namespace ionshuttle::invariant {

using numkit::CMat;
using numkit::Mat;
using numkit::Vec;

// Quintic blend p(tau) = 10 tau^3 - 15 tau^4 + 6 tau^5 with derivatives.
struct Quintic {
    double p;
    double dp;
    double ddp;
};
Quintic quintic_blend(double tau);

// Designed schedule: evaluators for R(t), Rdot(t), Rddot(t) on [0, duration].
struct RSchedule {
    double duration = 0.0;
    std::function<Mat(double)> r;
    std::function<Mat(double)> rdot;
    std::function<Mat(double)> rddot;
};

// Boundary value R = (M_b + D_b/sqrt(m1 m2))^(-1/4).
Mat boundary_R(const Mat& m_b, const Mat& d_b, double mass1, double mass2);

// Entrywise interpolation R(tau) = (1 - p(tau)) R0 + p(tau) RT with the
// quintic blend; endpoint first and second derivatives vanish exactly.
RSchedule interpolate_R(const Mat& r0, const Mat& rT, double duration);

// J solves {J, R^-2} = [Rdot, R^-1] + R Rdot R^-2 - R^-2 Rdot R; antisymmetric.
Mat solve_J(const Mat& r, const Mat& rdot);

// A = i R^-2 + [R^-1, Rdot]/2 + R^-1 J R^-1 / 2; anti-Hermitian.
CMat compute_A(const Mat& r, const Mat& rdot, const Mat& j);

// Mtilde solves {R^2, Mtilde} = 2 [Rdot, R]_A - 2 R A^2 R - {Rddot, R}.
// The right side must come out real (checked to 1e-10); the solve residual
// must stay below 1e-8, otherwise a consistency error is raised.
Mat solve_Mtilde(const Mat& r, const Mat& rdot, const Mat& rddot, const CMat& a);

// M = Mtilde - D/sqrt(m1 m2).
Mat trap_from_mtilde(const Mat& mtilde, const Mat& d, double mass1, double mass2);

// Linear drive from the designed trajectory: V = -S Zdot - Omega Z.
Vec linear_drive(const Vec& z, const Vec& zdot, const model::QuadraticHamiltonian& h);

// Integrate U' = U A(t) from U(0) = 1 with RK4 on the grid, re-unitarising
// every `reunitarize_every` steps. Unitarity drift beyond 1e-8 between
// re-unitarisations raises a step-size error.
std::vector<CMat> propagate_U(const std::function<CMat(double)>& a_of_t, const Vec& grid,
                              std::size_t reunitarize_every = 100);

// All engine quantities at one instant of a schedule.
struct EngineSample {
    Mat r, rdot, rddot;
    Mat j;
    CMat a;
    Mat mtilde;
};
EngineSample evaluate_engine(const RSchedule& schedule, double t);

struct InvariantFrame {
    CMat u;     // d x d unitary
    Mat gamma;  // 2Nd x 2Nd, PSD, rank <= 2d
    Vec z;      // 2Nd phase-space trajectory point
};

// Gamma = Re(G^dag G) with G = (m1 Ydot1 .. mN YdotN, -Y1 .. -YN) for the
// symmetric two-ion case, Y_i = U R / sqrt(m_i).
InvariantFrame build_gamma(const Mat& r, const Mat& rdot, const CMat& u, double mass1,
                           double mass2, const Vec& z);

// Q_i = m_i (Y_i M_i + Yddot_i) + sum_{j != i} Y_j D[i, j]; diagnostic.
std::vector<CMat> residual_Q(const std::vector<CMat>& y, const std::vector<CMat>& yddot,
                             const std::vector<Mat>& m_eff,
                             const std::map<std::pair<std::size_t, std::size_t>, Mat>& couplings,
                             const std::vector<double>& masses);

// Synthesized, experimentally tunable output: the physical trap curvature and
// force for each ion, sampled on the simulation grid.
struct TrapControl {
    Vec times;
    std::vector<std::vector<Mat>> curvature;  // [ion][sample], d x d
    std::vector<std::vector<Vec>> force;      // [ion][sample], d
};

}  // namespace ionshuttle::invariant
