#include "ionshuttle/protocols.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <map>
#include <thread>

#include "ionshuttle/errors.hpp"

namespace ionshuttle::protocols {

using invariant::Quintic;

void SeparationSpec::validate() const {
    if (!(omega_t > 0.0)) throw validation_error("spec: omega_t must be positive");
    if (!(omega_r > omega_t))
        throw validation_error("spec: omega_r > omega_t is required (strong transverse confinement)");
    if (!(ion.mass > 0.0)) throw validation_error("spec: ion mass must be positive");
    if (!(ion.charge > 0.0)) throw validation_error("spec: ion charge must be positive");
    if (kappa < 0.0) throw validation_error("spec: kappa must be non-negative");
    if (!(final_separation > 0.0)) throw validation_error("spec: final separation must be positive");
    if (transverse < 0.0) throw validation_error("spec: transverse displacement must be non-negative");
    if (!(duration > 0.0)) throw validation_error("spec: duration must be positive");
    if (spatial_dims != 2 && spatial_dims != 3)
        throw validation_error("spec: spatial dimension must be 2 or 3");
    if (steps < 2) throw validation_error("spec: need at least 2 grid steps");
    if (steps > 100000000) throw validation_error("spec: grid too large (over 1e8 steps)");
    if (fock_cutoff < 0) throw validation_error("spec: fock cutoff must be non-negative");
    if (fock_nodes < 2) throw validation_error("spec: fock nodes must be at least 2");
}

double polynomial_p(double tau) {
    if (tau < 0.0 || tau > 1.0) throw validation_error("polynomial_p: tau outside [0, 1]");
    return invariant::quintic_blend(tau).p;
}

Quintic polynomial_p_derivatives(double tau) {
    if (tau < 0.0 || tau > 1.0) throw validation_error("polynomial_p: tau outside [0, 1]");
    return invariant::quintic_blend(tau);
}

namespace {

std::size_t even_steps(std::size_t n) { return (n % 2 == 0) ? n : n + 1; }

Vec axis_vec(std::size_t d, std::size_t axis, double value) {
    Vec v(d, 0.0);
    v[axis] = value;
    return v;
}

struct Trajectory {
    Vec x0_1, x0_2, dx_1, dx_2;
    double duration;
    std::size_t d;

    void eval(double t, Vec& x1, Vec& x2, Vec& v1, Vec& v2) const {
        const Quintic q = invariant::quintic_blend(t / duration);
        x1.resize(d);
        x2.resize(d);
        v1.resize(d);
        v2.resize(d);
        for (std::size_t k = 0; k < d; ++k) {
            x1[k] = x0_1[k] + q.p * dx_1[k];
            x2[k] = x0_2[k] + q.p * dx_2[k];
            v1[k] = q.dp / duration * dx_1[k];
            v2[k] = q.dp / duration * dx_2[k];
        }
    }
};

Vec phase_point(const Vec& x1, const Vec& x2, const Vec& v1, const Vec& v2, double mass) {
    const std::size_t d = x1.size();
    Vec z(4 * d);
    for (std::size_t k = 0; k < d; ++k) {
        z[k] = x1[k];
        z[d + k] = x2[k];
        z[2 * d + k] = mass * v1[k];
        z[3 * d + k] = mass * v2[k];
    }
    return z;
}

}  // namespace

SeparationBuild build_separation(const SeparationSpec& spec) {
    spec.validate();
    const std::size_t d = static_cast<std::size_t>(spec.spatial_dims);
    const double m = spec.ion.mass;
    const double big_t = spec.duration;
    const std::size_t n = even_steps(spec.steps);

    // Lab confinements: the strong axis rotates from y to x while the
    // separation axis softens from omega_t to omega_r; a third dimension
    // stays strongly confined throughout.
    Vec diag0(d, spec.omega_r * spec.omega_r), diag_t(d, spec.omega_r * spec.omega_r);
    diag0[0] = spec.omega_t * spec.omega_t;
    diag0[1] = spec.omega_r * spec.omega_r;
    diag_t[0] = spec.omega_r * spec.omega_r;
    diag_t[1] = spec.omega_t * spec.omega_t;
    const Mat k0 = Mat::diagonal(diag0);
    const Mat k_t = Mat::diagonal(diag_t);

    // Classical endpoints: joint well at the origin initially, separate
    // wells at (+-dsep/2, y_T) finally.
    auto [x1_0, x2_0] = coulomb::equilibrium_positions(k0, spec.ion, spec.ion, spec.kappa);
    Vec w1 = axis_vec(d, 0, 0.5 * spec.final_separation);
    Vec w2 = axis_vec(d, 0, -0.5 * spec.final_separation);
    w1[1] = spec.transverse;
    w2[1] = spec.transverse;
    auto [x1_t, x2_t] =
        coulomb::equilibrium_in_wells(k_t, w1, k_t, w2, m, m, spec.kappa, w1, w2);

    // Orient the initial pair so ion 1 travels to the +x well; mirrored
    // trajectories would cross otherwise.
    double along = 0.0;
    for (std::size_t k = 0; k < d; ++k) along += (x1_0[k] - x2_0[k]) * (w1[k] - w2[k]);
    if (along < 0.0) std::swap(x1_0, x2_0);

    Trajectory traj;
    traj.x0_1 = x1_0;
    traj.x0_2 = x2_0;
    traj.dx_1 = Vec(d);
    traj.dx_2 = Vec(d);
    for (std::size_t k = 0; k < d; ++k) {
        traj.dx_1[k] = x1_t[k] - x1_0[k];
        traj.dx_2[k] = x2_t[k] - x2_0[k];
    }
    traj.duration = big_t;
    traj.d = d;

    // Boundary R from the effective confinements (lab curvature minus the
    // single-ion Coulomb contribution).
    Vec r_sep0(d), r_sep_t(d);
    for (std::size_t k = 0; k < d; ++k) {
        r_sep0[k] = x1_0[k] - x2_0[k];
        r_sep_t[k] = x1_t[k] - x2_t[k];
    }
    const Mat d_0 = coulomb::interaction_matrix(r_sep0, spec.kappa);
    const Mat d_t = coulomb::interaction_matrix(r_sep_t, spec.kappa);
    const Mat m_eff_0 = k0 - (1.0 / m) * d_0;
    const Mat m_eff_t = k_t - (1.0 / m) * d_t;
    const Mat r0 = invariant::boundary_R(m_eff_0, d_0, m, m);
    const Mat r_t = invariant::boundary_R(m_eff_t, d_t, m, m);
    const invariant::RSchedule sched = invariant::interpolate_R(r0, r_t, big_t);

    SeparationBuild build;
    build.lab_confinement_0 = k0;
    build.lab_confinement_T = k_t;
    build.times.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) build.times[i] = big_t * static_cast<double>(i) / n;

    const std::vector<units::IonSpecies> ions{spec.ion, spec.ion};
    build.ham.times = build.times;
    build.ham.omega_xx.reserve(2 * n + 1);
    build.ham.v.reserve(2 * n + 1);
    build.control.times = build.times;
    build.control.curvature.assign(2, std::vector<Mat>());
    build.control.force.assign(2, std::vector<Vec>());
    build.mtilde_half.reserve(2 * n + 1);
    build.force_lab_half.reserve(2 * n + 1);

    Vec x1, x2, v1, v2;
    for (std::size_t k = 0; k <= 2 * n; ++k) {
        const double t = big_t * static_cast<double>(k) / (2 * n);
        const invariant::EngineSample es = invariant::evaluate_engine(sched, t);
        traj.eval(t, x1, x2, v1, v2);

        Vec r_sep(d);
        for (std::size_t c = 0; c < d; ++c) r_sep[c] = x1[c] - x2[c];
        const Mat coupling = coulomb::interaction_matrix(r_sep, spec.kappa);
        const Mat m_eff = invariant::trap_from_mtilde(es.mtilde, coupling, m, m);

        model::QuadraticHamiltonian h = model::assemble_hamiltonian(
            {{m_eff, Vec(d, 0.0)}, {m_eff, Vec(d, 0.0)}}, {{{0, 1}, coupling}}, ions);
        const Vec z = phase_point(x1, x2, v1, v2, m);
        Vec zdot(4 * d);
        {
            const Quintic q = invariant::quintic_blend(t / big_t);
            for (std::size_t c = 0; c < d; ++c) {
                zdot[c] = v1[c];
                zdot[d + c] = v2[c];
                zdot[2 * d + c] = m * q.ddp / (big_t * big_t) * traj.dx_1[c];
                zdot[3 * d + c] = m * q.ddp / (big_t * big_t) * traj.dx_2[c];
            }
        }
        h.v = invariant::linear_drive(z, zdot, h);
        build.ham.omega_xx.push_back(h.omega_xx);
        build.ham.v.push_back(h.v);
        if (k == 0) build.ham.omega_pp = h.omega_pp;
        build.mtilde_half.push_back(es.mtilde);

        // Physical (lab) forces: strip the linear Coulomb contribution from
        // the effective drive.
        std::array<Vec, 2> f_lab{Vec(d, 0.0), Vec(d, 0.0)};
        for (std::size_t c = 0; c < d; ++c) {
            f_lab[0][c] = -h.v[c];
            f_lab[1][c] = -h.v[d + c];
        }
        if (spec.kappa > 0.0) {
            const double rn = numkit::norm(r_sep);
            for (std::size_t c = 0; c < d; ++c) {
                const double corr = 3.0 * spec.kappa * r_sep[c] / (rn * rn * rn);
                f_lab[0][c] -= corr;
                f_lab[1][c] += corr;
            }
        }
        build.force_lab_half.push_back(f_lab);

        if (k % 2 == 0) {
            build.m_eff.push_back(m_eff);
            build.coupling.push_back(coupling);
            build.z_design.push_back(z);
            for (int ion_i = 0; ion_i < 2; ++ion_i) {
                build.control.curvature[ion_i].push_back(es.mtilde);
                build.control.force[ion_i].push_back(f_lab[ion_i]);
            }
        }
    }

    const auto a_of_t = [&sched](double t) {
        const Mat r = sched.r(t);
        const Mat rdot = sched.rdot(t);
        return invariant::compute_A(r, rdot, invariant::solve_J(r, rdot));
    };
    const std::vector<CMat> u_path = invariant::propagate_U(a_of_t, build.times);

    build.frames.reserve(n + 1);
    build.y_path.reserve(n + 1);
    const double inv_sqrt_m = 1.0 / std::sqrt(m);
    for (std::size_t i = 0; i <= n; ++i) {
        const Mat r_i = sched.r(build.times[i]);
        const Mat rdot_i = sched.rdot(build.times[i]);
        build.frames.push_back(
            invariant::build_gamma(r_i, rdot_i, u_path[i], m, m, build.z_design[i]));
        build.y_path.push_back(numkit::cplx(inv_sqrt_m) *
                               (u_path[i] * CMat::from_parts(r_i, Mat(d, d))));
    }

    build.h_initial = build.ham.at_sample(0);
    build.h_final = build.ham.at_sample(n);
    build.initial = model::ground_state(build.h_initial);

    // Fock reference: each ion in its own final well, Coulomb dropped; its
    // normal modes are the local (x1, y1, .., x2, y2, ..) oscillators.
    {
        Vec f1 = k_t * x1_t;
        Vec f2 = k_t * x2_t;
        for (std::size_t c = 0; c < d; ++c) {
            f1[c] *= m;
            f2[c] *= m;
        }
        build.h_ref_local =
            model::assemble_hamiltonian({{k_t, f1}, {k_t, f2}}, {}, ions);
    }
    return build;
}

namespace {

// Nonlinear replay: fixed lab controls, Coulomb coupling re-expanded around
// the instantaneous simulated means at every RK4 stage.
dynamics::SimulationTrace propagate_replay(const SeparationBuild& build,
                                           const SeparationSpec& spec) {
    const std::size_t d = static_cast<std::size_t>(spec.spatial_dims);
    const std::size_t n = build.times.size() - 1;
    const double m = spec.ion.mass;
    const double dt = build.times[1] - build.times[0];

    const auto flow = [&](std::size_t half, const Vec& z, const Mat& sigma, Vec& zdot,
                          Mat& sigmadot) {
        Vec r_sep(d);
        for (std::size_t c = 0; c < d; ++c) r_sep[c] = z[c] - z[d + c];
        const Mat coupling = coulomb::interaction_matrix(r_sep, spec.kappa);
        const Mat m_eff = invariant::trap_from_mtilde(build.mtilde_half[half], coupling, m, m);

        Mat omega_xx(2 * d, 2 * d);
        omega_xx.set_block(0, 0, m * m_eff);
        omega_xx.set_block(d, d, m * m_eff);
        omega_xx.set_block(0, d, coupling);
        omega_xx.set_block(d, 0, coupling);

        Vec v_x(2 * d, 0.0);
        for (std::size_t c = 0; c < d; ++c) {
            v_x[c] = -build.force_lab_half[half][0][c];
            v_x[d + c] = -build.force_lab_half[half][1][c];
        }
        if (spec.kappa > 0.0) {
            const double rn = numkit::norm(r_sep);
            for (std::size_t c = 0; c < d; ++c) {
                const double corr = 3.0 * spec.kappa * r_sep[c] / (rn * rn * rn);
                v_x[c] -= corr;
                v_x[d + c] += corr;
            }
        }

        zdot.assign(4 * d, 0.0);
        for (std::size_t i = 0; i < 2 * d; ++i) {
            zdot[i] = z[2 * d + i] / m;
            double acc = -v_x[i];
            for (std::size_t j = 0; j < 2 * d; ++j) acc -= omega_xx(i, j) * z[j];
            zdot[2 * d + i] = acc;
        }
        Mat bs(4 * d, 4 * d);
        for (std::size_t i = 0; i < 2 * d; ++i)
            for (std::size_t j = 0; j < 4 * d; ++j) bs(i, j) = sigma(2 * d + i, j) / m;
        for (std::size_t i = 0; i < 2 * d; ++i)
            for (std::size_t j = 0; j < 4 * d; ++j) {
                double acc = 0.0;
                for (std::size_t k = 0; k < 2 * d; ++k) acc -= omega_xx(i, k) * sigma(k, j);
                bs(2 * d + i, j) = acc;
            }
        sigmadot = bs + bs.transposed();
    };

    dynamics::SimulationTrace trace;
    trace.times = build.times;
    trace.purity.resize(n + 1);
    model::GaussianState s = build.initial;
    trace.states.push_back(s);
    trace.purity[0] = s.purity_det();

    Vec kz1, kz2, kz3, kz4, ztmp;
    Mat ks1, ks2, ks3, ks4;
    for (std::size_t i = 0; i < n; ++i) {
        flow(2 * i, s.z, s.sigma, kz1, ks1);
        ztmp = s.z;
        for (std::size_t c = 0; c < ztmp.size(); ++c) ztmp[c] += 0.5 * dt * kz1[c];
        flow(2 * i + 1, ztmp, s.sigma + 0.5 * dt * ks1, kz2, ks2);
        ztmp = s.z;
        for (std::size_t c = 0; c < ztmp.size(); ++c) ztmp[c] += 0.5 * dt * kz2[c];
        flow(2 * i + 1, ztmp, s.sigma + 0.5 * dt * ks2, kz3, ks3);
        ztmp = s.z;
        for (std::size_t c = 0; c < ztmp.size(); ++c) ztmp[c] += dt * kz3[c];
        flow(2 * i + 2, ztmp, s.sigma + dt * ks3, kz4, ks4);
        for (std::size_t c = 0; c < s.z.size(); ++c)
            s.z[c] += dt / 6.0 * (kz1[c] + 2.0 * kz2[c] + 2.0 * kz3[c] + kz4[c]);
        s.sigma += dt / 6.0 * (ks1 + 2.0 * ks2 + 2.0 * ks3 + ks4);
        s.sigma = s.sigma.symmetrized();
        const double purity = s.purity_det();
        if (std::abs(purity - 1.0) > 1e-4)
            throw numerical_error("propagate_replay: purity drift at t = " +
                                  std::to_string(build.times[i + 1]));
        trace.states.push_back(s);
        trace.purity[i + 1] = purity;
    }
    return trace;
}

double max_entry_diff(const Mat& a, const Mat& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
    return m;
}

// Minimum eigenvalue of the Hermitian matrix Sigma + (i/2) S via the real
// symmetric embedding [[Sigma, -S/2], [S/2, Sigma]].
double uncertainty_min_eig(const Mat& sigma, const Mat& s_form) {
    const std::size_t n = sigma.rows();
    Mat emb(2 * n, 2 * n);
    emb.set_block(0, 0, sigma);
    emb.set_block(n, n, sigma);
    emb.set_block(0, n, -0.5 * s_form);
    emb.set_block(n, 0, 0.5 * s_form);
    return numkit::eigh(emb.symmetrized()).values.front();
}

}  // namespace

ProtocolResult run(const SeparationSpec& spec) {
    const SeparationBuild build = build_separation(spec);
    const std::size_t n = build.times.size() - 1;
    const double m = spec.ion.mass;

    ProtocolResult result;
    result.trace = spec.coulomb_instantaneous ? propagate_replay(build, spec)
                                              : dynamics::propagate(build.ham, build.initial);
    result.control = build.control;
    result.z_design = build.z_design;

    result.target = model::ground_state(build.h_final);
    result.fidelity = model::fidelity(result.trace.states.back(), result.target);
    if (spec.fock_enabled) {
        // keep the tensor grid below ~3e6 points: 32 nodes for 4 modes,
        // automatically fewer for 6 modes (3-D runs)
        const double modes = 2.0 * spec.spatial_dims;
        const int node_cap = static_cast<int>(std::pow(3.0e6, 1.0 / modes));
        const int nodes = std::max(2 * (spec.fock_cutoff + 1), std::min(spec.fock_nodes, node_cap));
        result.fock = model::fock_populations(result.trace.states.back(), build.h_ref_local,
                                              spec.fock_cutoff, nodes);
    }

    // Diagnostics along the run.
    result.i_expect.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i)
        result.i_expect[i] =
            dynamics::invariant_expectation(result.trace.states[i], build.frames[i]);

    std::vector<Mat> gammas;
    gammas.reserve(n + 1);
    for (const auto& f : build.frames) gammas.push_back(f.gamma);
    result.gamma_residual = dynamics::invariant_residual(gammas, build.ham);

    // Q residual with fourth-order finite-difference Yddot, independent of
    // the engine identities that produced Mtilde.
    result.q_rel.assign(n + 1, 0.0);
    const double dt = build.times[1] - build.times[0];
    for (std::size_t i = 2; i + 2 <= n; ++i) {
        const CMat yddot =
            numkit::cplx(1.0 / (12.0 * dt * dt)) *
            (numkit::cplx(-1.0) * build.y_path[i + 2] + numkit::cplx(16.0) * build.y_path[i + 1] -
             numkit::cplx(30.0) * build.y_path[i] + numkit::cplx(16.0) * build.y_path[i - 1] -
             numkit::cplx(1.0) * build.y_path[i - 2]);
        const std::vector<CMat> q = invariant::residual_Q(
            {build.y_path[i], build.y_path[i]}, {yddot, yddot}, {build.m_eff[i], build.m_eff[i]},
            {{{0, 1}, build.coupling[i]}}, {m, m});
        const double scale = std::max(m * yddot.frobenius(), 1e-300);
        for (const CMat& qi : q) result.q_rel[i] = std::max(result.q_rel[i], qi.frobenius() / scale);
    }

    ResidualSummary& sum = result.summary;
    for (double p : result.trace.purity)
        sum.max_purity_drift = std::max(sum.max_purity_drift, std::abs(p - 1.0));
    const double i0 = result.i_expect.front();
    for (double iv : result.i_expect)
        sum.i_drift_rel = std::max(sum.i_drift_rel, std::abs(iv - i0) / std::max(std::abs(i0), 1e-300));
    for (double r : result.gamma_residual) sum.max_gamma_residual = std::max(sum.max_gamma_residual, r);
    for (double q : result.q_rel) sum.max_q_rel = std::max(sum.max_q_rel, q);
    for (std::size_t i = 0; i <= n; ++i)
        for (std::size_t k = 0; k < build.z_design[i].size(); ++k)
            sum.max_mean_error = std::max(
                sum.max_mean_error, std::abs(result.trace.states[i].z[k] - build.z_design[i][k]));
    sum.boundary_error_0 =
        max_entry_diff(build.control.curvature[0].front(), build.lab_confinement_0);
    sum.boundary_error_T =
        max_entry_diff(build.control.curvature[0].back(), build.lab_confinement_T);
    for (const auto& per_ion : build.control.curvature)
        for (const Mat& mi : per_ion)
            sum.max_curvature_asymmetry = std::max(sum.max_curvature_asymmetry, mi.asymmetry());

    const Mat s_form = model::symplectic_form(build.ham.omega_pp.rows());
    sum.min_uncertainty_eig = 1e300;
    for (const auto& state : result.trace.states)
        sum.min_uncertainty_eig =
            std::min(sum.min_uncertainty_eig, uncertainty_min_eig(state.sigma, s_form));

    for (std::size_t i : {std::size_t{0}, n / 2, n})
        result.snapshots.emplace_back(build.times[i], result.trace.states[i].sigma);
    result.target_sigma = result.target.sigma;
    return result;
}

std::vector<double> default_sweep_durations() {
    std::vector<double> out;
    const double lo = 2.0, hi = 12.0;
    for (int k = 0; k < 15; ++k) out.push_back(lo * std::pow(hi / lo, k / 14.0));
    return out;
}

std::vector<SweepPoint> sweep(const SeparationSpec& spec, const std::vector<double>& durations) {
    spec.validate();
    if (durations.empty()) throw validation_error("sweep: empty duration list");
    for (double t : durations)
        if (!(t > 0.0)) throw validation_error("sweep: durations must be positive");

    std::vector<SweepPoint> points(durations.size());
    std::atomic<std::size_t> next{0};

    const auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= durations.size()) return;
            SweepPoint& p = points[i];
            p.duration = durations[i];
            try {
                SeparationSpec local = spec;
                local.duration = durations[i];
                // seeded from the base grid density so a point at the config's
                // own duration reproduces run() exactly
                const double density = static_cast<double>(spec.steps) / spec.duration;
                local.steps = std::max<std::size_t>(
                    50, even_steps(static_cast<std::size_t>(std::lround(density * durations[i]))));
                local.fock_enabled = false;
                const ProtocolResult r = run(local);
                p.fidelity = r.fidelity;
                p.max_residual = r.summary.max_gamma_residual;
                p.status = "ok";
            } catch (const std::exception& e) {
                p.fidelity = std::nan("");
                p.max_residual = std::nan("");
                p.status = std::string("error: ") + e.what();
            }
        }
    };

    std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("IONSHUTTLE_WORKERS")) {
        const long parsed = std::strtol(env, nullptr, 10);
        if (parsed > 0) workers = static_cast<std::size_t>(parsed);
    }
    workers = std::min(workers, durations.size());

    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    return points;
}

std::vector<std::vector<Vec>> trap_centers(const invariant::TrapControl& control,
                                           const std::vector<units::IonSpecies>& ions) {
    if (control.curvature.size() != ions.size())
        throw validation_error("trap_centers: one ion species per control channel required");
    std::vector<std::vector<Vec>> centers(control.curvature.size());
    for (std::size_t ion = 0; ion < control.curvature.size(); ++ion) {
        centers[ion].reserve(control.times.size());
        for (std::size_t i = 0; i < control.times.size(); ++i) {
            try {
                centers[ion].push_back(numkit::solve(ions[ion].mass * control.curvature[ion][i],
                                                     control.force[ion][i]));
            } catch (const numerical_error&) {
                throw numerical_error("trap_centers: singular curvature at t = " +
                                      std::to_string(control.times[i]));
            }
        }
    }
    return centers;
}

}  // namespace ionshuttle::protocols
