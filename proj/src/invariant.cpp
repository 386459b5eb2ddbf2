#include "ionshuttle/invariant.hpp"

#include <cmath>
#include <string>

#include "ionshuttle/errors.hpp"

namespace ionshuttle::invariant {

Quintic quintic_blend(double tau) {
    const double t2 = tau * tau;
    const double t3 = t2 * tau;
    return Quintic{
        10.0 * t3 - 15.0 * t3 * tau + 6.0 * t3 * t2,
        30.0 * t2 - 60.0 * t3 + 30.0 * t2 * t2,
        60.0 * tau - 180.0 * t2 + 120.0 * t3,
    };
}

Mat boundary_R(const Mat& m_b, const Mat& d_b, double mass1, double mass2) {
    if (!(mass1 > 0.0) || !(mass2 > 0.0))
        throw validation_error("boundary_R: masses must be positive");
    const Mat sum = m_b + (1.0 / std::sqrt(mass1 * mass2)) * d_b;
    try {
        return numkit::spd_power(sum, -0.25);
    } catch (const numerical_error&) {
        throw numerical_error("boundary_R: M + D/sqrt(m1 m2) not positive definite");
    }
}

RSchedule interpolate_R(const Mat& r0, const Mat& rT, double duration) {
    if (!(duration > 0.0)) throw validation_error("interpolate_R: duration must be positive");
    if (r0.rows() != rT.rows() || r0.cols() != rT.cols())
        throw validation_error("interpolate_R: endpoint shape mismatch");
    numkit::spd_power(r0, 1.0);  // positive-definite endpoint checks
    numkit::spd_power(rT, 1.0);

    const Mat delta = rT - r0;
    RSchedule s;
    s.duration = duration;
    s.r = [r0, delta, duration](double t) {
        const Quintic q = quintic_blend(t / duration);
        return r0 + q.p * delta;
    };
    s.rdot = [delta, duration](double t) {
        const Quintic q = quintic_blend(t / duration);
        return (q.dp / duration) * delta;
    };
    s.rddot = [delta, duration](double t) {
        const Quintic q = quintic_blend(t / duration);
        return (q.ddp / (duration * duration)) * delta;
    };
    return s;
}

Mat solve_J(const Mat& r, const Mat& rdot) {
    const Mat rinv = numkit::inverse(r);
    const Mat rinv2 = rinv * rinv;
    // [Rdot, R^-1] + [R, R^-2]_Rdot
    const Mat rhs = rdot * rinv - rinv * rdot + r * rdot * rinv2 - rinv2 * rdot * r;
    return numkit::solve_anticommutator(rinv2, rhs).antisymmetrized();
}

CMat compute_A(const Mat& r, const Mat& rdot, const Mat& j) {
    const Mat rinv = numkit::inverse(r);
    const Mat real_part =
        (0.5 * (rinv * rdot - rdot * rinv) + 0.5 * (rinv * j * rinv)).antisymmetrized();
    const Mat imag_part = (rinv * rinv).symmetrized();
    return CMat::from_parts(real_part, imag_part);
}

Mat solve_Mtilde(const Mat& r, const Mat& rdot, const Mat& rddot, const CMat& a) {
    const Mat k = a.real();  // antisymmetric part
    const Mat s = a.imag();  // symmetric part
    const double a_scale = std::max(1.0, a.frobenius());
    if ((k + k.transposed()).frobenius() > 1e-10 * a_scale ||
        (s - s.transposed()).frobenius() > 1e-10 * a_scale)
        throw validation_error("solve_Mtilde: A is not anti-Hermitian");

    // 2 [Rdot, R]_A - 2 R A^2 R - {Rddot, R}, split into real and imaginary
    // parts; the imaginary part must vanish for the trap to be physical.
    const Mat k2s2 = k * k - s * s;
    const Mat ks_sk = k * s + s * k;
    const Mat rhs_re =
        2.0 * (rdot * k * r - r * k * rdot) - 2.0 * (r * k2s2 * r) - (rddot * r + r * rddot);
    const Mat rhs_im = 2.0 * (rdot * s * r - r * s * rdot) - 2.0 * (r * ks_sk * r);

    const double scale = std::max(1.0, rhs_re.frobenius());
    if (rhs_im.frobenius() > 1e-10 * scale)
        throw numerical_error("solve_Mtilde: right-hand side has an imaginary part (|Im| = " +
                              std::to_string(rhs_im.frobenius()) + ")");

    const Mat r2 = (r * r).symmetrized();
    const Mat mtilde = numkit::solve_anticommutator(r2, rhs_re.symmetrized());
    const Mat residual = r2 * mtilde + mtilde * r2 - rhs_re;
    if (residual.frobenius() > 1e-8 * scale)
        throw numerical_error("solve_Mtilde: anticommutator solve residual above tolerance");
    return mtilde.symmetrized();
}

Mat trap_from_mtilde(const Mat& mtilde, const Mat& d, double mass1, double mass2) {
    if (!(mass1 > 0.0) || !(mass2 > 0.0))
        throw validation_error("trap_from_mtilde: masses must be positive");
    return mtilde - (1.0 / std::sqrt(mass1 * mass2)) * d;
}

Vec linear_drive(const Vec& z, const Vec& zdot, const model::QuadraticHamiltonian& h) {
    const std::size_t n = h.nd();
    if (z.size() != 2 * n || zdot.size() != 2 * n)
        throw validation_error("linear_drive: dimension mismatch");
    Vec v(2 * n, 0.0);
    // V_x = -Zdot_p - Omega_xx Z_x ; V_p = Zdot_x - Omega_pp Z_p
    for (std::size_t i = 0; i < n; ++i) {
        double acc = -zdot[n + i];
        for (std::size_t j = 0; j < n; ++j) acc -= h.omega_xx(i, j) * z[j];
        v[i] = acc;
        v[n + i] = zdot[i] - h.omega_pp(i, i) * z[n + i];
    }
    return v;
}

std::vector<CMat> propagate_U(const std::function<CMat(double)>& a_of_t, const Vec& grid,
                              std::size_t reunitarize_every) {
    if (grid.size() < 2) throw validation_error("propagate_U: grid needs at least two points");
    const std::size_t d = a_of_t(grid.front()).rows();
    const double h = grid[1] - grid[0];

    std::vector<CMat> path;
    path.reserve(grid.size());
    CMat u = CMat::identity(d);
    path.push_back(u);

    const CMat eye = CMat::identity(d);
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const double t = grid[i];
        const CMat a1 = a_of_t(t);
        const CMat a2 = a_of_t(t + 0.5 * h);
        const CMat a4 = a_of_t(t + h);

        const CMat k1 = u * a1;
        const CMat k2 = (u + numkit::cplx(0.5 * h) * k1) * a2;
        const CMat k3 = (u + numkit::cplx(0.5 * h) * k2) * a2;
        const CMat k4 = (u + numkit::cplx(h) * k3) * a4;
        u += numkit::cplx(h / 6.0) * (k1 + numkit::cplx(2.0) * k2 + numkit::cplx(2.0) * k3 + k4);

        const double drift = (u.adjoint() * u - eye).frobenius();
        if (drift > 1e-8)
            throw numerical_error("propagate_U: unitarity drift " + std::to_string(drift) +
                                  " at t = " + std::to_string(grid[i + 1]) +
                                  "; refine the time grid");
        if ((i + 1) % reunitarize_every == 0) u = numkit::nearest_unitary(u);
        path.push_back(u);
    }
    return path;
}

EngineSample evaluate_engine(const RSchedule& schedule, double t) {
    EngineSample es;
    es.r = schedule.r(t);
    es.rdot = schedule.rdot(t);
    es.rddot = schedule.rddot(t);
    try {
        es.j = solve_J(es.r, es.rdot);
        es.a = compute_A(es.r, es.rdot, es.j);
        es.mtilde = solve_Mtilde(es.r, es.rdot, es.rddot, es.a);
    } catch (const numerical_error& e) {
        throw numerical_error(std::string(e.what()) + " (schedule at t = " + std::to_string(t) +
                              ")");
    }
    return es;
}

InvariantFrame build_gamma(const Mat& r, const Mat& rdot, const CMat& u, double mass1,
                           double mass2, const Vec& z) {
    const std::size_t d = r.rows();
    if (z.size() != 4 * d) throw validation_error("build_gamma: Z must have length 2Nd with N=2");

    const Mat j = solve_J(r, rdot);
    const CMat a = compute_A(r, rdot, j);

    const CMat r_c = CMat::from_parts(r, Mat(d, d));
    const CMat rdot_c = CMat::from_parts(rdot, Mat(d, d));
    const CMat p = u * r_c;
    const CMat pdot = u * (a * r_c + rdot_c);

    const double masses[2] = {mass1, mass2};
    // G = (m1 Ydot1, m2 Ydot2, -Y1, -Y2), d x 4d; Y_i = P/sqrt(m_i).
    CMat g(d, 4 * d);
    for (int ion = 0; ion < 2; ++ion) {
        const double rm = std::sqrt(masses[ion]);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t k = 0; k < d; ++k) {
                g(i, ion * d + k) = rm * pdot(i, k);
                g(i, 2 * d + ion * d + k) = -p(i, k) / rm;
            }
    }

    InvariantFrame frame;
    frame.u = u;
    frame.gamma = (g.adjoint() * g).real().symmetrized();
    frame.z = z;
    return frame;
}

std::vector<CMat> residual_Q(const std::vector<CMat>& y, const std::vector<CMat>& yddot,
                             const std::vector<Mat>& m_eff,
                             const std::map<std::pair<std::size_t, std::size_t>, Mat>& couplings,
                             const std::vector<double>& masses) {
    const std::size_t n_ions = y.size();
    if (yddot.size() != n_ions || m_eff.size() != n_ions || masses.size() != n_ions)
        throw validation_error("residual_Q: inconsistent input sizes");
    const std::size_t d = y.front().rows();

    std::vector<CMat> q;
    q.reserve(n_ions);
    for (std::size_t i = 0; i < n_ions; ++i) {
        const CMat m_c = CMat::from_parts(m_eff[i], Mat(d, d));
        CMat qi = numkit::cplx(masses[i]) * (y[i] * m_c + yddot[i]);
        for (std::size_t j = 0; j < n_ions; ++j) {
            if (j == i) continue;
            const auto key = std::minmax(i, j);
            const auto it = couplings.find({key.first, key.second});
            if (it == couplings.end()) continue;
            qi += y[j] * CMat::from_parts(it->second, Mat(d, d));
        }
        q.push_back(qi);
    }
    return q;
}

}  // namespace ionshuttle::invariant
