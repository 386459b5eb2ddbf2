#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "ionshuttle/coulomb.hpp"
#include "ionshuttle/errors.hpp"
#include "ionshuttle/invariant.hpp"
#include "ionshuttle/model.hpp"

using namespace ionshuttle;
using namespace ionshuttle::invariant;
namespace th = test_helpers;
using numkit::cplx;

namespace {

// Independent Ermakov integration: rho'' = rho^-3 - Mtilde(t) rho.
numkit::Vec ermakov_path(const RSchedule& sched, double rho0, std::size_t nsteps) {
    const double big_t = sched.duration;
    numkit::Vec grid(2 * nsteps + 1);
    for (std::size_t i = 0; i < grid.size(); ++i)
        grid[i] = big_t * static_cast<double>(i) / (2.0 * nsteps);
    const numkit::OdeFun f = [&sched](double t, std::span<const double> y,
                                      std::span<double> dy) {
        const EngineSample es = evaluate_engine(sched, t);
        dy[0] = y[1];
        dy[1] = 1.0 / (y[0] * y[0] * y[0]) - es.mtilde(0, 0) * y[0];
    };
    const auto path = numkit::rk4_path(f, {rho0, 0.0}, grid);
    numkit::Vec rho(nsteps + 1);
    for (std::size_t i = 0; i <= nsteps; ++i) rho[i] = path[2 * i][0];
    return rho;
}

}  // namespace

TEST_CASE("quintic blend boundary values") {
    CHECK(quintic_blend(0.0).p == 0.0);
    CHECK(quintic_blend(1.0).p == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(quintic_blend(0.5).p == doctest::Approx(0.5).epsilon(1e-15));
    for (double tau : {0.0, 1.0}) {
        CHECK(quintic_blend(tau).dp == 0.0);
        CHECK(quintic_blend(tau).ddp == 0.0);
    }
}

TEST_CASE("boundary_R scalar and round-trip cases") {
    const double w2 = 7.3;
    const Mat r = boundary_R(Mat::diagonal({w2, w2}), Mat(2, 2), 1.0, 1.0);
    CHECK(r(0, 0) == doctest::Approx(std::pow(w2, -0.25)).epsilon(1e-13));

    // random inputs: (boundary_R)^-4 - D/m recovers M
    const Mat m_b = th::random_spd(3, 2.0, 9.0);
    const Mat d_b = 0.3 * th::random_symmetric(3);
    const double mass = 1.7;
    const Mat rb = boundary_R(m_b, d_b, mass, mass);
    const Mat back = numkit::spd_power(rb, -4.0) - (1.0 / mass) * d_b;
    CHECK(th::max_abs_diff(back, m_b) < 1e-10);

    CHECK_THROWS_AS(boundary_R(Mat::diagonal({-1.0, 1.0}), Mat(2, 2), 1.0, 1.0), numerical_error);
}

TEST_CASE("boundary_R at the separated endpoint is diag(wr^-1/2, wt^-1/2)") {
    // final trap of the separation protocol: D negligible at 200 um
    const double wr2 = 100.0, wt2 = 1.0;
    const Mat m_t = Mat::diagonal({wr2, wt2});
    const Mat r = boundary_R(m_t, Mat(2, 2), 1.0, 1.0);
    CHECK(r(0, 0) == doctest::Approx(std::pow(wr2, -0.25)).epsilon(1e-12));
    CHECK(r(1, 1) == doctest::Approx(std::pow(wt2, -0.25)).epsilon(1e-12));
}

TEST_CASE("interpolate_R endpoints, midpoint, and derivative conditions") {
    const Mat r0 = th::random_spd(2, 1.0, 2.0);
    const Mat rT = th::random_spd(2, 1.0, 2.0);
    const double big_t = 2.5;
    const RSchedule s = interpolate_R(r0, rT, big_t);

    CHECK(th::max_abs_diff(s.r(0.0), r0) == 0.0);
    CHECK(th::max_abs_diff(s.r(big_t), rT) < 1e-14);
    CHECK(th::max_abs_diff(s.r(0.5 * big_t), 0.5 * (r0 + rT)) < 1e-14);
    for (double t : {0.0, big_t}) {
        CHECK(s.rdot(t).frobenius() == 0.0);
        CHECK(s.rddot(t).frobenius() == 0.0);
    }
}

TEST_CASE("solve_J vanishing cases and residual") {
    const Mat r = th::random_spd(3);

    CHECK(solve_J(r, Mat(3, 3)).frobenius() < 1e-14);

    // commuting pair: Rdot is a polynomial in R
    const Mat rdot_comm = 0.2 * (r * r) + 0.7 * r;
    CHECK(solve_J(r, rdot_comm).frobenius() < 1e-11);

    const Mat rdot = th::random_symmetric(3, 0.5);
    const Mat j = solve_J(r, rdot);
    CHECK((j + j.transposed()).frobenius() < 1e-10);
    const Mat rinv = numkit::inverse(r);
    const Mat rinv2 = rinv * rinv;
    const Mat lhs = j * rinv2 + rinv2 * j;
    const Mat rhs = rdot * rinv - rinv * rdot + r * rdot * rinv2 - rinv2 * rdot * r;
    CHECK((lhs - rhs).frobenius() <= 1e-12 * std::max(1.0, rhs.frobenius()));
}

TEST_CASE("compute_A reduces to i R^-2 at rest and is anti-Hermitian") {
    const Mat r = th::random_spd(3);
    const CMat a_rest = compute_A(r, Mat(3, 3), Mat(3, 3));
    const Mat rinv2 = numkit::inverse(r * r);
    CHECK(a_rest.real().frobenius() < 1e-14);
    CHECK(th::max_abs_diff(a_rest.imag(), rinv2) < 1e-12);

    // scalar case: A = i / rho^2
    const Mat rho = Mat::diagonal({1.7});
    const CMat a_scalar = compute_A(rho, Mat(1, 1), Mat(1, 1));
    CHECK(a_scalar(0, 0).imag() == doctest::Approx(1.0 / (1.7 * 1.7)).epsilon(1e-14));

    const Mat rdot = th::random_symmetric(3, 0.4);
    const CMat a = compute_A(r, rdot, solve_J(r, rdot));
    CHECK((a + a.adjoint()).frobenius() < 1e-12);
}

TEST_CASE("solve_Mtilde: static schedule gives R^-4") {
    const Mat r = th::random_spd(3, 0.7, 1.8);
    const CMat a = compute_A(r, Mat(3, 3), Mat(3, 3));
    const Mat mt = solve_Mtilde(r, Mat(3, 3), Mat(3, 3), a);
    CHECK(th::max_abs_diff(mt, numkit::spd_power(r, -4.0)) < 1e-10);
}

TEST_CASE("solve_Mtilde: scalar case is the Ermakov relation") {
    const double rho = 1.3, rhodot = 0.21, rhoddot = -0.4;
    const Mat r = Mat::diagonal({rho});
    const Mat rd = Mat::diagonal({rhodot});
    const Mat rdd = Mat::diagonal({rhoddot});
    const CMat a = compute_A(r, rd, solve_J(r, rd));
    const Mat mt = solve_Mtilde(r, rd, rdd, a);
    CHECK(mt(0, 0) ==
          doctest::Approx(1.0 / std::pow(rho, 4.0) - rhoddot / rho).epsilon(1e-13));
}

TEST_CASE("scalar engine reproduces the Ermakov trajectory") {
    // designed rho(t); the engine's Mtilde must drive the Ermakov equation
    // along exactly this path
    const Mat r0 = Mat::diagonal({1.0});
    const Mat rT = Mat::diagonal({1.9});
    const double big_t = 4.0;
    const RSchedule sched = interpolate_R(r0, rT, big_t);

    const std::size_t n = 2000;
    const numkit::Vec rho = ermakov_path(sched, 1.0, n);
    double err = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        const double t = big_t * static_cast<double>(i) / n;
        err = std::max(err, std::abs(rho[i] - sched.r(t)(0, 0)));
    }
    CHECK(err < 1e-10);
}

TEST_CASE("trap_from_mtilde subtracts the coupling") {
    const Mat mt = th::random_symmetric(2);
    CHECK(th::max_abs_diff(trap_from_mtilde(mt, Mat(2, 2), 1.0, 1.0), mt) == 0.0);
    const Mat d = th::random_symmetric(2);
    const Mat m = trap_from_mtilde(mt, d, 4.0, 9.0);  // sqrt(m1 m2) = 6
    CHECK(th::max_abs_diff(m, mt - (1.0 / 6.0) * d) < 1e-15);
}

TEST_CASE("coupling magnitude at 200 um is negligible against the trap") {
    // kappa and separation of the reference protocol, oscillator units
    const double kappa = 4.5279e7;
    const double sep = 2.6e4;
    const Mat d = coulomb::interaction_matrix({sep, 0.0}, kappa);
    CHECK(d.frobenius() < 1e-5);  // against m omega_t^2 = 1
}

TEST_CASE("linear_drive: stationary and origin cases") {
    // single ion at the origin: V = 0
    const auto h0 = model::assemble_hamiltonian({{Mat::diagonal({2.0, 3.0}), {0.0, 0.0}}}, {},
                                                {{1.0, 1.0}});
    const numkit::Vec v0 = linear_drive(numkit::Vec(4, 0.0), numkit::Vec(4, 0.0), h0);
    CHECK(numkit::norm(v0) == 0.0);

    // static state: V = -Omega Z; re-deriving the force balances the trap
    numkit::Vec z{0.4, -0.3, 0.0, 0.0};
    const numkit::Vec v = linear_drive(z, numkit::Vec(4, 0.0), h0);
    CHECK(v[0] == doctest::Approx(-2.0 * 0.4).epsilon(1e-14));
    CHECK(v[1] == doctest::Approx(3.0 * 0.3).epsilon(1e-14));
    CHECK(v[2] == 0.0);
    CHECK(v[3] == 0.0);
}

TEST_CASE("linear_drive round trip: re-integrating reproduces the trajectory") {
    // designed 1-D trajectory for a single ion with a time-varying trap
    const double big_t = 3.0;
    const auto curv = [](double t) { return 1.0 + 0.5 * std::sin(t); };
    const auto x_des = [big_t](double t) { return quintic_blend(t / big_t).p * 2.0; };
    const auto v_des = [big_t](double t) { return quintic_blend(t / big_t).dp * 2.0 / big_t; };
    const auto a_des = [big_t](double t) {
        return quintic_blend(t / big_t).ddp * 2.0 / (big_t * big_t);
    };

    const auto v_of_t = [&](double t) {
        const auto h = model::assemble_hamiltonian({{Mat::diagonal({curv(t)}), {0.0}}}, {},
                                                   {{1.0, 1.0}});
        return linear_drive({x_des(t), v_des(t)}, {v_des(t), a_des(t)}, h);
    };

    const numkit::OdeFun f = [&](double t, std::span<const double> y, std::span<double> dy) {
        const numkit::Vec v = v_of_t(t);
        dy[0] = y[1] + v[1];
        dy[1] = -curv(t) * y[0] - v[0];
    };
    const std::size_t n = 3000;
    numkit::Vec grid(n + 1);
    for (std::size_t i = 0; i <= n; ++i) grid[i] = big_t * static_cast<double>(i) / n;
    const auto path = numkit::rk4_path(f, {0.0, 0.0}, grid);
    double err = 0.0;
    for (std::size_t i = 0; i <= n; ++i)
        err = std::max(err, std::abs(path[i][0] - x_des(grid[i])));
    CHECK(err < 1e-8);
}

TEST_CASE("propagate_U: constant generator matches the exponential") {
    const Mat k = th::random_matrix(2, 0.4).antisymmetrized();
    const Mat s = th::random_spd(2, 0.5, 2.0);
    const CMat a = CMat::from_parts(k, s);

    const std::size_t n = 2000;
    numkit::Vec grid(n + 1);
    const double big_t = 1.5;
    for (std::size_t i = 0; i <= n; ++i) grid[i] = big_t * static_cast<double>(i) / n;
    const auto path = propagate_U([&a](double) { return a; }, grid);

    CMat at = a;
    at *= cplx(big_t, 0.0);
    const CMat expected = th::matrix_exp(at);
    CHECK((path.back() - expected).frobenius() < 1e-9);

    // |det U| = 1 along the path
    for (std::size_t i = 0; i < path.size(); i += 200)
        CHECK(std::abs(std::abs(numkit::determinant(path[i])) - 1.0) < 1e-10);
}

TEST_CASE("propagate_U: scalar phase") {
    const double w = 3.0;
    CMat a(1, 1);
    a(0, 0) = cplx(0.0, w);
    numkit::Vec grid(1001);
    for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = 1e-3 * static_cast<double>(i);
    const auto path = propagate_U([&a](double) { return a; }, grid);
    CHECK(path.back()(0, 0).real() == doctest::Approx(std::cos(w)).epsilon(1e-10));
    CHECK(path.back()(0, 0).imag() == doctest::Approx(std::sin(w)).epsilon(1e-10));
}

TEST_CASE("propagate_U flags drift on a crude grid") {
    CMat a(1, 1);
    a(0, 0) = cplx(0.0, 10.0);
    CHECK_THROWS_AS(propagate_U([&a](double) { return a; }, {0.0, 0.5, 1.0}), numerical_error);
}

TEST_CASE("build_gamma: symmetry, rank deficiency, boundary commutation") {
    // boundary-like frame: Rdot = 0, U = 1, R = K0^(-1/4)
    const double wt2 = 1.0, wr2 = 100.0;
    const Mat k0 = Mat::diagonal({wt2, wr2});
    const Mat r0 = numkit::spd_power(k0, -0.25);
    const double mass = 1.0;
    const numkit::Vec z(8, 0.0);
    const InvariantFrame frame = build_gamma(r0, Mat(2, 2), CMat::identity(2), mass, mass, z);

    CHECK(frame.gamma.asymmetry() < 1e-12);

    const auto es = numkit::eigh(frame.gamma);
    const double lmax = es.values.back();
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(es.values[i]) < 1e-10 * lmax);  // rank <= 2d
    for (double v : es.values) CHECK(v > -1e-10 * lmax);  // PSD

    // [Omega S Gamma - Gamma S Omega] = 0 at the boundary
    const Mat d0(2, 2);
    const auto h = model::assemble_hamiltonian({{k0, {0.0, 0.0}}, {k0, {0.0, 0.0}}},
                                               {{{0, 1}, d0}}, {{mass, 1.0}, {mass, 1.0}});
    const Mat omega = h.full_omega();
    const Mat s = model::symplectic_form(4);
    const Mat comm = omega * s * frame.gamma - frame.gamma * s * omega;
    CHECK(comm.frobenius() < 1e-8);
}

TEST_CASE("residual_Q: stationary oscillator solution gives zero") {
    // Y(t) = e^{i w t} / sqrt(2 w): Yddot = -w^2 Y, M = w^2, no coupling
    const double w = 2.5, t = 0.37;
    CMat y(1, 1), yddot(1, 1);
    y(0, 0) = std::exp(cplx(0.0, w * t)) / std::sqrt(2.0 * w);
    yddot(0, 0) = -w * w * y(0, 0);
    const auto q = residual_Q({y}, {yddot}, {Mat::diagonal({w * w})}, {}, {1.0});
    CHECK(q.front().frobenius() < 1e-14);
}

TEST_CASE("residual_Q scales linearly with a curvature perturbation") {
    const double w = 2.5;
    CMat y(1, 1), yddot(1, 1);
    y(0, 0) = 1.0 / std::sqrt(2.0 * w);
    yddot(0, 0) = -w * w * y(0, 0);
    const auto q1 =
        residual_Q({y}, {yddot}, {Mat::diagonal({w * w * 1.01})}, {}, {1.0});
    const auto q2 =
        residual_Q({y}, {yddot}, {Mat::diagonal({w * w * 1.02})}, {}, {1.0});
    CHECK(q1.front().frobenius() > 0.0);
    CHECK(q2.front().frobenius() ==
          doctest::Approx(2.0 * q1.front().frobenius()).epsilon(1e-10));
}

TEST_CASE("A stays anti-Hermitian along an interpolated schedule") {
    const Mat r0 = th::random_spd(2, 0.6, 1.2);
    const Mat rT = th::random_spd(2, 0.6, 1.2);
    const RSchedule sched = interpolate_R(r0, rT, 2.0);
    for (int i = 0; i <= 40; ++i) {
        const double t = 2.0 * i / 40.0;
        const EngineSample es = evaluate_engine(sched, t);
        CHECK((es.a + es.a.adjoint()).frobenius() < 1e-10);
        CHECK(es.mtilde.asymmetry() < 1e-10);
        CHECK((es.j + es.j.transposed()).frobenius() < 1e-10);
    }
}
