#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "ionshuttle/errors.hpp"
#include "ionshuttle/model.hpp"

using namespace ionshuttle;
using namespace ionshuttle::model;
namespace th = test_helpers;

namespace {

QuadraticHamiltonian single_ion(double mass, double omega2, std::size_t d = 1) {
    Vec diag(d, omega2);
    return assemble_hamiltonian({{Mat::diagonal(diag), Vec(d, 0.0)}}, {}, {{mass, 1.0}});
}

}  // namespace

TEST_CASE("symplectic form squares to minus one") {
    const Mat s = symplectic_form(4);
    CHECK(th::max_abs_diff(s * s, -1.0 * Mat::identity(8)) == 0.0);
    CHECK((s + s.transposed()).frobenius() == 0.0);
}

TEST_CASE("assemble_hamiltonian: single ion") {
    const double m = 2.0, w2 = 9.0;
    const auto h = single_ion(m, w2, 2);
    CHECK(h.omega_xx(0, 0) == doctest::Approx(m * w2));
    CHECK(h.omega_pp(0, 0) == doctest::Approx(1.0 / m));
    for (double v : h.v) CHECK(v == 0.0);
}

TEST_CASE("assemble_hamiltonian: symmetric two-ion block layout") {
    const Mat mcurv = Mat::diagonal({1.0, 4.0});
    const Mat d = th::random_symmetric(2);
    const double m = 3.0;
    const auto h = assemble_hamiltonian({{mcurv, {0.1, 0.2}}, {mcurv, {0.3, 0.4}}}, {{{0, 1}, d}},
                                        {{m, 1.0}, {m, 1.0}});
    CHECK(th::max_abs_diff(h.omega_xx.block(0, 0, 2, 2), m * mcurv) == 0.0);
    CHECK(th::max_abs_diff(h.omega_xx.block(2, 2, 2, 2), m * mcurv) == 0.0);
    CHECK(th::max_abs_diff(h.omega_xx.block(0, 2, 2, 2), d) == 0.0);
    CHECK(th::max_abs_diff(h.omega_xx.block(2, 0, 2, 2), d) == 0.0);
    CHECK(h.v[0] == doctest::Approx(-0.1));
    CHECK(h.v[3] == doctest::Approx(-0.4));
    CHECK(h.v[4] == 0.0);
}

TEST_CASE("assemble_hamiltonian: swapping ion labels permutes blocks") {
    const Mat m1 = th::random_spd(2);
    const Mat m2 = th::random_spd(2);
    const Mat d = th::random_symmetric(2);
    const Vec f1{0.5, -0.2}, f2{0.1, 0.9};
    const units::IonSpecies a{1.0, 1.0}, b{2.0, 1.0};

    const auto h12 = assemble_hamiltonian({{m1, f1}, {m2, f2}}, {{{0, 1}, d}}, {a, b});
    const auto h21 = assemble_hamiltonian({{m2, f2}, {m1, f1}}, {{{0, 1}, d}}, {b, a});

    // permutation that swaps the two ions' coordinate blocks
    Mat perm(4, 4);
    perm.set_block(0, 2, Mat::identity(2));
    perm.set_block(2, 0, Mat::identity(2));
    CHECK(th::max_abs_diff(perm * h12.omega_xx * perm.transposed(), h21.omega_xx) < 1e-14);
    CHECK(th::max_abs_diff(perm * h12.omega_pp * perm.transposed(), h21.omega_pp) < 1e-14);
}

TEST_CASE("assemble_hamiltonian rejects bad input") {
    const Mat good = Mat::identity(2);
    Mat skew(2, 2);
    skew(0, 1) = 1.0;
    CHECK_THROWS_AS(
        assemble_hamiltonian({{skew, {0.0, 0.0}}}, {}, {{1.0, 1.0}}),
        validation_error);
    CHECK_THROWS_AS(
        assemble_hamiltonian({{good, {0.0}}}, {}, {{1.0, 1.0}}),
        validation_error);
    CHECK_THROWS_AS(assemble_hamiltonian({{good, {0.0, 0.0}}, {good, {0.0, 0.0}}},
                                         {{{1, 0}, good}}, {{1.0, 1.0}, {1.0, 1.0}}),
                    validation_error);
}

TEST_CASE("ground_state: 1-D vacua") {
    const auto s1 = ground_state(single_ion(1.0, 1.0));
    CHECK(s1.sigma(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(s1.sigma(1, 1) == doctest::Approx(0.5).epsilon(1e-14));

    const auto s4 = ground_state(single_ion(1.0, 16.0));  // omega = 4
    CHECK(s4.sigma(0, 0) == doctest::Approx(1.0 / 8.0).epsilon(1e-14));
    CHECK(s4.sigma(1, 1) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(std::abs(s4.sigma(0, 1)) < 1e-15);
}

TEST_CASE("ground_state of two coupled 1-D ions matches the two-mode construction") {
    const double w2 = 4.0, delta = 0.8;
    const Mat curv = Mat::diagonal({w2});
    const Mat coupling = Mat::diagonal({delta});
    const auto h = assemble_hamiltonian({{curv, {0.0}}, {curv, {0.0}}}, {{{0, 1}, coupling}},
                                        {{1.0, 1.0}, {1.0, 1.0}});
    const auto s = ground_state(h);

    // independent construction from the +/- normal modes
    const double wp = std::sqrt(w2 + delta), wm = std::sqrt(w2 - delta);
    const double sxx_same = 0.25 * (1.0 / wp + 1.0 / wm);
    const double sxx_cross = 0.25 * (1.0 / wp - 1.0 / wm);
    const double spp_same = 0.25 * (wp + wm);
    const double spp_cross = 0.25 * (wp - wm);
    CHECK(s.sigma(0, 0) == doctest::Approx(sxx_same).epsilon(1e-12));
    CHECK(s.sigma(0, 1) == doctest::Approx(sxx_cross).epsilon(1e-12));
    CHECK(s.sigma(2, 2) == doctest::Approx(spp_same).epsilon(1e-12));
    CHECK(s.sigma(2, 3) == doctest::Approx(spp_cross).epsilon(1e-12));
}

TEST_CASE("ground_state is stationary and pure") {
    const Mat curv = th::random_spd(2, 1.0, 9.0);
    const Vec force{0.7, -1.1};
    const auto h = assemble_hamiltonian({{curv, force}}, {}, {{1.7, 1.0}});
    const auto s = ground_state(h);

    // S Omega Z + S V = 0
    const Mat sf = symplectic_form(h.nd());
    const Vec rhs = sf * (h.full_omega() * s.z);
    const Vec sv = sf * h.v;
    for (std::size_t k = 0; k < rhs.size(); ++k) CHECK(std::abs(rhs[k] + sv[k]) < 1e-12);

    CHECK(std::abs(s.purity_det() - 1.0) < 1e-10);
}

TEST_CASE("ground_state rejects unstable traps") {
    const Mat curv = Mat::diagonal({-1.0, 1.0});
    const auto h = assemble_hamiltonian({{curv, {0.0, 0.0}}}, {}, {{1.0, 1.0}});
    CHECK_THROWS_AS(ground_state(h), numerical_error);
}

TEST_CASE("fidelity: self, squeezed, displaced (quadrature oracles)") {
    const auto vac = ground_state(single_ion(1.0, 1.0));
    CHECK(fidelity(vac, vac) == doctest::Approx(1.0).epsilon(1e-14));

    // squeezed vacuum: Sigma_xx = s/2 -> F = 2 sqrt(s)/(s+1)
    const double sq = 2.7;
    GaussianState squeezed = vac;
    squeezed.sigma(0, 0) = 0.5 * sq;
    squeezed.sigma(1, 1) = 0.5 / sq;
    const double f_sq = fidelity(vac, squeezed);
    CHECK(f_sq == doctest::Approx(2.0 * std::sqrt(sq) / (sq + 1.0)).epsilon(1e-12));
    CHECK(f_sq == doctest::Approx(th::overlap_by_quadrature(vac, squeezed)).epsilon(1e-8));

    // displaced vacuum: F = exp(-dx^2/2)
    const double dx = 0.9;
    GaussianState displaced = vac;
    displaced.z[0] = dx;
    const double f_disp = fidelity(vac, displaced);
    CHECK(f_disp == doctest::Approx(std::exp(-0.5 * dx * dx)).epsilon(1e-12));
    CHECK(f_disp == doctest::Approx(th::overlap_by_quadrature(vac, displaced)).epsilon(1e-8));

    CHECK(fidelity(squeezed, vac) == doctest::Approx(f_sq).epsilon(1e-14));  // symmetric
    CHECK(f_sq >= 0.0);
    CHECK(f_sq <= 1.0);
}

TEST_CASE("fidelity equals one only for identical states") {
    const auto vac = ground_state(single_ion(1.0, 1.0));
    GaussianState other = vac;
    other.z[0] += 1e-3;
    CHECK(fidelity(vac, other) < 1.0 - 1e-10);
}

TEST_CASE("fidelity requires pure states") {
    auto vac = ground_state(single_ion(1.0, 1.0));
    GaussianState thermal = vac;
    thermal.sigma(0, 0) = 1.0;  // det(2 Sigma) = 2
    CHECK_THROWS_AS(fidelity(vac, thermal), validation_error);
}

TEST_CASE("gauss_hermite integrates Gaussian moments") {
    const auto gh = gauss_hermite(32);
    double s0 = 0.0, s2 = 0.0;
    for (int i = 0; i < 32; ++i) {
        s0 += gh.weights[i];
        s2 += gh.weights[i] * gh.nodes[i] * gh.nodes[i];
    }
    CHECK(s0 == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-13));
    CHECK(s2 == doctest::Approx(0.5 * std::sqrt(M_PI)).epsilon(1e-13));
}

TEST_CASE("fock_populations: vacuum projects onto vacuum") {
    const auto h = single_ion(1.0, 1.0, 2);
    const auto s = ground_state(h);
    const auto fock = fock_populations(s, h, 3, 24);
    CHECK(fock.populations.at({0, 0}) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(fock.total == doctest::Approx(1.0).epsilon(1e-8));
    CHECK_FALSE(fock.cutoff_warning);
}

TEST_CASE("fock_populations: squeezed vacuum against the analytic distribution") {
    const double r = 0.55;
    const double s = std::exp(2.0 * r);
    const auto h = single_ion(1.0, 1.0);
    auto state = ground_state(h);
    state.sigma(0, 0) = 0.5 * s;
    state.sigma(1, 1) = 0.5 / s;

    const auto fock = fock_populations(state, h, 4, 48);
    const double p0 = 1.0 / std::cosh(r);
    const double p2 = 0.5 * std::tanh(r) * std::tanh(r) / std::cosh(r);
    const double p4 = 0.375 * std::pow(std::tanh(r), 4.0) / std::cosh(r);
    CHECK(fock.populations.at({0}) == doctest::Approx(p0).epsilon(1e-8));
    CHECK(fock.populations.at({1}) < 1e-10);
    CHECK(fock.populations.at({2}) == doctest::Approx(p2).epsilon(1e-8));
    CHECK(fock.populations.at({3}) < 1e-10);
    CHECK(fock.populations.at({4}) == doctest::Approx(p4).epsilon(1e-7));
}

TEST_CASE("fock_populations: strong squeezing trips the cutoff warning") {
    const double r = 1.5;
    const double s = std::exp(2.0 * r);
    const auto h = single_ion(1.0, 1.0);
    auto state = ground_state(h);
    state.sigma(0, 0) = 0.5 * s;
    state.sigma(1, 1) = 0.5 / s;
    const auto fock = fock_populations(state, h, 4, 48);
    CHECK(fock.cutoff_warning);
    CHECK(fock.deficit > 0.01);
}

TEST_CASE("fock_populations: parity of undisplaced Gaussian states") {
    const auto h = single_ion(1.0, 1.0, 2);
    auto state = ground_state(h);
    state.sigma(0, 0) *= 1.8;  // squeeze x
    state.sigma(2, 2) /= 1.8;
    const auto fock = fock_populations(state, h, 4, 32);
    for (const auto& [tuple, p] : fock.populations) {
        int total = 0;
        for (int n : tuple) total += n;
        if (total % 2 == 1) CHECK(p < 1e-8);
        CHECK(p >= 0.0);
    }
}

TEST_CASE("fock_populations preconditions") {
    const auto h = single_ion(1.0, 1.0);
    auto state = ground_state(h);
    state.sigma(0, 0) = 1.0;  // impure
    CHECK_THROWS_AS(fock_populations(state, h, 4), validation_error);

    const auto pure = ground_state(h);
    CHECK_THROWS_AS(fock_populations(pure, h, -1), validation_error);
    CHECK_THROWS_AS(fock_populations(pure, h, 4, 4), validation_error);
}
