#include "ionshuttle/dynamics.hpp"

#include <cmath>
#include <string>

#include "ionshuttle/errors.hpp"

namespace ionshuttle::dynamics {

model::QuadraticHamiltonian HamiltonianPath::at_sample(std::size_t i) const {
    model::QuadraticHamiltonian h;
    h.omega_xx = omega_xx.at(2 * i);
    h.omega_pp = omega_pp;
    h.v = v.at(2 * i);
    return h;
}

namespace {

struct Derivative {
    Vec zdot;
    Mat sigmadot;
};

// Zdot = S(V + Omega Z); Sigmadot = B Sigma + (B Sigma)^T with B = S Omega.
Derivative flow(const Mat& omega_xx, const Mat& omega_pp, const Vec& v, const Vec& z,
                const Mat& sigma) {
    const std::size_t n = omega_xx.rows();
    Derivative d{Vec(2 * n), Mat(2 * n, 2 * n)};
    for (std::size_t i = 0; i < n; ++i) {
        d.zdot[i] = v[n + i] + omega_pp(i, i) * z[n + i];
        double acc = -v[i];
        for (std::size_t j = 0; j < n; ++j) acc -= omega_xx(i, j) * z[j];
        d.zdot[n + i] = acc;
    }
    // B = [[0, Omega_pp], [-Omega_xx, 0]]
    Mat bs(2 * n, 2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        const double invm = omega_pp(i, i);
        for (std::size_t j = 0; j < 2 * n; ++j) bs(i, j) = invm * sigma(n + i, j);
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < 2 * n; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) acc -= omega_xx(i, k) * sigma(k, j);
            bs(n + i, j) = acc;
        }
    d.sigmadot = bs + bs.transposed();
    return d;
}

}  // namespace

SimulationTrace propagate(const HamiltonianPath& h, const model::GaussianState& s0) {
    const std::size_t nsteps = h.steps();
    if (h.omega_xx.size() != 2 * nsteps + 1 || h.v.size() != 2 * nsteps + 1)
        throw validation_error("propagate: Hamiltonian path must be sampled on the half grid");
    const std::size_t n = h.omega_pp.rows();
    if (s0.z.size() != 2 * n || s0.sigma.rows() != 2 * n)
        throw validation_error("propagate: state dimension mismatch");

    SimulationTrace trace;
    trace.times = h.times;
    trace.states.reserve(nsteps + 1);
    trace.purity.resize(nsteps + 1);

    model::GaussianState s = s0;
    s.sigma = s.sigma.symmetrized();
    trace.states.push_back(s);
    trace.purity[0] = s.purity_det();

    const double dt = h.times[1] - h.times[0];
    for (std::size_t i = 0; i < nsteps; ++i) {
        const Mat& w1 = h.omega_xx[2 * i];
        const Mat& w2 = h.omega_xx[2 * i + 1];
        const Mat& w4 = h.omega_xx[2 * i + 2];
        const Vec& v1 = h.v[2 * i];
        const Vec& v2 = h.v[2 * i + 1];
        const Vec& v4 = h.v[2 * i + 2];

        const Derivative k1 = flow(w1, h.omega_pp, v1, s.z, s.sigma);
        Vec z_tmp(2 * n);
        for (std::size_t k = 0; k < 2 * n; ++k) z_tmp[k] = s.z[k] + 0.5 * dt * k1.zdot[k];
        Mat sig_tmp = s.sigma + 0.5 * dt * k1.sigmadot;
        const Derivative k2 = flow(w2, h.omega_pp, v2, z_tmp, sig_tmp);

        for (std::size_t k = 0; k < 2 * n; ++k) z_tmp[k] = s.z[k] + 0.5 * dt * k2.zdot[k];
        sig_tmp = s.sigma + 0.5 * dt * k2.sigmadot;
        const Derivative k3 = flow(w2, h.omega_pp, v2, z_tmp, sig_tmp);

        for (std::size_t k = 0; k < 2 * n; ++k) z_tmp[k] = s.z[k] + dt * k3.zdot[k];
        sig_tmp = s.sigma + dt * k3.sigmadot;
        const Derivative k4 = flow(w4, h.omega_pp, v4, z_tmp, sig_tmp);

        for (std::size_t k = 0; k < 2 * n; ++k)
            s.z[k] += dt / 6.0 * (k1.zdot[k] + 2.0 * k2.zdot[k] + 2.0 * k3.zdot[k] + k4.zdot[k]);
        s.sigma += dt / 6.0 * (k1.sigmadot + 2.0 * k2.sigmadot + 2.0 * k3.sigmadot + k4.sigmadot);
        s.sigma = s.sigma.symmetrized();

        const double purity = s.purity_det();
        if (std::abs(purity - 1.0) > 1e-4)
            throw numerical_error("propagate: purity drift " + std::to_string(purity - 1.0) +
                                  " at t = " + std::to_string(h.times[i + 1]) +
                                  "; refine the time grid");
        trace.states.push_back(s);
        trace.purity[i + 1] = purity;
    }
    return trace;
}

Vec invariant_residual(const std::vector<Mat>& gammas, const HamiltonianPath& h) {
    const std::size_t count = gammas.size();
    if (count != h.steps() + 1)
        throw validation_error("invariant_residual: frame count must match the grid");
    Vec residual(count, 0.0);
    if (count < 5) return residual;
    const double dt = h.times[1] - h.times[0];
    const Mat s = model::symplectic_form(h.omega_pp.rows());

    for (std::size_t i = 2; i + 2 < count; ++i) {
        // (-G[i+2] + 8 G[i+1] - 8 G[i-1] + G[i-2]) / (12 dt)
        const Mat gdot = (1.0 / (12.0 * dt)) * (-1.0 * gammas[i + 2] + 8.0 * gammas[i + 1] -
                                                8.0 * gammas[i - 1] + gammas[i - 2]);
        const model::QuadraticHamiltonian hi = h.at_sample(i);
        const Mat omega = hi.full_omega();
        const Mat rhs = omega * s * gammas[i] - gammas[i] * s * omega;
        const double scale = std::max(gammas[i].frobenius(), 1e-300);
        residual[i] = (gdot - rhs).frobenius() / scale;
    }
    return residual;
}

double invariant_expectation(const model::GaussianState& state,
                             const invariant::InvariantFrame& frame) {
    if (state.z.size() != frame.z.size() || state.sigma.rows() != frame.gamma.rows())
        throw validation_error("invariant_expectation: dimension mismatch");
    const Mat prod = frame.gamma * state.sigma;
    Vec delta(state.z.size());
    for (std::size_t k = 0; k < delta.size(); ++k) delta[k] = state.z[k] - frame.z[k];
    return 0.5 * prod.trace() + 0.5 * numkit::quad_form(frame.gamma, delta);
}

}  // namespace ionshuttle::dynamics
