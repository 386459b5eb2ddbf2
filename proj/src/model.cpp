#include "ionshuttle/model.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>

#include "ionshuttle/errors.hpp"

namespace ionshuttle::model {

using numkit::cplx;

Mat symplectic_form(std::size_t nd) {
    Mat s(2 * nd, 2 * nd);
    for (std::size_t k = 0; k < nd; ++k) {
        s(k, nd + k) = 1.0;
        s(nd + k, k) = -1.0;
    }
    return s;
}

Mat QuadraticHamiltonian::full_omega() const {
    const std::size_t n = nd();
    Mat full(2 * n, 2 * n);
    full.set_block(0, 0, omega_xx);
    full.set_block(n, n, omega_pp);
    return full;
}

Vec QuadraticHamiltonian::masses() const {
    const std::size_t n = nd();
    Vec m(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double inv = omega_pp(k, k);
        if (!(inv > 0.0)) throw validation_error("QuadraticHamiltonian: omega_pp not positive");
        m[k] = 1.0 / inv;
    }
    return m;
}

double GaussianState::purity_det() const { return numkit::determinant(2.0 * sigma); }

bool GaussianState::is_pure(double tol) const { return std::abs(purity_det() - 1.0) <= tol; }

QuadraticHamiltonian assemble_hamiltonian(
    const std::vector<TrapTerm>& traps,
    const std::map<std::pair<std::size_t, std::size_t>, Mat>& couplings,
    const std::vector<units::IonSpecies>& ions) {
    const std::size_t n_ions = traps.size();
    if (n_ions == 0 || ions.size() != n_ions)
        throw validation_error("assemble_hamiltonian: need one trap per ion");
    const std::size_t d = traps.front().curvature.rows();

    QuadraticHamiltonian h;
    h.omega_xx = Mat(n_ions * d, n_ions * d);
    h.omega_pp = Mat(n_ions * d, n_ions * d);
    h.v = Vec(2 * n_ions * d, 0.0);

    for (std::size_t i = 0; i < n_ions; ++i) {
        const TrapTerm& trap = traps[i];
        if (trap.curvature.rows() != d || trap.curvature.cols() != d || trap.force.size() != d)
            throw validation_error("assemble_hamiltonian: trap dimension mismatch");
        if (!trap.curvature.is_symmetric(1e-12))
            throw validation_error("assemble_hamiltonian: trap curvature not symmetric");
        if (!(ions[i].mass > 0.0)) throw validation_error("assemble_hamiltonian: mass must be positive");

        h.omega_xx.set_block(i * d, i * d, ions[i].mass * trap.curvature);
        for (std::size_t k = 0; k < d; ++k) {
            h.omega_pp(i * d + k, i * d + k) = 1.0 / ions[i].mass;
            h.v[i * d + k] = -trap.force[k];
        }
    }

    for (const auto& [key, coupling] : couplings) {
        const auto [i, j] = key;
        if (i >= j || j >= n_ions)
            throw validation_error("assemble_hamiltonian: coupling indices must satisfy i < j < N");
        if (coupling.rows() != d || coupling.cols() != d)
            throw validation_error("assemble_hamiltonian: coupling dimension mismatch");
        if (!coupling.is_symmetric(1e-12))
            throw validation_error("assemble_hamiltonian: coupling matrix not symmetric");
        h.omega_xx.set_block(i * d, j * d, coupling);
        h.omega_xx.set_block(j * d, i * d, coupling);
    }
    return h;
}

namespace {

struct MassWeights {
    Vec sqrt_m;      // per coordinate
    Vec inv_sqrt_m;  // per coordinate
};

MassWeights mass_weights(const Vec& masses) {
    MassWeights w{Vec(masses.size()), Vec(masses.size())};
    for (std::size_t k = 0; k < masses.size(); ++k) {
        w.sqrt_m[k] = std::sqrt(masses[k]);
        w.inv_sqrt_m[k] = 1.0 / w.sqrt_m[k];
    }
    return w;
}

// K = m^{-1/2} Omega_xx m^{-1/2}, diagonalised; throws on unstable traps.
numkit::EigenSym stiffness_modes(const QuadraticHamiltonian& h, const MassWeights& w) {
    const std::size_t n = h.nd();
    Mat k(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            k(i, j) = w.inv_sqrt_m[i] * h.omega_xx(i, j) * w.inv_sqrt_m[j];
    numkit::EigenSym es = numkit::eigh(k);
    if (es.values.front() <= 0.0)
        throw numerical_error("ground_state: trap not stable (omega_xx not positive definite)");
    return es;
}

}  // namespace

GaussianState ground_state(const QuadraticHamiltonian& h) {
    const std::size_t n = h.nd();
    const Vec masses = h.masses();
    const MassWeights w = mass_weights(masses);
    const numkit::EigenSym modes = stiffness_modes(h, w);

    GaussianState s;
    s.z = Vec(2 * n, 0.0);
    Vec vx(n);
    for (std::size_t k = 0; k < n; ++k) vx[k] = -h.v[k];
    const Vec zx = numkit::solve(h.omega_xx, vx);
    for (std::size_t k = 0; k < n; ++k) s.z[k] = zx[k];

    s.sigma = Mat(2 * n, 2 * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double sxx = 0.0, spp = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                const double wk = std::sqrt(modes.values[k]);
                const double qq = modes.vectors(i, k) * modes.vectors(j, k);
                sxx += qq / (2.0 * wk);
                spp += qq * wk / 2.0;
            }
            s.sigma(i, j) = w.inv_sqrt_m[i] * sxx * w.inv_sqrt_m[j];
            s.sigma(n + i, n + j) = w.sqrt_m[i] * spp * w.sqrt_m[j];
        }
    return s;
}

double fidelity(const GaussianState& a, const GaussianState& b) {
    if (a.z.size() != b.z.size()) throw validation_error("fidelity: dimension mismatch");
    if (!a.is_pure() || !b.is_pure())
        throw validation_error("fidelity: inputs must be pure states (det 2 Sigma = 1)");
    const Mat sum = a.sigma + b.sigma;
    Vec delta(a.z.size());
    for (std::size_t k = 0; k < delta.size(); ++k) delta[k] = a.z[k] - b.z[k];
    const Vec y = numkit::solve(sum, delta);
    const double quad = numkit::dot(delta, y);
    const double det = numkit::determinant(sum);
    if (det <= 0.0) throw numerical_error("fidelity: covariance sum not positive definite");
    const double f = std::exp(-0.5 * quad) / std::sqrt(det);
    return std::clamp(f, 0.0, 1.0);
}

NormalModes normal_modes(const QuadraticHamiltonian& h) {
    const std::size_t n = h.nd();
    const Vec masses = h.masses();
    const MassWeights w = mass_weights(masses);
    numkit::EigenSym es = stiffness_modes(h, w);

    // Label modes by their dominant coordinate so Fock tuples read in
    // coordinate order (x1, y1, x2, y2, ...) whenever the reference
    // decouples; left in eigen-order otherwise.
    std::vector<std::size_t> mode_order(n);
    std::iota(mode_order.begin(), mode_order.end(), 0);
    std::vector<int> slot_of_mode(n, -1);
    std::vector<bool> slot_taken(n, false);
    std::vector<std::size_t> by_strength(n);
    std::iota(by_strength.begin(), by_strength.end(), 0);
    std::stable_sort(by_strength.begin(), by_strength.end(), [&](std::size_t a, std::size_t b) {
        double ma = 0.0, mb = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            ma = std::max(ma, std::abs(es.vectors(i, a)));
            mb = std::max(mb, std::abs(es.vectors(i, b)));
        }
        return ma > mb;
    });
    for (std::size_t m : by_strength) {
        std::size_t best = 0;
        double best_val = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (slot_taken[i]) continue;
            const double v = std::abs(es.vectors(i, m));
            if (v > best_val) {
                best_val = v;
                best = i;
            }
        }
        slot_taken[best] = true;
        slot_of_mode[m] = static_cast<int>(best);
    }

    NormalModes nm;
    nm.frequencies = Vec(n);
    nm.mode_matrix = Mat(n, n);
    nm.masses = masses;
    for (std::size_t m = 0; m < n; ++m) {
        const std::size_t slot = static_cast<std::size_t>(slot_of_mode[m]);
        nm.frequencies[slot] = std::sqrt(es.values[m]);
        const double sign = es.vectors(static_cast<std::size_t>(slot), m) >= 0.0 ? 1.0 : -1.0;
        for (std::size_t i = 0; i < n; ++i) nm.mode_matrix(i, slot) = sign * es.vectors(i, m);
    }

    Vec vx(n);
    for (std::size_t k = 0; k < n; ++k) vx[k] = -h.v[k];
    nm.origin = numkit::solve(h.omega_xx, vx);
    return nm;
}

// ------------------------- Gauss-Hermite quadrature --------------------------

GaussHermite gauss_hermite(int n) {
    if (n < 1) throw validation_error("gauss_hermite: need at least one node");
    constexpr double kPim4 = 0.7511255444649425;  // pi^(-1/4)
    constexpr int kMaxIt = 100;
    GaussHermite gh{Vec(n), Vec(n)};
    const int m = (n + 1) / 2;
    double z = 0.0;
    for (int i = 0; i < m; ++i) {
        if (i == 0)
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
        else if (i == 1)
            z -= 1.14 * std::pow(n, 0.426) / z;
        else if (i == 2)
            z = 1.86 * z - 0.86 * gh.nodes[n - 1];
        else if (i == 3)
            z = 1.91 * z - 0.91 * gh.nodes[n - 2];
        else
            z = 2.0 * z - gh.nodes[n - i + 1];

        double pp = 0.0;
        int it = 0;
        for (; it < kMaxIt; ++it) {
            double p1 = kPim4, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2 - std::sqrt(j / (j + 1.0)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) <= 1e-14) break;
        }
        if (it >= kMaxIt) throw numerical_error("gauss_hermite: node iteration did not converge");
        gh.nodes[n - 1 - i] = z;
        gh.nodes[i] = -z;
        gh.weights[i] = 2.0 / (pp * pp);
        gh.weights[n - 1 - i] = gh.weights[i];
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return gh.nodes[a] < gh.nodes[b]; });
    GaussHermite sorted{Vec(n), Vec(n)};
    for (int i = 0; i < n; ++i) {
        sorted.nodes[i] = gh.nodes[order[i]];
        sorted.weights[i] = gh.weights[order[i]];
    }
    return sorted;
}

namespace {

// Normalised Hermite function value without the Gaussian factor:
// H_n(z) / sqrt(2^n n! sqrt(pi)).
Vec hermite_column(int max_n, double z) {
    Vec h(max_n + 1);
    h[0] = 0.7511255444649425;  // pi^(-1/4)
    if (max_n >= 1) h[1] = std::sqrt(2.0) * z * h[0];
    for (int n = 2; n <= max_n; ++n)
        h[n] = z * std::sqrt(2.0 / n) * h[n - 1] - std::sqrt((n - 1.0) / n) * h[n - 2];
    return h;
}

}  // namespace

FockResult fock_populations(const GaussianState& state, const QuadraticHamiltonian& h_ref,
                            int cutoff, int quad_nodes) {
    const std::size_t n = state.nd();
    if (h_ref.nd() != n) throw validation_error("fock_populations: dimension mismatch");
    if (cutoff < 0) throw validation_error("fock_populations: cutoff must be non-negative");
    if (quad_nodes < 2 * (cutoff + 1))
        throw validation_error("fock_populations: too few quadrature nodes for cutoff");
    if (!state.is_pure())
        throw validation_error("fock_populations: state must be pure (det 2 Sigma = 1)");

    const double points = std::pow(static_cast<double>(quad_nodes), static_cast<double>(n));
    if (points > 8.0e6)
        throw validation_error("fock_populations: quadrature grid too large; lower nodes or modes");
    const std::size_t total_points = static_cast<std::size_t>(points + 0.5);

    const NormalModes nm = normal_modes(h_ref);

    // Pure-state wavefunction quadratic form W = (2 Sigma_xx)^-1 - i sym(Sigma_xx^-1 Sigma_xp).
    const Mat sigma_xx = state.sigma.block(0, 0, n, n);
    const Mat sigma_xp = state.sigma.block(0, n, n, n);
    const Mat sigma_xx_inv = numkit::inverse(sigma_xx);
    const Mat w_re = 0.5 * sigma_xx_inv;
    const Mat w_im = -1.0 * (sigma_xx_inv * sigma_xp).symmetrized();
    const double det2pi = numkit::determinant(2.0 * M_PI * sigma_xx);
    if (det2pi <= 0.0) throw numerical_error("fock_populations: degenerate position covariance");
    const double norm_psi = std::pow(det2pi, -0.25);

    double detm = 1.0;
    for (double mk : nm.masses) detm *= mk;
    const double mass_factor = std::pow(detm, -0.25);

    // x(z) = origin + T z with T = m^{-1/2} Q diag(1/sqrt(w_k)).
    Mat tmat(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k)
            tmat(i, k) =
                nm.mode_matrix(i, k) / (std::sqrt(nm.masses[i]) * std::sqrt(nm.frequencies[k]));

    const GaussHermite gh = gauss_hermite(quad_nodes);

    // Per-axis contraction matrices B_k[n][i] = w_k^{-1/4} h~_n(z_i) e^{z_i^2/2} w_i.
    std::vector<Mat> bmats(n, Mat(cutoff + 1, quad_nodes));
    for (std::size_t k = 0; k < n; ++k) {
        const double freq_factor = std::pow(nm.frequencies[k], -0.25);
        for (int i = 0; i < quad_nodes; ++i) {
            const double z = gh.nodes[i];
            const Vec h = hermite_column(cutoff, z);
            const double f = freq_factor * std::exp(0.5 * z * z) * gh.weights[i];
            for (int q = 0; q <= cutoff; ++q) bmats[k](q, i) = h[q] * f;
        }
    }

    // Wavefunction values on the tensor grid; last axis varies fastest.
    std::vector<cplx> tensor(total_points);
    std::vector<int> idx(n, 0);
    Vec x(n), delta(n);
    for (std::size_t p = 0; p < total_points; ++p) {
        for (std::size_t i = 0; i < n; ++i) {
            double xi = nm.origin[i];
            for (std::size_t k = 0; k < n; ++k) xi += tmat(i, k) * gh.nodes[idx[k]];
            x[i] = xi;
        }
        double re = 0.0, im = 0.0;
        for (std::size_t i = 0; i < n; ++i) delta[i] = x[i] - state.z[i];
        for (std::size_t i = 0; i < n; ++i) {
            im += state.z[n + i] * delta[i];
            for (std::size_t j = 0; j < n; ++j) {
                re -= 0.5 * delta[i] * w_re(i, j) * delta[j];
                im -= 0.5 * delta[i] * w_im(i, j) * delta[j];
            }
        }
        tensor[p] = norm_psi * std::exp(cplx(re, im));
        for (std::size_t k = n; k-- > 0;) {
            if (++idx[k] < quad_nodes) break;
            idx[k] = 0;
        }
    }

    // Contract one axis at a time: front block index runs over assigned
    // quantum numbers, back block over remaining grid axes.
    const std::size_t q1 = static_cast<std::size_t>(cutoff) + 1;
    std::size_t front = 1, back = total_points / quad_nodes;
    for (std::size_t k = 0; k < n; ++k) {
        std::vector<cplx> next(front * q1 * back);
        for (std::size_t b = 0; b < front; ++b)
            for (std::size_t q = 0; q < q1; ++q)
                for (int i = 0; i < quad_nodes; ++i) {
                    const double bqi = bmats[k](q, static_cast<std::size_t>(i));
                    const cplx* src = &tensor[(b * quad_nodes + i) * back];
                    cplx* dst = &next[(b * q1 + q) * back];
                    for (std::size_t r = 0; r < back; ++r) dst[r] += bqi * src[r];
                }
        tensor = std::move(next);
        front *= q1;
        back = (k + 1 < n) ? back / quad_nodes : 1;
    }

    FockResult result;
    std::vector<int> tuple(n, 0);
    for (std::size_t p = 0; p < tensor.size(); ++p) {
        std::size_t rem = p;
        for (std::size_t k = n; k-- > 0;) {
            tuple[k] = static_cast<int>(rem % q1);
            rem /= q1;
        }
        const double prob = std::norm(mass_factor * tensor[p]);
        result.populations[tuple] = prob;
        result.total += prob;
    }
    result.deficit = 1.0 - result.total;
    result.cutoff_warning = result.total < 0.99;
    return result;
}

}  // namespace ionshuttle::model
