#include "ionshuttle/coulomb.hpp"

#include <cmath>
#include <cstddef>

#include "ionshuttle/errors.hpp"

namespace ionshuttle::coulomb {

namespace {

double separation_norm(const Vec& r, double kappa) {
    const double rn = numkit::norm(r);
    if (kappa != 0.0 && rn < kMinSeparation)
        throw numerical_error("coulomb: ion separation below coalescence threshold");
    return rn;
}

}  // namespace

Mat interaction_matrix(const Vec& r, double kappa) {
    const std::size_t d = r.size();
    Mat out(d, d);
    if (kappa == 0.0) return out;
    const double rn = separation_norm(r, kappa);
    const double r3 = rn * rn * rn;
    const double r5 = r3 * rn * rn;
    for (std::size_t i = 0; i < d; ++i) {
        out(i, i) = kappa / r3;
        for (std::size_t j = 0; j < d; ++j) out(i, j) -= 3.0 * kappa * r[i] * r[j] / r5;
    }
    return out.symmetrized();
}

QuadraticExpansion coulomb_quadratic(const Vec& r, double kappa) {
    const std::size_t d = r.size();
    QuadraticExpansion q{0.0, Vec(d, 0.0), Mat(d, d)};
    if (kappa == 0.0) return q;
    const double rn = separation_norm(r, kappa);
    q.value = kappa / rn;
    const double r3 = rn * rn * rn;
    for (std::size_t i = 0; i < d; ++i) q.gradient[i] = -kappa * r[i] / r3;
    q.hessian = -1.0 * interaction_matrix(r, kappa);
    return q;
}

std::pair<Vec, Vec> equilibrium_in_wells(const Mat& m1, const Vec& w1, const Mat& m2,
                                         const Vec& w2, double mass1, double mass2, double kappa,
                                         const Vec& guess1, const Vec& guess2) {
    const std::size_t d = w1.size();
    if (m1.rows() != d || m2.rows() != d || w2.size() != d)
        throw validation_error("equilibrium_in_wells: dimension mismatch");
    if (!(mass1 > 0.0) || !(mass2 > 0.0))
        throw validation_error("equilibrium_in_wells: masses must be positive");

    Vec x(2 * d);
    for (std::size_t k = 0; k < d; ++k) {
        x[k] = guess1[k];
        x[d + k] = guess2[k];
    }

    // Residual g = -(total force); solved g = 0 with Newton.
    const auto residual = [&](const Vec& xs, Vec& g) {
        Vec r(d);
        for (std::size_t k = 0; k < d; ++k) r[k] = xs[k] - xs[d + k];
        const QuadraticExpansion q = coulomb_quadratic(r, kappa);
        for (std::size_t k = 0; k < d; ++k) {
            double t1 = 0.0, t2 = 0.0;
            for (std::size_t l = 0; l < d; ++l) {
                t1 += m1(k, l) * (xs[l] - w1[l]);
                t2 += m2(k, l) * (xs[d + l] - w2[l]);
            }
            g[k] = mass1 * t1 + q.gradient[k];
            g[d + k] = mass2 * t2 - q.gradient[k];
        }
    };

    // Achievable residual scales with the curvature-times-position terms the
    // force is assembled from; below that, double precision is exhausted.
    const auto tolerance = [&](const Vec& xs) {
        double scale = 1.0;
        for (std::size_t k = 0; k < d; ++k) {
            double row1 = 0.0, row2 = 0.0;
            for (std::size_t l = 0; l < d; ++l) {
                row1 += std::abs(m1(k, l)) * (std::abs(xs[l]) + std::abs(w1[l]));
                row2 += std::abs(m2(k, l)) * (std::abs(xs[d + l]) + std::abs(w2[l]));
            }
            scale = std::max({scale, mass1 * row1, mass2 * row2});
        }
        return std::max(1e-12, 64.0 * 2.220446049250313e-16 * scale);
    };

    Vec g(2 * d);
    double gmax = 0.0;
    for (int it = 0; it < 100; ++it) {
        residual(x, g);
        gmax = 0.0;
        for (double v : g) gmax = std::max(gmax, std::abs(v));
        if (gmax <= tolerance(x)) {
            Vec x1(d), x2(d);
            for (std::size_t k = 0; k < d; ++k) {
                x1[k] = x[k];
                x2[k] = x[d + k];
            }
            return {x1, x2};
        }

        Vec r(d);
        for (std::size_t k = 0; k < d; ++k) r[k] = x[k] - x[d + k];
        const Mat dmat = interaction_matrix(r, kappa);
        Mat jac(2 * d, 2 * d);
        for (std::size_t k = 0; k < d; ++k)
            for (std::size_t l = 0; l < d; ++l) {
                jac(k, l) = mass1 * m1(k, l) - dmat(k, l);
                jac(k, d + l) = dmat(k, l);
                jac(d + k, l) = dmat(k, l);
                jac(d + k, d + l) = mass2 * m2(k, l) - dmat(k, l);
            }
        const Vec step = numkit::solve(jac, g);
        for (std::size_t k = 0; k < 2 * d; ++k) x[k] -= step[k];
    }
    throw numerical_error("equilibrium_in_wells: Newton did not converge; last residual " +
                          std::to_string(gmax));
}

std::pair<Vec, Vec> equilibrium_positions(const Mat& m0, const units::IonSpecies& ion1,
                                          const units::IonSpecies& ion2, double kappa) {
    if (!m0.square()) throw validation_error("equilibrium_positions: curvature must be square");
    if (ion1.mass != ion2.mass)
        throw validation_error("equilibrium_positions: symmetric configuration needs equal masses");
    const std::size_t d = m0.rows();
    const double mass = ion1.mass;

    if (kappa == 0.0) return {Vec(d, 0.0), Vec(d, 0.0)};

    // Closed-form seed: separation d0 = (2 kappa/(m w^2))^(1/3) along the
    // softest principal axis of m0.
    const numkit::EigenSym es = numkit::eigh(m0);
    if (es.values.front() <= 0.0)
        throw numerical_error("equilibrium_positions: curvature not positive definite");
    const double d0 = std::cbrt(2.0 * kappa / (mass * es.values.front()));
    Vec g1(d), g2(d);
    for (std::size_t k = 0; k < d; ++k) {
        g1[k] = 0.5 * d0 * es.vectors(k, 0);
        g2[k] = -g1[k];
    }
    const Vec origin(d, 0.0);
    return equilibrium_in_wells(m0, origin, m0, origin, mass, ion2.mass, kappa, g1, g2);
}

}  // namespace ionshuttle::coulomb
