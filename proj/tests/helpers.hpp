// Shared test utilities: deterministic random matrices and independent
// oracles (wavefunction overlap by quadrature, matrix exponential).

#pragma once

#include <cmath>
#include <complex>
#include <random>

#include "ionshuttle/model.hpp"
#include "ionshuttle/numkit.hpp"

namespace test_helpers {

using ionshuttle::numkit::CMat;
using ionshuttle::numkit::cplx;
using ionshuttle::numkit::Mat;
using ionshuttle::numkit::Vec;

inline std::mt19937& rng() {
    static std::mt19937 gen(0x5eed1234);
    return gen;
}

inline double uniform(double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    return dist(rng());
}

inline Mat random_matrix(std::size_t n, double scale = 1.0) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(i, j) = uniform(-scale, scale);
    return m;
}

inline Mat random_symmetric(std::size_t n, double scale = 1.0) {
    return random_matrix(n, scale).symmetrized();
}

inline Mat random_orthogonal(std::size_t n) {
    return ionshuttle::numkit::eigh(random_symmetric(n)).vectors;
}

// SPD with eigenvalues drawn from [lo, hi].
inline Mat random_spd(std::size_t n, double lo = 0.5, double hi = 3.0) {
    const Mat q = random_orthogonal(n);
    Mat d(n, n);
    for (std::size_t i = 0; i < n; ++i) d(i, i) = uniform(lo, hi);
    return (q * d * q.transposed()).symmetrized();
}

inline CMat random_complex(std::size_t n, double scale = 1.0) {
    return CMat::from_parts(random_matrix(n, scale), random_matrix(n, scale));
}

inline double max_abs_diff(const Mat& a, const Mat& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
    return m;
}

// exp(A) for complex A by scaling and squaring with a Taylor core.
inline CMat matrix_exp(const CMat& a) {
    const std::size_t n = a.rows();
    int squarings = 0;
    double norm = a.frobenius();
    while (norm > 0.25) {
        norm *= 0.5;
        ++squarings;
    }
    CMat scaled = a;
    scaled *= cplx(std::pow(2.0, -squarings), 0.0);
    CMat result = CMat::identity(n);
    CMat term = CMat::identity(n);
    for (int k = 1; k <= 24; ++k) {
        term = term * scaled;
        term *= cplx(1.0 / k, 0.0);
        result += term;
    }
    for (int s = 0; s < squarings; ++s) result = result * result;
    return result;
}

// 1-D pure Gaussian wavefunction from single-mode moments.
struct Wave1D {
    double mean_x, mean_p, sxx, sxp;

    cplx operator()(double x) const {
        const double dx = x - mean_x;
        const double w_re = 1.0 / (2.0 * sxx);
        const double w_im = -sxp / sxx;
        const double amp = std::pow(2.0 * M_PI * sxx, -0.25);
        return amp * std::exp(cplx(-0.5 * w_re * dx * dx, -0.5 * w_im * dx * dx + mean_p * dx));
    }
};

// |<a|b>|^2 by Simpson quadrature; independent of the model's formula.
inline double overlap_by_quadrature(const ionshuttle::model::GaussianState& a,
                                    const ionshuttle::model::GaussianState& b) {
    const Wave1D wa{a.z[0], a.z[1], a.sigma(0, 0), a.sigma(0, 1)};
    const Wave1D wb{b.z[0], b.z[1], b.sigma(0, 0), b.sigma(0, 1)};
    const double lo = std::min(a.z[0], b.z[0]) - 14.0 * std::sqrt(std::max(a.sigma(0, 0), b.sigma(0, 0)));
    const double hi = std::max(a.z[0], b.z[0]) + 14.0 * std::sqrt(std::max(a.sigma(0, 0), b.sigma(0, 0)));
    const std::size_t n = 40000;  // even
    const double h = (hi - lo) / n;
    cplx acc = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        const double x = lo + i * h;
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        acc += w * std::conj(wa(x)) * wb(x);
    }
    acc *= h / 3.0;
    return std::norm(acc);
}

}  // namespace test_helpers
