// numkit.hpp — small dense-matrix kernels shared by every other module.
//
// All matrices in this project are tiny (at most 2Nd x 2Nd = 8x8 for the
// two-ion protocols, 32x32 for quadrature helpers), so the solvers favour
// robustness over asymptotics: cyclic Jacobi for symmetric eigenproblems,
// Newton iteration for the unitary polar factor, partial-pivot LU for the
// occasional linear solve.

#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace ionshuttle::numkit {

using Vec = std::vector<double>;
using cplx = std::complex<double>;

double dot(const Vec& a, const Vec& b);
double norm(const Vec& a);

// ----------------------------- real matrices --------------------------------

class Mat {
  public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols);

    static Mat identity(std::size_t n);
    static Mat diagonal(const Vec& d);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool square() const { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

    Mat& operator+=(const Mat& o);
    Mat& operator-=(const Mat& o);
    Mat& operator*=(double s);

    Mat transposed() const;
    double frobenius() const;
    double max_abs() const;
    double trace() const;

    // Relative Frobenius asymmetry ||A - A^T|| / max(||A||, eps)
    double asymmetry() const;
    bool is_symmetric(double tol = 1e-12) const { return asymmetry() <= tol; }
    Mat symmetrized() const;      // (A + A^T)/2
    Mat antisymmetrized() const;  // (A - A^T)/2

    void set_block(std::size_t i0, std::size_t j0, const Mat& b);
    Mat block(std::size_t i0, std::size_t j0, std::size_t r, std::size_t c) const;

  private:
    std::size_t rows_ = 0, cols_ = 0;
    Vec a_;
};

Mat operator+(Mat a, const Mat& b);
Mat operator-(Mat a, const Mat& b);
Mat operator*(double s, Mat a);
Mat operator*(const Mat& a, const Mat& b);
Vec operator*(const Mat& a, const Vec& x);

// Quadratic form x^T A x
double quad_form(const Mat& a, const Vec& x);

// Solve A x = b by partial-pivot LU. Throws numerical_error on singular A.
Vec solve(const Mat& a, const Vec& b);
Mat inverse(const Mat& a);
double determinant(const Mat& a);

// --------------------------- complex matrices -------------------------------

class CMat {
  public:
    CMat() = default;
    CMat(std::size_t rows, std::size_t cols);

    static CMat identity(std::size_t n);
    static CMat from_parts(const Mat& re, const Mat& im);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    cplx& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    cplx operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

    CMat& operator+=(const CMat& o);
    CMat& operator-=(const CMat& o);
    CMat& operator*=(cplx s);

    CMat adjoint() const;
    Mat real() const;
    Mat imag() const;
    double frobenius() const;

  private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<cplx> a_;
};

CMat operator+(CMat a, const CMat& b);
CMat operator-(CMat a, const CMat& b);
CMat operator*(cplx s, CMat a);
CMat operator*(const CMat& a, const CMat& b);

CMat inverse(const CMat& a);
cplx determinant(const CMat& a);

// -------------------------- symmetric eigenproblem --------------------------

struct EigenSym {
    Vec values;   // ascending
    Mat vectors;  // orthonormal columns, A = V diag(values) V^T
};

// Cyclic Jacobi on a symmetric matrix (asymmetry tolerance 1e-12 relative).
EigenSym eigh(const Mat& a);

// V diag(lambda_i^e) V^T for symmetric positive-definite input. Eigenvalues
// below 1e-12 of the largest are treated as singular input.
Mat spd_power(const Mat& m, double exponent);

// Solve X A + A X = C for A symmetric positive definite. In A's eigenbasis
// X_ij = C_ij / (lambda_i + lambda_j). The result is symmetrised
// (antisymmetrised) when C is symmetric (antisymmetric) to suppress rounding
// drift. Throws when some lambda_i + lambda_j falls below 1e-14 of the
// largest eigenvalue.
Mat solve_anticommutator(const Mat& a, const Mat& c);

// Unitary factor of the polar decomposition M = U H (H positive
// semi-definite), by scaled Newton iteration. Requires nonsingular M.
CMat nearest_unitary(const CMat& m);

// ------------------------------- integrators --------------------------------

using OdeFun = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;

// Classical fixed-step fourth-order Runge-Kutta sampled at every grid point.
// The grid must be uniform and strictly increasing.
std::vector<Vec> rk4_path(const OdeFun& f, const Vec& y0, const Vec& grid);

}  // namespace ionshuttle::numkit
