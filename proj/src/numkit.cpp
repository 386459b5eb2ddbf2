#include "ionshuttle/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ionshuttle/errors.hpp"

namespace ionshuttle::numkit {

namespace {
constexpr double kEps = std::numeric_limits<double>::epsilon();

void check_same_shape(const Mat& a, const Mat& b, const char* who) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw validation_error(std::string(who) + ": shape mismatch");
}
void check_same_shape(const CMat& a, const CMat& b, const char* who) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw validation_error(std::string(who) + ": shape mismatch");
}
}  // namespace

double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw validation_error("dot: size mismatch");
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

// ----------------------------- real matrices --------------------------------

Mat::Mat(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), a_(rows * cols, 0.0) {}

Mat Mat::identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Mat Mat::diagonal(const Vec& d) {
    Mat m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

Mat& Mat::operator+=(const Mat& o) {
    check_same_shape(*this, o, "Mat::operator+=");
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
    return *this;
}

Mat& Mat::operator-=(const Mat& o) {
    check_same_shape(*this, o, "Mat::operator-=");
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
    return *this;
}

Mat& Mat::operator*=(double s) {
    for (double& v : a_) v *= s;
    return *this;
}

Mat Mat::transposed() const {
    Mat t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

double Mat::frobenius() const {
    double s = 0.0;
    for (double v : a_) s += v * v;
    return std::sqrt(s);
}

double Mat::max_abs() const {
    double m = 0.0;
    for (double v : a_) m = std::max(m, std::abs(v));
    return m;
}

double Mat::trace() const {
    double s = 0.0;
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) s += (*this)(i, i);
    return s;
}

double Mat::asymmetry() const {
    if (!square()) return std::numeric_limits<double>::infinity();
    double num = 0.0;
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) {
            const double d = (*this)(i, j) - (*this)(j, i);
            num += d * d;
        }
    const double den = std::max(frobenius(), kEps);
    return std::sqrt(num) / den;
}

Mat Mat::symmetrized() const {
    Mat s(rows_, cols_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) s(i, j) = 0.5 * ((*this)(i, j) + (*this)(j, i));
    return s;
}

Mat Mat::antisymmetrized() const {
    Mat s(rows_, cols_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) s(i, j) = 0.5 * ((*this)(i, j) - (*this)(j, i));
    return s;
}

void Mat::set_block(std::size_t i0, std::size_t j0, const Mat& b) {
    if (i0 + b.rows() > rows_ || j0 + b.cols() > cols_)
        throw validation_error("Mat::set_block: block out of range");
    for (std::size_t i = 0; i < b.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) (*this)(i0 + i, j0 + j) = b(i, j);
}

Mat Mat::block(std::size_t i0, std::size_t j0, std::size_t r, std::size_t c) const {
    if (i0 + r > rows_ || j0 + c > cols_) throw validation_error("Mat::block: out of range");
    Mat b(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) b(i, j) = (*this)(i0 + i, j0 + j);
    return b;
}

Mat operator+(Mat a, const Mat& b) { return a += b; }
Mat operator-(Mat a, const Mat& b) { return a -= b; }
Mat operator*(double s, Mat a) { return a *= s; }

Mat operator*(const Mat& a, const Mat& b) {
    if (a.cols() != b.rows()) throw validation_error("Mat::operator*: shape mismatch");
    Mat c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

Vec operator*(const Mat& a, const Vec& x) {
    if (a.cols() != x.size()) throw validation_error("Mat*Vec: shape mismatch");
    Vec y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) y[i] += a(i, j) * x[j];
    return y;
}

double quad_form(const Mat& a, const Vec& x) { return dot(x, a * x); }

namespace {

// LU with partial pivoting; returns pivoted LU in place plus permutation sign.
struct Lu {
    Mat lu;
    std::vector<std::size_t> perm;
    double sign = 1.0;
};

Lu lu_decompose(const Mat& a, const char* who) {
    if (!a.square()) throw validation_error(std::string(who) + ": matrix not square");
    const std::size_t n = a.rows();
    Lu f{a, std::vector<std::size_t>(n), 1.0};
    for (std::size_t i = 0; i < n; ++i) f.perm[i] = i;
    const double scale = std::max(f.lu.max_abs(), kEps);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(f.lu(i, k)) > std::abs(f.lu(p, k))) p = i;
        if (std::abs(f.lu(p, k)) <= 1e-14 * scale)
            throw numerical_error(std::string(who) + ": singular matrix");
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(f.lu(p, j), f.lu(k, j));
            std::swap(f.perm[p], f.perm[k]);
            f.sign = -f.sign;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            f.lu(i, k) /= f.lu(k, k);
            for (std::size_t j = k + 1; j < n; ++j) f.lu(i, j) -= f.lu(i, k) * f.lu(k, j);
        }
    }
    return f;
}

Vec lu_solve(const Lu& f, const Vec& b) {
    const std::size_t n = f.lu.rows();
    Vec y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = b[f.perm[i]];
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) y[i] -= f.lu(i, j) * y[j];
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t j = i + 1; j < n; ++j) y[i] -= f.lu(i, j) * y[j];
        y[i] /= f.lu(i, i);
    }
    return y;
}

}  // namespace

Vec solve(const Mat& a, const Vec& b) {
    if (a.rows() != b.size()) throw validation_error("solve: shape mismatch");
    return lu_solve(lu_decompose(a, "solve"), b);
}

Mat inverse(const Mat& a) {
    const Lu f = lu_decompose(a, "inverse");
    const std::size_t n = a.rows();
    Mat inv(n, n);
    Vec e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        const Vec col = lu_solve(f, e);
        for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
        e[j] = 0.0;
    }
    return inv;
}

double determinant(const Mat& a) {
    Lu f;
    try {
        f = lu_decompose(a, "determinant");
    } catch (const numerical_error&) {
        return 0.0;
    }
    double d = f.sign;
    for (std::size_t i = 0; i < a.rows(); ++i) d *= f.lu(i, i);
    return d;
}

// --------------------------- complex matrices -------------------------------

CMat::CMat(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), a_(rows * cols) {}

CMat CMat::identity(std::size_t n) {
    CMat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

CMat CMat::from_parts(const Mat& re, const Mat& im) {
    check_same_shape(re, im, "CMat::from_parts");
    CMat m(re.rows(), re.cols());
    for (std::size_t i = 0; i < re.rows(); ++i)
        for (std::size_t j = 0; j < re.cols(); ++j) m(i, j) = cplx(re(i, j), im(i, j));
    return m;
}

CMat& CMat::operator+=(const CMat& o) {
    check_same_shape(*this, o, "CMat::operator+=");
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
    return *this;
}

CMat& CMat::operator-=(const CMat& o) {
    check_same_shape(*this, o, "CMat::operator-=");
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
    return *this;
}

CMat& CMat::operator*=(cplx s) {
    for (cplx& v : a_) v *= s;
    return *this;
}

CMat CMat::adjoint() const {
    CMat t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = std::conj((*this)(i, j));
    return t;
}

Mat CMat::real() const {
    Mat m(rows_, cols_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) m(i, j) = (*this)(i, j).real();
    return m;
}

Mat CMat::imag() const {
    Mat m(rows_, cols_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) m(i, j) = (*this)(i, j).imag();
    return m;
}

double CMat::frobenius() const {
    double s = 0.0;
    for (const cplx& v : a_) s += std::norm(v);
    return std::sqrt(s);
}

CMat operator+(CMat a, const CMat& b) { return a += b; }
CMat operator-(CMat a, const CMat& b) { return a -= b; }
CMat operator*(cplx s, CMat a) { return a *= s; }

CMat operator*(const CMat& a, const CMat& b) {
    if (a.cols() != b.rows()) throw validation_error("CMat::operator*: shape mismatch");
    CMat c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const cplx aik = a(i, k);
            if (aik == cplx(0.0, 0.0)) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

CMat inverse(const CMat& a) {
    if (a.rows() != a.cols()) throw validation_error("inverse: matrix not square");
    const std::size_t n = a.rows();
    CMat w = a;
    CMat inv = CMat::identity(n);
    double scale = std::max(w.frobenius(), kEps);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(w(i, k)) > std::abs(w(p, k))) p = i;
        if (std::abs(w(p, k)) <= 1e-14 * scale) throw numerical_error("inverse: singular matrix");
        if (p != k)
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(w(p, j), w(k, j));
                std::swap(inv(p, j), inv(k, j));
            }
        const cplx piv = w(k, k);
        for (std::size_t j = 0; j < n; ++j) {
            w(k, j) /= piv;
            inv(k, j) /= piv;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (i == k) continue;
            const cplx f = w(i, k);
            if (f == cplx(0.0, 0.0)) continue;
            for (std::size_t j = 0; j < n; ++j) {
                w(i, j) -= f * w(k, j);
                inv(i, j) -= f * inv(k, j);
            }
        }
    }
    return inv;
}

cplx determinant(const CMat& a) {
    if (a.rows() != a.cols()) throw validation_error("determinant: matrix not square");
    const std::size_t n = a.rows();
    CMat w = a;
    cplx d = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(w(i, k)) > std::abs(w(p, k))) p = i;
        if (std::abs(w(p, k)) == 0.0) return 0.0;
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(w(p, j), w(k, j));
            d = -d;
        }
        d *= w(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            const cplx f = w(i, k) / w(k, k);
            for (std::size_t j = k; j < n; ++j) w(i, j) -= f * w(k, j);
        }
    }
    return d;
}

// -------------------------- symmetric eigenproblem --------------------------

EigenSym eigh(const Mat& a) {
    if (!a.square()) throw validation_error("eigh: matrix not square");
    if (!a.is_symmetric(1e-12)) throw validation_error("eigh: matrix not symmetric");
    const std::size_t n = a.rows();
    Mat w = a.symmetrized();
    Mat v = Mat::identity(n);

    const double scale = std::max(w.frobenius(), kEps);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += w(i, j) * w(i, j);
        if (std::sqrt(2.0 * off) <= 1e-15 * scale) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = w(p, q);
                if (std::abs(apq) <= 1e-300) continue;
                const double theta = (w(q, q) - w(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double wkp = w(k, p), wkq = w(k, q);
                    w(k, p) = c * wkp - s * wkq;
                    w(k, q) = s * wkp + c * wkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double wpk = w(p, k), wqk = w(q, k);
                    w(p, k) = c * wpk - s * wqk;
                    w(q, k) = s * wpk + c * wqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
    }

    EigenSym es;
    es.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) es.values[i] = w(i, i);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return es.values[i] < es.values[j]; });
    Vec sorted(n);
    Mat vs(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        sorted[k] = es.values[order[k]];
        for (std::size_t i = 0; i < n; ++i) vs(i, k) = v(i, order[k]);
    }
    es.values = std::move(sorted);
    es.vectors = std::move(vs);
    return es;
}

Mat spd_power(const Mat& m, double exponent) {
    const EigenSym es = eigh(m);
    const std::size_t n = m.rows();
    const double lmax = std::abs(es.values.back());
    for (double l : es.values)
        if (l <= 1e-12 * lmax || lmax == 0.0)
            throw numerical_error("spd_power: matrix not positive definite");
    Mat out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                s += es.vectors(i, k) * std::pow(es.values[k], exponent) * es.vectors(j, k);
            out(i, j) = s;
        }
    return out.symmetrized();
}

Mat solve_anticommutator(const Mat& a, const Mat& c) {
    if (!c.square() || c.rows() != a.rows())
        throw validation_error("solve_anticommutator: shape mismatch");
    const EigenSym es = eigh(a);
    const std::size_t n = a.rows();
    const double lmax = std::abs(es.values.back());
    for (double l : es.values)
        if (l <= 1e-12 * lmax || lmax == 0.0)
            throw numerical_error("solve_anticommutator: matrix not positive definite");

    const Mat vt = es.vectors.transposed();
    const Mat ct = vt * c * es.vectors;
    Mat xt(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double den = es.values[i] + es.values[j];
            if (den <= 1e-14 * lmax)
                throw numerical_error("solve_anticommutator: ill-conditioned eigenvalue pair");
            xt(i, j) = ct(i, j) / den;
        }
    Mat x = es.vectors * xt * vt;

    const double cn = std::max(c.frobenius(), kEps);
    const Mat ct_sym = c - c.transposed();
    const Mat ct_asym = c + c.transposed();
    if (ct_sym.frobenius() <= 1e-12 * cn) return x.symmetrized();
    if (ct_asym.frobenius() <= 1e-12 * cn) return x.antisymmetrized();
    return x;
}

CMat nearest_unitary(const CMat& m) {
    if (m.rows() != m.cols()) throw validation_error("nearest_unitary: matrix not square");
    const std::size_t n = m.rows();
    CMat x = m;
    for (int it = 0; it < 100; ++it) {
        const CMat xinv = inverse(x);  // throws on singular input
        const double mu = std::sqrt(xinv.frobenius() / std::max(x.frobenius(), kEps));
        CMat next(n, n);
        const CMat xia = xinv.adjoint();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                next(i, j) = 0.5 * (mu * x(i, j) + xia(i, j) / mu);
        const double step = (next - x).frobenius();
        x = next;
        if (step <= 1e-14 * std::sqrt(static_cast<double>(n))) {
            const CMat gram = x.adjoint() * x;
            if ((gram - CMat::identity(n)).frobenius() <= 1e-13 * static_cast<double>(n)) return x;
        }
    }
    throw numerical_error("nearest_unitary: Newton iteration did not converge");
}

// ------------------------------- integrators --------------------------------

std::vector<Vec> rk4_path(const OdeFun& f, const Vec& y0, const Vec& grid) {
    if (grid.size() < 2) throw validation_error("rk4_path: grid needs at least two points");
    const double h = grid[1] - grid[0];
    if (h <= 0.0) throw validation_error("rk4_path: grid must be increasing");
    for (std::size_t i = 1; i + 1 < grid.size(); ++i)
        if (std::abs((grid[i + 1] - grid[i]) - h) > 1e-9 * std::abs(h))
            throw validation_error("rk4_path: grid must be uniform");

    const std::size_t dim = y0.size();
    std::vector<Vec> path;
    path.reserve(grid.size());
    path.push_back(y0);

    Vec k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
    Vec y = y0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const double t = grid[i];
        f(t, y, k1);
        for (std::size_t d = 0; d < dim; ++d) tmp[d] = y[d] + 0.5 * h * k1[d];
        f(t + 0.5 * h, tmp, k2);
        for (std::size_t d = 0; d < dim; ++d) tmp[d] = y[d] + 0.5 * h * k2[d];
        f(t + 0.5 * h, tmp, k3);
        for (std::size_t d = 0; d < dim; ++d) tmp[d] = y[d] + h * k3[d];
        f(t + h, tmp, k4);
        for (std::size_t d = 0; d < dim; ++d)
            y[d] += h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
        path.push_back(y);
    }
    return path;
}

}  // namespace ionshuttle::numkit
