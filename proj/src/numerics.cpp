#include "erm/numerics.hpp"

#include "erm/errors.hpp"
#include "erm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace erm {

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* op)
{
    if (a != b)
        throw ShapeError(std::string(op) + ": length mismatch (" + std::to_string(a) + " vs " +
                         std::to_string(b) + ")");
}

void require_symmetric(const Matrix& a, const char* op)
{
    if (!a.is_square())
        throw ShapeError(std::string(op) + ": matrix is " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + ", expected square");
    if (!is_symmetric(a))
        throw ShapeError(std::string(op) + ": matrix is not symmetric");
}

} // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), entries_(rows * cols, fill)
{
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries))
{
    if (entries_.size() != rows * cols)
        throw ShapeError("Matrix: " + std::to_string(entries_.size()) + " entries for " +
                         std::to_string(rows) + "x" + std::to_string(cols));
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
{
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    entries_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_)
            throw ShapeError("Matrix: ragged initializer");
        entries_.insert(entries_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n)
{
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diagonal(std::span<const double> values)
{
    Matrix m(values.size(), values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        m(i, i) = values[i];
    return m;
}

Matrix Matrix::from_rows(const std::vector<Vector>& rows)
{
    if (rows.empty())
        return {};
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m.cols())
            throw ShapeError("Matrix::from_rows: ragged rows");
        std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
    }
    return m;
}

Vector Matrix::column(std::size_t c) const
{
    Vector out(rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        out[r] = (*this)(r, c);
    return out;
}

Matrix Matrix::transpose() const
{
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c)
            t(c, r) = (*this)(r, c);
    return t;
}

double Matrix::trace() const
{
    double sum = 0.0;
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i)
        sum += (*this)(i, i);
    return sum;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const
{
    Matrix out(indices.size(), cols_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= rows_)
            throw ShapeError("select_rows: index out of range");
        auto src = row(indices[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

Matrix Matrix::leading_columns(std::size_t count) const
{
    if (count > cols_)
        throw ShapeError("leading_columns: requested more columns than available");
    Matrix out(rows_, count);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < count; ++c)
            out(r, c) = (*this)(r, c);
    return out;
}

double dot(std::span<const double> a, std::span<const double> b)
{
    require_same_size(a.size(), b.size(), "dot");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        sum += a[i] * b[i];
    return sum;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double squared_distance(std::span<const double> a, std::span<const double> b)
{
    require_same_size(a.size(), b.size(), "squared_distance");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

double max_abs(std::span<const double> a)
{
    double m = 0.0;
    for (double v : a)
        m = std::max(m, std::abs(v));
    return m;
}

Vector subtract(std::span<const double> a, std::span<const double> b)
{
    require_same_size(a.size(), b.size(), "subtract");
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = a[i] - b[i];
    return out;
}

Vector add(std::span<const double> a, std::span<const double> b)
{
    require_same_size(a.size(), b.size(), "add");
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = a[i] + b[i];
    return out;
}

Vector scale(std::span<const double> a, double factor)
{
    Vector out(a.begin(), a.end());
    for (double& v : out)
        v *= factor;
    return out;
}

Matrix matmul(const Matrix& a, const Matrix& b)
{
    if (a.cols() != b.rows())
        throw ShapeError("matmul: inner dimensions " + std::to_string(a.cols()) + " and " +
                         std::to_string(b.rows()) + " differ");
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            double aik = a(i, k);
            if (aik == 0.0)
                continue;
            for (std::size_t j = 0; j < b.cols(); ++j)
                out(i, j) += aik * b(k, j);
        }
    return out;
}

Matrix add(const Matrix& a, const Matrix& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ShapeError("add: shape mismatch");
    std::vector<double> entries(a.entries().size());
    for (std::size_t i = 0; i < entries.size(); ++i)
        entries[i] = a.entries()[i] + b.entries()[i];
    return Matrix(a.rows(), a.cols(), std::move(entries));
}

Matrix scale(const Matrix& a, double factor)
{
    std::vector<double> entries = a.entries();
    for (double& v : entries)
        v *= factor;
    return Matrix(a.rows(), a.cols(), std::move(entries));
}

Matrix add_identity(const Matrix& a, double shift)
{
    if (!a.is_square())
        throw ShapeError("add_identity: matrix is not square");
    Matrix out = a;
    for (std::size_t i = 0; i < a.rows(); ++i)
        out(i, i) += shift;
    return out;
}

Vector matvec(const Matrix& a, std::span<const double> x)
{
    require_same_size(a.cols(), x.size(), "matvec");
    Vector out(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        out[i] = dot(a.row(i), x);
    return out;
}

Vector transpose_matvec(const Matrix& a, std::span<const double> y)
{
    require_same_size(a.rows(), y.size(), "transpose_matvec");
    Vector out(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto r = a.row(i);
        for (std::size_t j = 0; j < a.cols(); ++j)
            out[j] += r[j] * y[i];
    }
    return out;
}

Matrix gram(const Matrix& a)
{
    const std::size_t n = a.cols();
    Matrix g(n, n);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto r = a.row(i);
        for (std::size_t p = 0; p < n; ++p) {
            if (r[p] == 0.0)
                continue;
            for (std::size_t q = p; q < n; ++q)
                g(p, q) += r[p] * r[q];
        }
    }
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = 0; q < p; ++q)
            g(p, q) = g(q, p);
    return g;
}

double frobenius_norm(const Matrix& a) { return norm2(a.entries()); }

double max_abs(const Matrix& a) { return max_abs(std::span<const double>(a.entries())); }

bool all_finite(std::span<const double> a)
{
    return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

bool all_finite(const Matrix& a) { return all_finite(std::span<const double>(a.entries())); }

bool is_symmetric(const Matrix& a, double rel_tol)
{
    if (!a.is_square())
        return false;
    const double bound = rel_tol * max_abs(a);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j)
            if (std::abs(a(i, j) - a(j, i)) > bound)
                return false;
    return true;
}

SymmetricEvd sym_evd(const Matrix& input)
{
    require_symmetric(input, "sym_evd");
    const std::size_t n = input.rows();

    // Work on the exactly symmetrized copy.
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            a(i, j) = 0.5 * (input(i, j) + input(j, i));
    Matrix v = Matrix::identity(n);

    const double scale_ref = frobenius_norm(a);
    constexpr int max_sweeps = 100;
    bool converged = false;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q)
                off += a(p, q) * a(p, q);
        if (std::sqrt(off) <= 1e-15 * scale_ref || off == 0.0) {
            converged = true;
            break;
        }
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0)
                    continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    if (!converged)
        throw ConvergenceError("sym_evd: Jacobi sweeps did not converge");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    SymmetricEvd out;
    out.eigenvalues.resize(n);
    out.eigenvectors = Matrix(n, n);
    for (std::size_t c = 0; c < n; ++c) {
        const std::size_t src = order[c];
        out.eigenvalues[c] = a(src, src);
        double largest = 0.0;
        for (std::size_t k = 0; k < n; ++k)
            largest = std::max(largest, std::abs(v(k, src)));
        double sign = 1.0;
        for (std::size_t k = 0; k < n; ++k) {
            if (std::abs(v(k, src)) > 1e-12 * largest) {
                sign = v(k, src) < 0.0 ? -1.0 : 1.0;
                break;
            }
        }
        for (std::size_t k = 0; k < n; ++k)
            out.eigenvectors(k, c) = sign * v(k, src);
    }
    return out;
}

namespace {

struct PowerResult {
    double rayleigh = 0.0;
    bool converged = false;
};

PowerResult power_iterate(const Matrix& a, Vector x, double tol)
{
    constexpr int max_iters = 200000;
    double norm = norm2(x);
    if (norm == 0.0)
        return {0.0, true};
    for (double& xi : x)
        xi /= norm;

    double rayleigh = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        Vector ax = matvec(a, x);
        const double next = dot(x, ax);
        const double ax_norm = norm2(ax);
        if (ax_norm == 0.0)
            return {0.0, true};
        double residual = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = ax[i] - next * x[i];
            residual += r * r;
        }
        residual = std::sqrt(residual);
        const double magnitude = std::max(std::abs(next), std::numeric_limits<double>::min());
        if (it > 0 && std::abs(next - rayleigh) <= tol * magnitude &&
            residual <= std::sqrt(tol) * magnitude)
            return {next, true};
        if (residual <= 1e-14 * magnitude)
            return {next, true};
        rayleigh = next;
        for (std::size_t i = 0; i < x.size(); ++i)
            x[i] = ax[i] / ax_norm;
    }
    return {rayleigh, false};
}

} // namespace

double max_eigenvalue(const Matrix& a, double tol)
{
    require_symmetric(a, "max_eigenvalue");
    if (!(tol > 0.0))
        throw DomainError("max_eigenvalue: tolerance must be positive");
    const std::size_t n = a.rows();
    if (n == 0)
        return 0.0;

    Vector ones(n, 1.0);
    Vector scrambled(n);
    Rng rng(0x5eed5eedULL);
    for (double& v : scrambled)
        v = rng.uniform() - 0.5;

    const PowerResult first = power_iterate(a, ones, tol);
    const PowerResult second = power_iterate(a, scrambled, tol);
    if (!first.converged && !second.converged)
        throw ConvergenceError("max_eigenvalue: power iteration did not converge");

    const double lambda = std::max(first.converged ? first.rayleigh : second.rayleigh,
                                   second.converged ? second.rayleigh : first.rayleigh);
    const double negative_floor = -std::sqrt(tol) * std::max(1.0, max_abs(a));
    if (first.rayleigh < negative_floor || second.rayleigh < negative_floor)
        throw DomainError("max_eigenvalue: matrix is indefinite (negative Rayleigh quotient)");
    return std::max(lambda, 0.0);
}

namespace {

// Lower-triangular Cholesky factor. Throws on a non-positive pivot.
Matrix cholesky(const Matrix& a)
{
    require_symmetric(a, "solve_spd");
    const std::size_t n = a.rows();
    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        max_diag = std::max(max_diag, std::abs(a(i, i)));
    const double pivot_floor = 1e-14 * max_diag;

    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k)
            d -= l(j, k) * l(j, k);
        if (!(d > pivot_floor))
            throw SingularityError("solve_spd: non-positive pivot at index " + std::to_string(j) +
                                       " (matrix is singular or not positive definite)",
                                   j);
        const double root = std::sqrt(d);
        l(j, j) = root;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k)
                s -= l(i, k) * l(j, k);
            l(i, j) = s / root;
        }
    }
    return l;
}

Vector cholesky_solve(const Matrix& l, std::span<const double> b)
{
    const std::size_t n = l.rows();
    Vector y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k)
            s -= l(i, k) * y[k];
        y[i] = s / l(i, i);
    }
    Vector x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k)
            s -= l(k, ii) * x[k];
        x[ii] = s / l(ii, ii);
    }
    return x;
}

} // namespace

Vector solve_spd(const Matrix& a, std::span<const double> b)
{
    require_same_size(a.rows(), b.size(), "solve_spd");
    return cholesky_solve(cholesky(a), b);
}

Matrix solve_spd(const Matrix& a, const Matrix& b)
{
    if (a.rows() != b.rows())
        throw ShapeError("solve_spd: right-hand side has wrong row count");
    const Matrix l = cholesky(a);
    Matrix x(b.rows(), b.cols());
    for (std::size_t c = 0; c < b.cols(); ++c) {
        Vector col = cholesky_solve(l, b.column(c));
        for (std::size_t r = 0; r < b.rows(); ++r)
            x(r, c) = col[r];
    }
    return x;
}

double condition_number(const Matrix& a)
{
    const SymmetricEvd evd = sym_evd(a);
    if (evd.eigenvalues.empty())
        return std::numeric_limits<double>::infinity();
    const double lmax = evd.eigenvalues.front();
    const double lmin = evd.eigenvalues.back();
    if (!(lmax > 0.0) || lmin <= rank_tolerance * lmax)
        return std::numeric_limits<double>::infinity();
    return lmax / lmin;
}

} // namespace erm
