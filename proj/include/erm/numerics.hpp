#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace erm {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);
    static Matrix diagonal(std::span<const double> values);
    static Matrix from_rows(const std::vector<Vector>& rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return entries_.empty(); }
    bool is_square() const noexcept { return rows_ == cols_; }

    double& operator()(std::size_t r, std::size_t c) { return entries_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return entries_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {entries_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {entries_.data() + r * cols_, cols_}; }
    Vector column(std::size_t c) const;

    const std::vector<double>& entries() const noexcept { return entries_; }

    Matrix transpose() const;
    double trace() const;

    /// Keep the listed rows, in order.
    Matrix select_rows(std::span<const std::size_t> indices) const;
    /// Keep the first `count` columns.
    Matrix leading_columns(std::size_t count) const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> entries_;
};

// Basic vector algebra. All functions throw ShapeError on size mismatch.
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double squared_distance(std::span<const double> a, std::span<const double> b);
double max_abs(std::span<const double> a);
Vector subtract(std::span<const double> a, std::span<const double> b);
Vector add(std::span<const double> a, std::span<const double> b);
Vector scale(std::span<const double> a, double factor);

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix add(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double factor);
Matrix add_identity(const Matrix& a, double shift);
Vector matvec(const Matrix& a, std::span<const double> x);
/// aᵀ·y without forming the transpose.
Vector transpose_matvec(const Matrix& a, std::span<const double> y);
/// aᵀ·a, exactly symmetric.
Matrix gram(const Matrix& a);
double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);
bool all_finite(const Matrix& a);
bool all_finite(std::span<const double> a);

/// Symmetric within `rel_tol` of the largest entry magnitude.
bool is_symmetric(const Matrix& a, double rel_tol = 1e-12);

struct SymmetricEvd {
    Vector eigenvalues;  ///< descending
    Matrix eigenvectors; ///< column i pairs with eigenvalues[i]
};

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Eigenvalues are sorted in descending order. Each eigenvector is signed so
/// that its first clearly nonzero component is positive, which makes results
/// deterministic; within a repeated eigenvalue any orthonormal basis may come
/// back.
///
/// Throws ShapeError for non-square or asymmetric input and ConvergenceError
/// if the off-diagonal mass does not vanish within the sweep cap.
SymmetricEvd sym_evd(const Matrix& a);

/// Largest eigenvalue of a symmetric psd matrix by power iteration.
///
/// Iterates from the all-ones vector and from a fixed pseudo-random vector and
/// keeps the larger Rayleigh quotient, so a start vector that happens to be
/// orthogonal to the top eigenvector cannot mislead the result. Throws
/// DomainError when a negative Rayleigh quotient reveals an indefinite input.
double max_eigenvalue(const Matrix& a, double tol = 1e-10);

/// Solve a·x = b for symmetric positive-definite a (Cholesky).
/// Throws SingularityError carrying the index of the first non-positive pivot.
Vector solve_spd(const Matrix& a, std::span<const double> b);

/// Solve a·X = B column by column for SPD a.
Matrix solve_spd(const Matrix& a, const Matrix& b);

/// Relative threshold below which the smallest eigenvalue counts as zero.
inline constexpr double rank_tolerance = 1e-10;

/// λmax/λmin for a symmetric psd matrix, or +infinity when λmin is at or
/// below rank_tolerance·λmax.
double condition_number(const Matrix& a);

} // namespace erm
