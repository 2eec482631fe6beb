#pragma once

// Oracles and generators shared by the unit tests. Nothing here calls the
// library routine it is used to check.

#include "erm/data.hpp"
#include "erm/numerics.hpp"
#include "erm/rng.hpp"

#include "json.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>

namespace test_support {

using erm::Matrix;
using erm::Vector;

inline Matrix random_matrix(std::size_t rows, std::size_t cols, erm::Rng& rng)
{
    Matrix a(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            a(r, c) = rng.normal();
    return a;
}

inline Vector random_vector(std::size_t n, erm::Rng& rng)
{
    Vector v(n);
    for (double& x : v)
        x = rng.normal();
    return v;
}

// BᵀB + shift·I, built with explicit loops.
inline Matrix random_spd(std::size_t n, erm::Rng& rng, double shift = 0.1)
{
    const Matrix b = random_matrix(n + 2, n, rng);
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < b.rows(); ++k)
                s += b(k, i) * b(k, j);
            a(i, j) = s + (i == j ? shift : 0.0);
        }
    return a;
}

// Determinant by cofactor expansion along the first row.
inline double cofactor_det(const Matrix& a)
{
    const std::size_t n = a.rows();
    if (n == 1)
        return a(0, 0);
    double det = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
        Matrix minor(n - 1, n - 1);
        for (std::size_t r = 1; r < n; ++r) {
            std::size_t cc = 0;
            for (std::size_t k = 0; k < n; ++k) {
                if (k == c)
                    continue;
                minor(r - 1, cc++) = a(r, k);
            }
        }
        det += (c % 2 == 0 ? 1.0 : -1.0) * a(0, c) * cofactor_det(minor);
    }
    return det;
}

inline Vector naive_matvec(const Matrix& a, const Vector& x)
{
    Vector y(a.rows(), 0.0);
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c)
            y[r] += a(r, c) * x[c];
    return y;
}

inline double inf_norm_diff(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size())
        return std::numeric_limits<double>::infinity();
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Central differences of f at w with step h.
inline Vector finite_difference_gradient(const std::function<double(const Vector&)>& f,
                                         const Vector& w, double h = 1e-6)
{
    Vector g(w.size());
    for (std::size_t j = 0; j < w.size(); ++j) {
        Vector plus = w;
        Vector minus = w;
        plus[j] += h;
        minus[j] -= h;
        g[j] = (f(plus) - f(minus)) / (2.0 * h);
    }
    return g;
}

// Labeled dataset with standard normal features and labels y = wᵀx + noise.
inline erm::LabeledDataset random_regression(std::size_t m, std::size_t n, erm::Rng& rng,
                                             double noise = 0.1)
{
    const Matrix x = random_matrix(m, n, rng);
    const Vector w = random_vector(n, rng);
    Vector y = naive_matvec(x, w);
    for (double& v : y)
        v += noise * rng.normal();
    return erm::make_dataset(x, y, erm::LabelKind::real);
}

// Binary labels from a random linear rule with some label noise.
inline erm::LabeledDataset random_classification(std::size_t m, std::size_t n, erm::Rng& rng,
                                                 double flip = 0.1)
{
    const Matrix x = random_matrix(m, n, rng);
    const Vector w = random_vector(n, rng);
    Vector y = naive_matvec(x, w);
    for (double& v : y) {
        v = v >= 0.0 ? 1.0 : -1.0;
        if (rng.uniform() < flip)
            v = -v;
    }
    return erm::make_dataset(x, y, erm::LabelKind::binary);
}

inline bool nlohmann_json_ok(const std::string& text)
{
    return nlohmann::json::accept(text);
}

} // namespace test_support
