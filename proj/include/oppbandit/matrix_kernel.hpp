#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace oppbandit {

using Vector = std::vector<double>;

// Dense row-major square-ish matrix sized for small-dimension ridge states.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n, double scale = 1.0) {
        Matrix m(n, n, 0.0);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = scale;
        return m;
    }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    const std::vector<double>& data() const { return data_; }

    bool operator==(const Matrix& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
Vector matvec(const Matrix& m, std::span<const double> x);
Matrix matmul(const Matrix& a, const Matrix& b);

// x^T M x for square M.
double quadratic_form(const Matrix& m, std::span<const double> x);

// max |(A*B)_{ij} - I_{ij}| without materializing the product.
double max_abs_product_identity_gap(const Matrix& a, const Matrix& b);

// Cholesky-based primitives for symmetric positive-definite matrices.
// All throw std::invalid_argument when the input is not usable.
Matrix cholesky_factor(const Matrix& spd);          // lower-triangular L, A = L L^T
Matrix cholesky_inverse(const Matrix& spd);
Vector cholesky_solve(const Matrix& spd, std::span<const double> rhs);
double cholesky_log_det(const Matrix& spd);

inline constexpr std::uint64_t kDefaultRefactorPeriod = 1024;

// Positive-definite design matrix A plus its maintained inverse. The inverse
// is advanced with the rank-one inverse-update identity and recomputed from A
// by direct factorization every refactor_period updates to bound drift.
struct PdState {
    std::size_t dim = 0;
    Matrix a_matrix;
    Matrix a_inverse;
    std::uint64_t update_count = 0;
    std::uint64_t refactor_period = kDefaultRefactorPeriod;
};

PdState pd_init(std::size_t dim, double regularizer);
void rank_one_update(PdState& state, std::span<const double> x);

// ||x||_{A^{-1}} = sqrt(x^T A^{-1} x); tiny negative round-off is clamped.
double weighted_norm(const PdState& state, std::span<const double> x);

struct RidgeState {
    Vector b_vector;
    Vector theta_hat;
};

RidgeState ridge_init(std::size_t dim);

// theta = A^{-1} b using the maintained inverse.
Vector ridge_solve(const PdState& pd, const RidgeState& ridge);

// One ridge-regression step: A += x x^T, b += reward * x, theta refreshed.
void ridge_observe(PdState& pd, RidgeState& ridge, std::span<const double> x, double reward);

}  // namespace oppbandit
