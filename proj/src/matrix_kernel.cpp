#include "oppbandit/matrix_kernel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace oppbandit {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), "dot: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

Vector matvec(const Matrix& m, std::span<const double> x) {
    require(m.cols() == x.size(), "matvec: dimension mismatch");
    Vector y(m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) y[i] = dot(m.row(i), x);
    return y;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    require(a.cols() == b.rows(), "matmul: dimension mismatch");
    Matrix c(a.rows(), b.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    }
    return c;
}

double quadratic_form(const Matrix& m, std::span<const double> x) {
    require(m.rows() == m.cols() && m.rows() == x.size(), "quadratic_form: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) s += x[i] * dot(m.row(i), x);
    return s;
}

double max_abs_product_identity_gap(const Matrix& a, const Matrix& b) {
    require(a.cols() == b.rows() && a.rows() == b.cols(), "product gap: dimension mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            const double target = (i == j) ? 1.0 : 0.0;
            worst = std::max(worst, std::abs(s - target));
        }
    }
    return worst;
}

Matrix cholesky_factor(const Matrix& spd) {
    require(spd.rows() == spd.cols(), "cholesky: matrix not square");
    const std::size_t n = spd.rows();
    Matrix l(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = spd(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            if (i == j) {
                require(s > 0.0, "cholesky: matrix not positive definite");
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    return l;
}

namespace {

// Solves L L^T x = rhs given the lower factor.
Vector solve_with_factor(const Matrix& l, std::span<const double> rhs) {
    const std::size_t n = l.rows();
    Vector y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = rhs[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
        y[i] = s / l(i, i);
    }
    Vector x(n, 0.0);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
        x[ii] = s / l(ii, ii);
    }
    return x;
}

}  // namespace

Matrix cholesky_inverse(const Matrix& spd) {
    const Matrix l = cholesky_factor(spd);
    const std::size_t n = spd.rows();
    Matrix inv(n, n, 0.0);
    Vector e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        Vector col = solve_with_factor(l, e);
        for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
        e[j] = 0.0;
    }
    // Symmetrize to wash out asymmetric round-off.
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double v = 0.5 * (inv(i, j) + inv(j, i));
            inv(i, j) = v;
            inv(j, i) = v;
        }
    }
    return inv;
}

Vector cholesky_solve(const Matrix& spd, std::span<const double> rhs) {
    require(spd.rows() == rhs.size(), "cholesky_solve: dimension mismatch");
    return solve_with_factor(cholesky_factor(spd), rhs);
}

double cholesky_log_det(const Matrix& spd) {
    const Matrix l = cholesky_factor(spd);
    double s = 0.0;
    for (std::size_t i = 0; i < spd.rows(); ++i) s += std::log(l(i, i));
    return 2.0 * s;
}

PdState pd_init(std::size_t dim, double regularizer) {
    require(dim >= 1, "pd_init: dim must be positive");
    require(regularizer > 0.0 && std::isfinite(regularizer),
            "pd_init: regularizer must be positive");
    PdState state;
    state.dim = dim;
    state.a_matrix = Matrix::identity(dim, regularizer);
    state.a_inverse = Matrix::identity(dim, 1.0 / regularizer);
    state.update_count = 0;
    return state;
}

void rank_one_update(PdState& state, std::span<const double> x) {
    require(x.size() == state.dim, "rank_one_update: dimension mismatch");
    const std::size_t n = state.dim;

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) state.a_matrix(i, j) += x[i] * x[j];

    ++state.update_count;
    if (state.refactor_period > 0 && state.update_count % state.refactor_period == 0) {
        state.a_inverse = cholesky_inverse(state.a_matrix);
        return;
    }

    // (A + x x^T)^{-1} = A^{-1} - (A^{-1} x)(A^{-1} x)^T / (1 + x^T A^{-1} x)
    const Vector v = matvec(state.a_inverse, x);
    const double denom = 1.0 + dot(v, x);
    for (std::size_t i = 0; i < n; ++i) {
        const double vi = v[i] / denom;
        for (std::size_t j = 0; j < n; ++j) state.a_inverse(i, j) -= vi * v[j];
    }
}

double weighted_norm(const PdState& state, std::span<const double> x) {
    require(x.size() == state.dim, "weighted_norm: dimension mismatch");
    const double q = quadratic_form(state.a_inverse, x);
    return std::sqrt(std::max(0.0, q));
}

RidgeState ridge_init(std::size_t dim) {
    return RidgeState{Vector(dim, 0.0), Vector(dim, 0.0)};
}

Vector ridge_solve(const PdState& pd, const RidgeState& ridge) {
    require(ridge.b_vector.size() == pd.dim, "ridge_solve: dimension mismatch");
    return matvec(pd.a_inverse, ridge.b_vector);
}

void ridge_observe(PdState& pd, RidgeState& ridge, std::span<const double> x, double reward) {
    require(x.size() == pd.dim && ridge.b_vector.size() == pd.dim,
            "ridge_observe: dimension mismatch");
    rank_one_update(pd, x);
    for (std::size_t i = 0; i < pd.dim; ++i) ridge.b_vector[i] += reward * x[i];
    ridge.theta_hat = ridge_solve(pd, ridge);
}

}  // namespace oppbandit
