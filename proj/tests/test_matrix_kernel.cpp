#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "oppbandit/matrix_kernel.hpp"
#include "oppbandit/rng.hpp"
#include "oracles.hpp"

using namespace oppbandit;

namespace {

Vector random_unit(std::size_t dim, Rng& rng) {
    Vector v(dim, 0.0);
    double norm_sq = 0.0;
    for (auto& x : v) {
        x = rng.normal();
        norm_sq += x * x;
    }
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (auto& x : v) x *= inv;
    return v;
}

}  // namespace

TEST_CASE("pd_init builds scaled identity and its reciprocal") {
    const PdState id2 = pd_init(2, 1.0);
    CHECK(id2.a_matrix == Matrix::identity(2));
    CHECK(id2.a_inverse == Matrix::identity(2));
    CHECK(id2.update_count == 0);

    const PdState scalar = pd_init(1, 4.0);
    CHECK(scalar.a_matrix(0, 0) == 4.0);
    CHECK(scalar.a_inverse(0, 0) == 0.25);

    // With a unit regularizer in d=6 the smallest eigenvalue is 1: quadratic
    // forms of unit vectors cannot fall below it.
    const PdState d6 = pd_init(6, 1.0);
    Rng rng(7);
    for (int i = 0; i < 50; ++i) {
        const Vector u = random_unit(6, rng);
        CHECK(quadratic_form(d6.a_matrix, u) == doctest::Approx(1.0));
    }
}

TEST_CASE("pd_init rejects bad arguments") {
    CHECK_THROWS_AS(pd_init(0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(pd_init(3, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(pd_init(3, -2.0), std::invalid_argument);
}

TEST_CASE("rank_one_update scalar and axis-aligned cases") {
    PdState s = pd_init(1, 1.0);
    rank_one_update(s, Vector{1.0});
    CHECK(s.a_matrix(0, 0) == 2.0);
    CHECK(s.a_inverse(0, 0) == doctest::Approx(0.5).epsilon(1e-14));

    PdState t = pd_init(2, 1.0);
    rank_one_update(t, Vector{1.0, 0.0});
    CHECK(t.a_matrix(0, 0) == 2.0);
    CHECK(t.a_matrix(0, 1) == 0.0);
    CHECK(t.a_matrix(1, 1) == 1.0);
    CHECK(t.a_inverse(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(t.a_inverse(1, 1) == doctest::Approx(1.0).epsilon(1e-14));

    CHECK_THROWS_AS(rank_one_update(t, Vector{1.0}), std::invalid_argument);
}

TEST_CASE("maintained inverse tracks the direct inversion oracle") {
    PdState state = pd_init(6, 1.0);
    Rng rng(11);
    for (int i = 0; i < 100; ++i) {
        rank_one_update(state, random_unit(6, rng));
    }
    const Matrix oracle = oracles::gauss_jordan_inverse(state.a_matrix);
    CHECK(oracles::max_abs_diff(state.a_inverse, oracle) <= 1e-8);
    CHECK(max_abs_product_identity_gap(state.a_matrix, state.a_inverse) <= 1e-8);
}

TEST_CASE("inverse consistency holds across refactorization boundaries") {
    PdState state = pd_init(4, 1.0);
    state.refactor_period = 64;
    Rng rng(13);
    for (int i = 0; i < 3000; ++i) {
        rank_one_update(state, random_unit(4, rng));
        if (i % 500 == 0) {
            CHECK(max_abs_product_identity_gap(state.a_matrix, state.a_inverse) <= 1e-8);
        }
    }
    CHECK(max_abs_product_identity_gap(state.a_matrix, state.a_inverse) <= 1e-8);
    CHECK(oracles::max_abs_diff(state.a_inverse,
                                oracles::gauss_jordan_inverse(state.a_matrix)) <= 1e-8);
}

TEST_CASE("a_matrix stays symmetric") {
    PdState state = pd_init(5, 2.0);
    Rng rng(17);
    for (int i = 0; i < 500; ++i) rank_one_update(state, random_unit(5, rng));
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = 0; j < 5; ++j) {
            CHECK(std::abs(state.a_matrix(i, j) - state.a_matrix(j, i)) <= 1e-10);
        }
    }
}

TEST_CASE("weighted_norm basics") {
    const PdState id2 = pd_init(2, 1.0);
    CHECK(weighted_norm(id2, Vector{3.0, 4.0}) == doctest::Approx(5.0));
    CHECK(weighted_norm(id2, Vector{0.0, 0.0}) == 0.0);

    const PdState s = pd_init(1, 4.0);
    CHECK(weighted_norm(s, Vector{2.0}) == doctest::Approx(1.0));

    CHECK_THROWS_AS(weighted_norm(id2, Vector{1.0}), std::invalid_argument);
}

TEST_CASE("repeated direction obeys the d/m width cap") {
    Rng rng(19);
    const std::size_t d = 6;
    const Vector u = random_unit(d, rng);
    PdState state = pd_init(d, 1.0);
    int pulls_of_u = 0;
    for (int i = 1; i <= 400; ++i) {
        if (i % 3 == 0) {
            rank_one_update(state, random_unit(d, rng));
        } else {
            rank_one_update(state, u);
            ++pulls_of_u;
        }
        const double cap = std::sqrt(static_cast<double>(d) / pulls_of_u);
        CHECK(weighted_norm(state, u) <= cap + 1e-12);
    }
}

TEST_CASE("width never grows under updates") {
    Rng rng(23);
    const std::size_t d = 5;
    PdState state = pd_init(d, 1.0);
    const Vector probe = random_unit(d, rng);
    double previous = weighted_norm(state, probe);
    for (int i = 0; i < 300; ++i) {
        Vector v = random_unit(d, rng);
        for (auto& x : v) x *= rng.uniform(0.1, 1.0);
        rank_one_update(state, v);
        const double now = weighted_norm(state, probe);
        CHECK(now <= previous + 1e-12);
        previous = now;
    }
}

TEST_CASE("log-determinant growth stays under the volume cap") {
    Rng rng(29);
    const std::size_t d = 6;
    PdState state = pd_init(d, 1.0);
    const int horizon = 2000;
    for (int i = 0; i < horizon; ++i) rank_one_update(state, random_unit(d, rng));
    const double log_det = cholesky_log_det(state.a_matrix);
    const double cap =
        d * std::log((static_cast<double>(d) + horizon * 1.0) / static_cast<double>(d));
    CHECK(log_det <= cap + 1e-9);
}

TEST_CASE("ridge_solve matches the direct least-squares oracle") {
    SUBCASE("zero response gives zero estimate") {
        PdState pd = pd_init(3, 1.0);
        RidgeState ridge = ridge_init(3);
        Rng rng(31);
        for (int i = 0; i < 10; ++i) rank_one_update(pd, random_unit(3, rng));
        const Vector theta = ridge_solve(pd, ridge);
        for (double v : theta) CHECK(v == 0.0);
    }

    SUBCASE("single observation closed form") {
        PdState pd = pd_init(1, 1.0);
        RidgeState ridge = ridge_init(1);
        ridge_observe(pd, ridge, Vector{1.0}, 1.0);
        CHECK(pd.a_matrix(0, 0) == 2.0);
        CHECK(ridge.b_vector[0] == 1.0);
        CHECK(ridge.theta_hat[0] == doctest::Approx(0.5).epsilon(1e-14));
    }

    SUBCASE("50 random observations in d=6") {
        const std::size_t d = 6;
        PdState pd = pd_init(d, 1.0);
        RidgeState ridge = ridge_init(d);
        Rng rng(37);
        std::vector<std::pair<Vector, double>> observations;
        for (int i = 0; i < 50; ++i) {
            Vector x = random_unit(d, rng);
            const double r = rng.normal();
            observations.emplace_back(x, r);
            ridge_observe(pd, ridge, x, r);
        }
        const Vector oracle = oracles::direct_ridge_solve(observations, d, 1.0);
        CHECK(oracles::relative_error(ridge.theta_hat, oracle) <= 1e-8);
        CHECK(oracles::relative_error(ridge_solve(pd, ridge), oracle) <= 1e-8);
    }
}

TEST_CASE("non-unit regularizer flows through the solve") {
    const std::size_t d = 4;
    PdState pd = pd_init(d, 3.0);
    RidgeState ridge = ridge_init(d);
    Rng rng(41);
    std::vector<std::pair<Vector, double>> observations;
    for (int i = 0; i < 25; ++i) {
        Vector x = random_unit(d, rng);
        const double r = rng.uniform(-1.0, 1.0);
        observations.emplace_back(x, r);
        ridge_observe(pd, ridge, x, r);
    }
    const Vector oracle = oracles::direct_ridge_solve(observations, d, 3.0);
    CHECK(oracles::relative_error(ridge.theta_hat, oracle) <= 1e-8);
}
