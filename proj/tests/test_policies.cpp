#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "oppbandit/policies.hpp"
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

DecisionRound make_round(std::uint64_t slot, std::vector<ArmContext> arms, double variation) {
    DecisionRound round;
    round.slot = slot;
    round.arms = std::move(arms);
    round.variation_factor = variation;
    return round;
}

LinearPolicyOptions options_for(LinearMode mode, std::size_t dim, double alpha = 1.5,
                                ParameterModel model = ParameterModel::joint) {
    LinearPolicyOptions o;
    o.mode = mode;
    o.model = model;
    o.dim = dim;
    o.alpha = alpha;
    o.thresholds = {0.0, 1.0};
    return o;
}

}  // namespace

TEST_CASE("normalize_variation: interpolation, clamping, single threshold") {
    const ThresholdConfig wide{0.2, 0.8};
    CHECK(normalize_variation(0.5, wide) == doctest::Approx(0.5));
    CHECK(normalize_variation(0.1, wide) == 0.0);
    CHECK(normalize_variation(0.9, wide) == 1.0);

    const ThresholdConfig single{0.45, 0.45};
    CHECK(normalize_variation(0.45, single) == 0.0);
    CHECK(normalize_variation(0.4500001, single) == 1.0);
    CHECK(normalize_variation(0.2, single) == 0.0);

    CHECK_THROWS_AS(normalize_variation(0.5, ThresholdConfig{0.8, 0.2}), std::invalid_argument);
}

TEST_CASE("adalinucb_index endpoints and hand-evaluated midpoint") {
    PdState pd = pd_init(2, 1.0);
    RidgeState ridge = ridge_init(2);

    // theta = 0, A = I, unit context: index is the pure width term.
    CHECK(adalinucb_index(pd, ridge, 1.5, Vector{1.0, 0.0}, 0.0) == doctest::Approx(1.5));

    // l_tilde = 1 collapses to the greedy estimate for any state.
    ridge.theta_hat = Vector{0.3, -0.4};
    CHECK(adalinucb_index(pd, ridge, 1.5, Vector{0.5, 0.5}, 1.0) ==
          doctest::Approx(0.3 * 0.5 - 0.4 * 0.5));

    // theta = [1,0], A = I2, alpha = 1.5, x = [.6,.8], l_tilde = .75:
    // 0.6 + 1.5 * sqrt(.25) * 1 = 1.35
    ridge.theta_hat = Vector{1.0, 0.0};
    CHECK(adalinucb_index(pd, ridge, 1.5, Vector{0.6, 0.8}, 0.75) == doctest::Approx(1.35));

    CHECK_THROWS_AS(adalinucb_index(pd, ridge, 1.5, Vector{1.0}, 0.0), std::invalid_argument);
}

TEST_CASE("select_arm breaks ties by smallest arm id") {
    LinearPolicy policy(options_for(LinearMode::adaptive, 3));
    const Vector x{0.6, 0.8, 0.0};
    const auto round = make_round(1, {{7, x}, {2, x}, {9, x}}, 0.0);
    CHECK(policy.select_arm(round) == 2);

    CHECK_THROWS_AS(policy.select_arm(make_round(2, {}, 0.0)), std::invalid_argument);
}

TEST_CASE("adaptive at l_tilde=0 selects exactly as extracted; at 1 it is greedy") {
    Rng rng(101);
    const std::size_t d = 6;
    for (int trial = 0; trial < 300; ++trial) {
        LinearPolicy adaptive(options_for(LinearMode::adaptive, d, 1.5));
        LinearPolicy extracted(options_for(LinearMode::extracted, d, 1.5));

        // Shared training history.
        const int warmup = static_cast<int>(rng.uniform_index(30));
        for (int i = 0; i < warmup; ++i) {
            const Vector x = random_unit(d, rng);
            const double reward = rng.normal();
            const auto round = make_round(static_cast<std::uint64_t>(i), {{0, x}}, 0.3);
            adaptive.update(round, 0, reward);
            extracted.update(round, 0, reward);
        }

        std::vector<ArmContext> arms;
        const std::size_t num_arms = 2 + rng.uniform_index(10);
        for (std::size_t a = 0; a < num_arms; ++a) {
            arms.push_back({static_cast<ArmId>(3 * a + 1), random_unit(d, rng)});
        }
        if (rng.uniform() < 0.3) arms[1].context = arms[0].context;

        // L below the lower threshold: adaptive width equals the plain UCB width.
        const auto low_round = make_round(1000, arms, -1.0);
        CHECK(adaptive.select_arm(low_round) == extracted.select_arm(low_round));

        // L above the upper threshold: pure exploitation.
        const auto high_round = make_round(1001, arms, 2.0);
        const ArmId greedy = adaptive.select_arm(high_round);
        ArmId expected = arms.front().id;
        double best = -1e300;
        for (const auto& arm : arms) {
            const double estimate = dot(adaptive.ridge_state().theta_hat, arm.context);
            if (estimate > best || (estimate == best && arm.id < expected)) {
                best = estimate;
                expected = arm.id;
            }
        }
        CHECK(greedy == expected);
    }
}

TEST_CASE("index is nonincreasing in l_tilde and preserves equal-width gaps") {
    Rng rng(103);
    const std::size_t d = 4;
    PdState pd = pd_init(d, 1.0);
    RidgeState ridge = ridge_init(d);
    for (int i = 0; i < 15; ++i) {
        const Vector x = random_unit(d, rng);
        rank_one_update(pd, x);
        for (std::size_t k = 0; k < d; ++k) ridge.b_vector[k] += 0.5 * x[k];
    }
    ridge.theta_hat = ridge_solve(pd, ridge);

    const Vector probe = random_unit(d, rng);
    double previous = adalinucb_index(pd, ridge, 1.5, probe, 0.0);
    for (double l = 0.1; l <= 1.0; l += 0.1) {
        const double now = adalinucb_index(pd, ridge, 1.5, probe, l);
        CHECK(now <= previous + 1e-12);
        previous = now;
    }

    // Two probes with identical width: the index gap equals the estimate gap
    // at every l_tilde.
    Vector flipped = probe;
    for (auto& v : flipped) v = -v;
    for (double l : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const double gap = adalinucb_index(pd, ridge, 1.5, probe, l) -
                           adalinucb_index(pd, ridge, 1.5, flipped, l);
        const double estimate_gap =
            dot(ridge.theta_hat, probe) - dot(ridge.theta_hat, flipped);
        CHECK(gap == doctest::Approx(estimate_gap).epsilon(1e-12));
    }
}

TEST_CASE("update performs the scalar ridge step") {
    LinearPolicy policy(options_for(LinearMode::adaptive, 1));
    const auto round = make_round(1, {{0, Vector{1.0}}}, 0.0);
    policy.update(round, 0, 1.0);
    CHECK(policy.pd_state().a_matrix(0, 0) == 2.0);
    CHECK(policy.ridge_state().b_vector[0] == 1.0);
    CHECK(policy.ridge_state().theta_hat[0] == doctest::Approx(0.5).epsilon(1e-14));

    CHECK_THROWS_AS(policy.update(round, 42, 1.0), std::invalid_argument);
}

TEST_CASE("disjoint update touches only the chosen arm") {
    LinearPolicy policy(
        options_for(LinearMode::adaptive, 2, 1.5, ParameterModel::disjoint));
    Rng rng(107);
    const auto warm = make_round(1, {{3, random_unit(2, rng)}, {5, random_unit(2, rng)}}, 0.2);
    policy.update(warm, 5, 0.7);

    const Matrix a5 = policy.pd_state(5).a_matrix;
    const Vector b5 = policy.ridge_state(5).b_vector;

    const auto round = make_round(2, {{3, random_unit(2, rng)}, {5, random_unit(2, rng)}}, 0.2);
    policy.update(round, 3, -0.4);

    CHECK(policy.pd_state(5).a_matrix == a5);
    CHECK(policy.ridge_state(5).b_vector == b5);
    CHECK(policy.pd_state(3).update_count == 1);
}

TEST_CASE("every linear mode regresses onto its effective history") {
    Rng rng(109);
    const std::size_t d = 5;

    const auto check_mode = [&](LinearMode mode, ParameterModel model) {
        LinearPolicy policy(options_for(mode, d, 1.5, model));
        std::map<ArmId, std::vector<std::pair<Vector, double>>> histories;
        for (int i = 0; i < 40; ++i) {
            std::vector<ArmContext> arms{{0, random_unit(d, rng)}, {1, random_unit(d, rng)}};
            const double variation = rng.uniform();
            const auto round = make_round(static_cast<std::uint64_t>(i), arms, variation);
            const ArmId chosen = policy.select_arm(round);
            const double reward = rng.normal(0.2, 0.5);
            policy.update(round, chosen, reward);

            const Vector& raw = arms[static_cast<std::size_t>(chosen)].context;
            Vector effective;
            double effective_reward = reward;
            switch (mode) {
                case LinearMode::multiply:
                    effective = raw;
                    for (auto& v : effective) v *= variation;
                    effective_reward = variation * reward;
                    break;
                case LinearMode::combine:
                    effective.push_back(variation);
                    effective.insert(effective.end(), raw.begin(), raw.end());
                    break;
                default:
                    effective = raw;
                    break;
            }
            const ArmId key = model == ParameterModel::joint ? 0 : chosen;
            histories[key].emplace_back(effective, effective_reward);
        }
        const std::size_t state_dim = mode == LinearMode::combine ? d + 1 : d;
        for (const auto& [key, history] : histories) {
            const Vector oracle = oracles::direct_ridge_solve(history, state_dim, 1.0);
            const Vector theta = model == ParameterModel::joint
                                     ? policy.ridge_state().theta_hat
                                     : policy.ridge_state(key).theta_hat;
            CHECK(oracles::relative_error(theta, oracle) <= 1e-8);
        }
    };

    check_mode(LinearMode::adaptive, ParameterModel::joint);
    check_mode(LinearMode::extracted, ParameterModel::joint);
    check_mode(LinearMode::multiply, ParameterModel::joint);
    check_mode(LinearMode::combine, ParameterModel::joint);
    check_mode(LinearMode::adaptive, ParameterModel::disjoint);
}

TEST_CASE("extracted state is unchanged by the variation factors it saw") {
    Rng rng(113);
    const std::size_t d = 3;
    LinearPolicy with_factors(options_for(LinearMode::extracted, d));
    LinearPolicy without_factors(options_for(LinearMode::extracted, d));
    for (int i = 0; i < 60; ++i) {
        std::vector<ArmContext> arms{{0, random_unit(d, rng)}, {1, random_unit(d, rng)}};
        const auto round_a = make_round(static_cast<std::uint64_t>(i), arms, rng.uniform());
        const auto round_b = make_round(static_cast<std::uint64_t>(i), arms, 0.0);
        const ArmId pick_a = with_factors.select_arm(round_a);
        const ArmId pick_b = without_factors.select_arm(round_b);
        CHECK(pick_a == pick_b);
        const double reward = rng.normal();
        with_factors.update(round_a, pick_a, reward);
        without_factors.update(round_b, pick_b, reward);
    }
    CHECK(with_factors.pd_state().a_matrix == without_factors.pd_state().a_matrix);
    CHECK(with_factors.ridge_state().b_vector == without_factors.ridge_state().b_vector);
}

TEST_CASE("a disjoint problem maps blockwise onto an equivalent joint one") {
    Rng rng(127);
    const std::size_t d = 2;
    const std::size_t num_arms = 3;

    LinearPolicy disjoint(options_for(LinearMode::adaptive, d, 1.5, ParameterModel::disjoint));
    LinearPolicy joint(options_for(LinearMode::adaptive, d * num_arms, 1.5));

    const auto block_context = [&](ArmId arm, const Vector& x) {
        Vector big(d * num_arms, 0.0);
        for (std::size_t k = 0; k < d; ++k) big[static_cast<std::size_t>(arm) * d + k] = x[k];
        return big;
    };

    for (int i = 0; i < 40; ++i) {
        std::vector<ArmContext> small_arms;
        std::vector<ArmContext> big_arms;
        for (std::size_t a = 0; a < num_arms; ++a) {
            const Vector x = random_unit(d, rng);
            small_arms.push_back({static_cast<ArmId>(a), x});
            big_arms.push_back({static_cast<ArmId>(a), block_context(static_cast<ArmId>(a), x)});
        }
        const double variation = rng.uniform();
        const double l_tilde = normalize_variation(variation, ThresholdConfig{0.0, 1.0});

        for (std::size_t a = 0; a < num_arms; ++a) {
            const ArmId id = static_cast<ArmId>(a);
            const double index_disjoint = adalinucb_index(
                disjoint.pd_state(id), disjoint.ridge_state(id), 1.5, small_arms[a].context,
                l_tilde);
            const double index_joint = adalinucb_index(joint.pd_state(), joint.ridge_state(),
                                                       1.5, big_arms[a].context, l_tilde);
            CHECK(index_disjoint == doctest::Approx(index_joint).epsilon(1e-9));
        }

        const auto small_round = make_round(static_cast<std::uint64_t>(i), small_arms, variation);
        const auto big_round = make_round(static_cast<std::uint64_t>(i), big_arms, variation);
        const ArmId chosen = disjoint.select_arm(small_round);
        CHECK(joint.select_arm(big_round) == chosen);
        const double reward = rng.normal(0.1, 0.4);
        disjoint.update(small_round, chosen, reward);
        joint.update(big_round, chosen, reward);
    }
}

TEST_CASE("empirical thresholds: nearest rank on ten equally spaced samples") {
    EmpiricalThresholdTracker tracker(0.2, 0.2);
    for (int i = 1; i <= 10; ++i) tracker.record(0.1 * i);
    const ThresholdConfig t = empirical_thresholds(tracker);
    CHECK(t.lower == doctest::Approx(0.2));
    CHECK(t.upper == doctest::Approx(0.9));
}

TEST_CASE("empirical thresholds: zero levels give the sample extremes") {
    EmpiricalThresholdTracker tracker(0.0, 0.0);
    Rng rng(131);
    double lo = 1e300, hi = -1e300;
    for (int i = 0; i < 500; ++i) {
        const double v = rng.uniform(0.2, 1.7);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        tracker.record(v);
    }
    const ThresholdConfig exact = empirical_thresholds(tracker);
    CHECK(exact.lower == lo);
    CHECK(exact.upper == hi);
    const ThresholdConfig cached = tracker.cached_thresholds();
    CHECK(cached.lower == lo);
    CHECK(cached.upper == hi);
}

TEST_CASE("empirical thresholds: empty tracker degenerates to (0, 0)") {
    EmpiricalThresholdTracker tracker(0.1, 0.1);
    const ThresholdConfig t = empirical_thresholds(tracker);
    CHECK(t.lower == 0.0);
    CHECK(t.upper == 0.0);
}

TEST_CASE("empirical quantile concentrates on uniform samples") {
    EmpiricalThresholdTracker tracker(0.1, 0.1);
    Rng rng(137);
    for (int i = 0; i < 10000; ++i) tracker.record(rng.uniform());
    const ThresholdConfig t = empirical_thresholds(tracker);
    CHECK(std::abs(t.lower - 0.1) <= 0.02);
    CHECK(std::abs(t.upper - 0.9) <= 0.02);
}

TEST_CASE("empirical thresholds agree with the sort oracle") {
    Rng rng(139);
    for (int trial = 0; trial < 30; ++trial) {
        const double rho = rng.uniform(0.0, 0.5);
        EmpiricalThresholdTracker tracker(rho, rho);
        std::vector<double> samples;
        const int n = 1 + static_cast<int>(rng.uniform_index(200));
        for (int i = 0; i < n; ++i) {
            const double v = rng.normal();
            samples.push_back(v);
            tracker.record(v);
        }
        const ThresholdConfig t = empirical_thresholds(tracker);
        CHECK(t.lower == oracles::nearest_rank_quantile(samples, rho));
    }
}

TEST_CASE("sliding window keeps only the recent samples") {
    EmpiricalThresholdTracker tracker(0.0, 0.0, 4);
    for (double v : {10.0, 9.0, 1.0, 2.0, 3.0, 4.0}) tracker.record(v);
    CHECK(tracker.sample_count() == 4);
    const ThresholdConfig t = empirical_thresholds(tracker);
    CHECK(t.lower == 1.0);
    CHECK(t.upper == 4.0);
}

TEST_CASE("e-adalinucb records each slot once and tracks its thresholds") {
    EmpiricalAdaptivePolicy policy(options_for(LinearMode::adaptive, 2), 0.0, 0.0);
    const Vector x{1.0, 0.0};

    auto round = make_round(1, {{0, x}}, 0.4);
    policy.select_arm(round);
    policy.select_arm(round);  // same slot, no double-record
    CHECK(policy.tracker().sample_count() == 1);
    // First sight of a factor: single-point thresholds, full exploration.
    CHECK(policy.normalized_factor(round) == 0.0);
    policy.update(round, 0, 0.5);
    CHECK(policy.tracker().sample_count() == 1);

    auto round2 = make_round(2, {{0, x}}, 0.9);
    policy.select_arm(round2);
    CHECK(policy.tracker().sample_count() == 2);
    // Thresholds now span [0.4, 0.9]; a mid factor lands strictly inside.
    auto round3 = make_round(3, {{0, x}}, 0.65);
    policy.select_arm(round3);
    CHECK(policy.normalized_factor(round3) == doctest::Approx(0.5));
}

TEST_CASE("random policy is seed-deterministic and uniform-ish") {
    std::vector<ArmContext> arms;
    for (int a = 0; a < 4; ++a) arms.push_back({a, Vector{1.0, 0.0}});

    RandomPolicy first(99);
    RandomPolicy second(99);
    std::vector<int> counts(4, 0);
    for (int i = 0; i < 4000; ++i) {
        const auto round = make_round(static_cast<std::uint64_t>(i), arms, 0.0);
        const ArmId a = first.select_arm(round);
        CHECK(second.select_arm(round) == a);
        counts[static_cast<std::size_t>(a)]++;
    }
    for (int c : counts) {
        CHECK(c > 800);
        CHECK(c < 1200);
    }
}

TEST_CASE("kernel ucb: forced first pull, closed forms, oracle agreement") {
    KernelUcbOptions options;
    options.alpha = 1.5;
    options.kernel_gamma = 2.0;
    options.ridge_lambda = 0.5;

    SUBCASE("no history: the first listed arm is pulled") {
        KernelUcbPolicy policy(options);
        const auto round = make_round(1, {{5, Vector{0.1, 0.2}}, {2, Vector{0.3, 0.1}}}, 0.5);
        CHECK(policy.select_arm(round) == 5);
        CHECK_THROWS_AS(policy.index_for(Vector{0.5, 0.1, 0.2}), std::invalid_argument);
    }

    SUBCASE("single history point, query at the same point") {
        KernelUcbPolicy policy(options);
        const Vector z{0.5, 0.1, 0.2};
        policy.extend(z, 1.0);
        CHECK(policy.gram_inverse()[0][0] == doctest::Approx(1.0 / 1.5));
        const double mean = 1.0 / 1.5;
        const double width = 1.5 * std::sqrt(1.0 - 1.0 / 1.5);
        CHECK(policy.index_for(z) == doctest::Approx(mean + width));
    }

    SUBCASE("two identical points match the hand-inverted 2x2") {
        KernelUcbPolicy policy(options);
        const Vector z{0.4, -0.3};
        policy.extend(z, 1.0);
        policy.extend(z, 0.0);
        // (K + lambda I) = [[1.5, 1], [1, 1.5]], inverse = [[1.2, -.8], [-.8, 1.2]]
        CHECK(policy.gram_inverse()[0][0] == doctest::Approx(1.2));
        CHECK(policy.gram_inverse()[0][1] == doctest::Approx(-0.8));
        CHECK(policy.gram_inverse()[1][0] == doctest::Approx(-0.8));
        CHECK(policy.gram_inverse()[1][1] == doctest::Approx(1.2));
    }

    SUBCASE("schur-extended inverse matches direct inversion at n=50") {
        KernelUcbPolicy policy(options);
        Rng rng(151);
        for (int i = 0; i < 50; ++i) {
            policy.extend(random_unit(4, rng), rng.normal());
        }
        const std::size_t n = policy.history_size();
        Matrix gram(n, n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                gram(i, j) = policy.kernel(policy.history()[i], policy.history()[j]) +
                             (i == j ? options.ridge_lambda : 0.0);
            }
        }
        const Matrix oracle = oracles::gauss_jordan_inverse(gram);
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                worst = std::max(worst, std::abs(policy.gram_inverse()[i][j] - oracle(i, j)));
            }
        }
        CHECK(worst <= 1e-6);
    }

    SUBCASE("index matches a dense-solve oracle at n=30") {
        KernelUcbPolicy policy(options);
        Rng rng(157);
        Vector rewards;
        for (int i = 0; i < 30; ++i) {
            const double r = rng.normal();
            rewards.push_back(r);
            policy.extend(random_unit(3, rng), r);
        }
        const Vector query = random_unit(3, rng);
        const std::size_t n = policy.history_size();
        Matrix gram(n, n, 0.0);
        Vector k(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            k[i] = policy.kernel(query, policy.history()[i]);
            for (std::size_t j = 0; j < n; ++j) {
                gram(i, j) = policy.kernel(policy.history()[i], policy.history()[j]) +
                             (i == j ? options.ridge_lambda : 0.0);
            }
        }
        const Matrix inv = oracles::gauss_jordan_inverse(gram);
        Vector gk(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) gk[i] += inv(i, j) * k[j];
        double mean = 0.0, kgk = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mean += rewards[i] * gk[i];
            kgk += k[i] * gk[i];
        }
        const double expected = mean + 1.5 * std::sqrt(std::max(0.0, 1.0 - kgk));
        CHECK(policy.index_for(query) == doctest::Approx(expected).epsilon(1e-6));
    }
}

TEST_CASE("the actual-reward regression switch changes the target, not the context") {
    Rng rng(167);
    const std::size_t d = 3;
    LinearPolicyOptions options = options_for(LinearMode::combine, d);
    options.reward_signal = RewardSignal::actual;
    LinearPolicy policy(options);

    std::vector<std::pair<Vector, double>> history;
    for (int i = 0; i < 25; ++i) {
        const Vector x = random_unit(d, rng);
        const double variation = rng.uniform();
        const auto round = make_round(static_cast<std::uint64_t>(i), {{0, x}}, variation);
        const double reward = rng.normal(0.3, 0.5);
        policy.update(round, 0, reward);
        Vector augmented{variation};
        augmented.insert(augmented.end(), x.begin(), x.end());
        history.emplace_back(augmented, variation * reward);
    }
    const Vector oracle = oracles::direct_ridge_solve(history, d + 1, 1.0);
    CHECK(oracles::relative_error(policy.ridge_state().theta_hat, oracle) <= 1e-8);
}

TEST_CASE("policy configs build the full roster") {
    const std::size_t d = 4;
    for (const char* name : {"adalinucb", "linucb_extracted", "linucb_multiply",
                             "linucb_combine", "e_adalinucb", "kernel_ucb", "random"}) {
        PolicyConfig config;
        config.name = name;
        config.label = name;
        auto policy = make_policy(config, d, 42);
        REQUIRE(policy != nullptr);
        Rng rng(163);
        const auto round =
            make_round(1, {{0, random_unit(d, rng)}, {1, random_unit(d, rng)}}, 0.5);
        const ArmId chosen = policy->select_arm(round);
        policy->update(round, chosen, 0.3);
        CHECK_NOTHROW(policy->snapshot());
    }

    PolicyConfig bogus;
    bogus.name = "thompson";
    CHECK_THROWS_AS(make_policy(bogus, d, 1), std::invalid_argument);
}

TEST_CASE("policy config json round trip") {
    const nlohmann::json j{{"name", "adalinucb"},
                           {"label", "AdaLinUCB"},
                           {"alpha", 1.5},
                           {"model", "disjoint"},
                           {"thresholds", {{"lower", 0.1}, {"upper", 0.8}}}};
    const PolicyConfig config = PolicyConfig::from_json(j);
    CHECK(config.name == "adalinucb");
    CHECK(config.label == "AdaLinUCB");
    CHECK(config.model == ParameterModel::disjoint);
    CHECK(config.thresholds.lower == 0.1);
    CHECK(config.thresholds.upper == 0.8);
    const PolicyConfig back = PolicyConfig::from_json(config.to_json());
    CHECK(back.thresholds.upper == 0.8);
    CHECK(back.model == ParameterModel::disjoint);

    CHECK_THROWS(PolicyConfig::from_json(nlohmann::json{{"label", "x"}}));
}

TEST_CASE("snapshot exposes A, b, theta") {
    LinearPolicy policy(options_for(LinearMode::adaptive, 2));
    const auto round = make_round(1, {{0, Vector{1.0, 0.0}}}, 0.0);
    policy.update(round, 0, 1.0);
    const nlohmann::json snap = policy.snapshot();
    CHECK(snap.at("state").at("a")[0][0].get<double>() == 2.0);
    CHECK(snap.at("state").at("b")[0].get<double>() == 1.0);
    CHECK(snap.at("state").at("theta")[0].get<double>() == doctest::Approx(0.5));
    CHECK(snap.at("thresholds").at("lower").get<double>() == 0.0);
}
