#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oppbandit/policies.hpp"
#include "oppbandit/rng.hpp"

#include "json.hpp"

namespace oppbandit {

// Variation-factor processes: binary i.i.d. on {eps0, 1-eps1}, Beta(a, b),
// or a fixed trace replayed in slot order (cycling past its end).
struct VariationProcess {
    enum class Kind { binary, beta, trace };

    Kind kind = Kind::binary;
    double eps0 = 0.0;
    double eps1 = 0.0;
    double rho = 0.5;  // P{L_t = eps0}
    double beta_a = 2.0;
    double beta_b = 2.0;
    std::vector<double> trace_values;  // post-normalization

    static VariationProcess make_binary(double eps0, double eps1, double rho);
    static VariationProcess make_beta(double a, double b);
    // normalize_to_max scales a raw nonnegative series by its maximum.
    static VariationProcess make_trace(std::vector<double> values, bool normalize_to_max = true);

    // slot is 1-based; only the trace kind consults it.
    double sample(std::uint64_t slot, Rng& rng) const;
    double mean() const;

    static VariationProcess from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

enum class NoiseKind { gaussian, bounded_uniform };

struct EnvironmentConfig {
    std::size_t num_arms = 20;
    std::size_t num_context_groups = 5;
    std::size_t dim = 6;
    double noise_sigma = 0.1;
    NoiseKind noise_kind = NoiseKind::gaussian;
    VariationProcess variation = VariationProcess::make_binary(0.0, 0.0, 0.5);
    // true: all arms share one coefficient vector (unit-test generator); the
    // default world is disjoint, one coefficient vector per arm.
    bool joint_rewards = false;
    std::uint64_t seed = 1;
};

// Immutable ground truth: per-arm unit coefficient vectors and a complete
// group -> arm catalog of unit context vectors (C_context = 1).
struct EnvironmentSpec {
    std::size_t num_arms = 0;
    std::size_t num_context_groups = 0;
    std::size_t dim = 0;
    double noise_sigma = 0.0;
    NoiseKind noise_kind = NoiseKind::gaussian;
    VariationProcess variation;
    bool joint_rewards = false;
    std::uint64_t seed = 0;
    std::vector<Vector> theta_star;                  // arm -> d
    std::vector<std::vector<Vector>> context_catalog;  // group -> arm -> d

    double expected_reward(std::size_t group, std::size_t arm) const;

    static EnvironmentSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

EnvironmentSpec generate_environment(const EnvironmentConfig& config);

DecisionRound sample_round(const EnvironmentSpec& env, std::uint64_t slot, Rng& rng);

struct RoundOutcome {
    double nominal_reward = 0.0;
    double actual_reward = 0.0;
    double expected_best = 0.0;
    double expected_chosen = 0.0;
    double nominal_regret = 0.0;
    double actual_regret = 0.0;
};

// Reward realization: nominal = <x, theta*> + noise, actual = L * nominal.
// Regrets are measured against the noise-free best arm of the round.
RoundOutcome realize_reward(const EnvironmentSpec& env, const DecisionRound& round,
                            ArmId chosen, Rng& rng);

struct ProblemConstants {
    bool delta_min_defined = false;
    double delta_min = 0.0;  // min over groups of best - second-distinct-best
    double delta_max = 0.0;  // max over groups of best - worst
    std::size_t n_contexts = 0;
    double c_context = 0.0;
    bool single_optimal_context = false;
};

// Exhaustive scan over the catalog for the gap constants behind the
// problem-dependent bounds.
ProblemConstants problem_constants(const EnvironmentSpec& env);

// Trace files: one nonnegative real per line; '#' lines and blanks skipped.
std::vector<double> load_trace_file(const std::string& path);

}  // namespace oppbandit
