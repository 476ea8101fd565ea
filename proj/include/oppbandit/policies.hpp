#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oppbandit/matrix_kernel.hpp"
#include "oppbandit/rng.hpp"

#include "json.hpp"

namespace oppbandit {

using ArmId = std::int64_t;

struct ArmContext {
    ArmId id = 0;
    Vector context;
};

// One decision slot: the candidate arms with their context vectors, and the
// variation factor revealed before selection.
struct DecisionRound {
    std::uint64_t slot = 0;
    std::vector<ArmContext> arms;
    double variation_factor = 0.0;
};

struct ThresholdConfig {
    double lower = 0.0;
    double upper = 1.0;
};

// Truncates the variation factor to [lower, upper] and rescales to [0, 1].
// The single-threshold case (lower == upper) degenerates to a step: 0 at or
// below the threshold, 1 above it.
double normalize_variation(double variation, const ThresholdConfig& thresholds);

// Index of the adaptive policy: theta^T x + alpha * sqrt(1 - l_tilde) * ||x||_{A^{-1}}.
// l_tilde = 0 recovers the plain UCB index, l_tilde = 1 the greedy estimate.
double adalinucb_index(const PdState& pd, const RidgeState& ridge, double alpha,
                       std::span<const double> x, double l_tilde);

class Policy {
public:
    virtual ~Policy() = default;
    virtual ArmId select_arm(const DecisionRound& round) = 0;
    virtual void update(const DecisionRound& round, ArmId chosen, double nominal_reward) = 0;
    // Normalized factor the policy would act on for this round; 0 for policies
    // that do not truncate the variation factor.
    virtual double normalized_factor(const DecisionRound& round) const { return 0.0; }
    virtual nlohmann::json snapshot() const = 0;
};

enum class LinearMode { adaptive, extracted, multiply, combine };

enum class ParameterModel { joint, disjoint };

enum class RewardSignal { nominal, actual };

struct LinearPolicyOptions {
    LinearMode mode = LinearMode::adaptive;
    ParameterModel model = ParameterModel::joint;
    std::size_t dim = 0;  // raw context dimension (pre-augmentation)
    double alpha = 1.5;
    double regularizer = 1.0;
    ThresholdConfig thresholds{0.0, 1.0};          // adaptive mode only
    RewardSignal reward_signal = RewardSignal::nominal;  // adaptive/combine switch
};

// The LinUCB family behind one implementation:
//   adaptive   - width scaled by sqrt(1 - l_tilde), regresses on nominal reward
//   extracted  - plain LinUCB, ignores the variation factor
//   multiply   - LinUCB over L*x with the actual reward L*r
//   combine    - LinUCB over the augmented context [L, x^T]^T
// With model == disjoint, a separate (A, b) pair is kept per arm.
class LinearPolicy : public Policy {
public:
    explicit LinearPolicy(const LinearPolicyOptions& options);

    ArmId select_arm(const DecisionRound& round) override;
    void update(const DecisionRound& round, ArmId chosen, double nominal_reward) override;
    double normalized_factor(const DecisionRound& round) const override;
    nlohmann::json snapshot() const override;

    void set_thresholds(const ThresholdConfig& thresholds);
    const LinearPolicyOptions& options() const { return options_; }

    // Joint-model state accessors.
    const PdState& pd_state() const;
    const RidgeState& ridge_state() const;
    // Disjoint-model accessor; creates the arm state on first touch.
    const PdState& pd_state(ArmId arm) const;
    const RidgeState& ridge_state(ArmId arm) const;

private:
    struct ArmState {
        PdState pd;
        RidgeState ridge;
    };

    Vector effective_context(std::span<const double> x, double variation) const;
    double effective_reward(double nominal, double variation) const;
    double width_scale(double variation) const;  // sqrt(1 - l_tilde) term
    ArmState& state_for(ArmId arm);

    LinearPolicyOptions options_;
    std::size_t state_dim_;
    ArmState shared_;
    mutable std::map<ArmId, ArmState> per_arm_;
};

// Retained variation-factor samples with nearest-rank quantile thresholds:
// lower = smallest sample s with P{L <= s} >= rho_lower,
// upper = largest  sample s with P{L >= s} >= rho_upper.
class EmpiricalThresholdTracker {
public:
    EmpiricalThresholdTracker(double rho_lower, double rho_upper, std::size_t window = 0);

    void record(double variation);
    std::size_t sample_count() const { return samples_.size(); }

    // Exact nearest-rank thresholds over the retained samples; (0, 0) when empty.
    ThresholdConfig thresholds() const;
    // Cached variant refreshed as the sample set grows; what the policy uses.
    ThresholdConfig cached_thresholds() const;

    double rho_lower() const { return rho_lower_; }
    double rho_upper() const { return rho_upper_; }

private:
    double rho_lower_;
    double rho_upper_;
    std::size_t window_;  // 0 = unbounded history
    std::vector<double> samples_;
    double running_min_ = 0.0;
    double running_max_ = 0.0;
    mutable ThresholdConfig cached_{0.0, 0.0};
    mutable std::size_t cached_at_ = 0;
};

ThresholdConfig empirical_thresholds(const EmpiricalThresholdTracker& state);

// Adaptive policy whose truncation thresholds track empirical quantiles of the
// variation factors observed so far.
class EmpiricalAdaptivePolicy : public Policy {
public:
    EmpiricalAdaptivePolicy(const LinearPolicyOptions& options, double rho_lower,
                            double rho_upper, std::size_t window = 0);

    ArmId select_arm(const DecisionRound& round) override;
    void update(const DecisionRound& round, ArmId chosen, double nominal_reward) override;
    double normalized_factor(const DecisionRound& round) const override;
    nlohmann::json snapshot() const override;

    const EmpiricalThresholdTracker& tracker() const { return tracker_; }
    const LinearPolicy& core() const { return core_; }

private:
    void observe_factor(const DecisionRound& round);

    LinearPolicy core_;
    EmpiricalThresholdTracker tracker_;
    std::optional<std::uint64_t> last_recorded_slot_;
};

class RandomPolicy : public Policy {
public:
    explicit RandomPolicy(std::uint64_t seed) : rng_(seed) {}

    ArmId select_arm(const DecisionRound& round) override;
    void update(const DecisionRound&, ArmId, double) override {}
    nlohmann::json snapshot() const override;

private:
    Rng rng_;
};

struct KernelUcbOptions {
    double alpha = 1.5;
    double kernel_gamma = 2.0;   // Gaussian kernel k(z1,z2) = exp(-gamma ||z1-z2||^2)
    double ridge_lambda = 0.5;
};

// Kernel ridge UCB over the augmented context [L, x^T]^T. The inverse of the
// regularized Gram matrix (K + lambda I) is grown one point at a time via its
// Schur complement; a non-positive complement falls back to refactorization.
class KernelUcbPolicy : public Policy {
public:
    explicit KernelUcbPolicy(const KernelUcbOptions& options) : options_(options) {}

    ArmId select_arm(const DecisionRound& round) override;
    void update(const DecisionRound& round, ArmId chosen, double nominal_reward) override;
    nlohmann::json snapshot() const override;

    double kernel(std::span<const double> a, std::span<const double> b) const;
    // UCB index for an augmented point; requires at least one history point.
    double index_for(std::span<const double> x_augmented) const;
    void extend(Vector x_augmented, double reward);  // schur-extend + record reward

    std::size_t history_size() const { return history_.size(); }
    const std::vector<Vector>& gram_inverse() const { return gram_inverse_; }
    const std::vector<Vector>& history() const { return history_; }

    static Vector augment(double variation, std::span<const double> x);

private:
    void refactor_gram_inverse();

    KernelUcbOptions options_;
    std::vector<Vector> history_;
    Vector rewards_;
    std::vector<Vector> gram_inverse_;  // symmetric (K + lambda I)^{-1}, row per point
};

// Declarative policy construction record; mirrors the JSON config schema.
struct PolicyConfig {
    std::string name;   // registry key, e.g. "adalinucb"
    std::string label;  // row label in emitted files; defaults to name
    double alpha = 1.5;
    ParameterModel model = ParameterModel::joint;
    double regularizer = 1.0;
    ThresholdConfig thresholds{0.0, 1.0};
    RewardSignal reward_signal = RewardSignal::nominal;
    double rho_lower = 0.0;  // e_adalinucb quantile levels
    double rho_upper = 0.0;
    std::size_t window = 0;
    KernelUcbOptions kernel;

    static PolicyConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

std::unique_ptr<Policy> make_policy(const PolicyConfig& config, std::size_t dim,
                                    std::uint64_t seed);

}  // namespace oppbandit
