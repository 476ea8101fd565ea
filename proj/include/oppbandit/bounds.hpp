#pragma once

#include <cstdint>
#include <utility>

#include "oppbandit/environments.hpp"

#include "json.hpp"

namespace oppbandit {

// Instance constants feeding the problem-dependent regret bounds.
struct BoundConstants {
    double c_noise = 1.0;
    double c_theta = 1.0;
    double c_context = 1.0;
    double delta_min = 0.1;
    double delta_max = 1.0;
    std::uint64_t n_contexts = 100;
    std::uint64_t dim = 6;
    double rho = 0.5;   // P{L = eps0} for the binary factor
    double eps0 = 0.0;
    double eps1 = 0.0;
    double delta_tilde = 0.1;
    double l_bar = 0.5;
    double cond_low_mean = 0.0;   // E[L | L <= l^-]
    double cond_high_mean = 0.0;  // E[L | L >  l^-]

    static BoundConstants from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

// Throws std::invalid_argument naming the offending field.
void validate(const BoundConstants& constants);

// alpha_T = C_noise sqrt(d log((2 + 2 T C_context^2) / delta_tilde)) + C_theta
double alpha_schedule(const BoundConstants& constants, double horizon);

// The bracketed logarithmic expression shared by the adaptive-policy bound and
// the slot-count inequality:
//   log(C t) + 2 log(2/dt) + 2(d-1) log(d log((d + t C^2)/d) + 2 log(2/dt))
//   + (d-1) log(64 Cn^2 Ct^2 C / dmin^2)
double adaptive_bracket(const BoundConstants& constants, double t);

// Left-hand side of the slot-count inequality minus nothing; the inequality
// holds at t when this value is >= 4 d / delta_min^2.
double c_slots_lhs(const BoundConstants& constants, double t);
bool c_slots_holds(const BoundConstants& constants, double t);

inline constexpr std::uint64_t kCSlotsDefaultCap = 1'000'000'000'000ull;

// Smallest positive integer at which the slot-count inequality holds and its
// predecessor does not; exponential search then bisection. Throws
// std::runtime_error reporting the constants when the cap is exceeded.
std::uint64_t c_slots(const BoundConstants& constants, std::uint64_t cap = kCSlotsDefaultCap);

struct AdaptiveBoundTerms {
    double low_weight = 0.0;   // eps0, or E[L | L <= l^-]
    double high_weight = 0.0;  // 1 - eps1, or E[L | L > l^-]
    double low_part = 0.0;     // weight * 16 Cn^2 Ct^2 / dmin * bracket(T)^2
    double high_part = 0.0;    // weight * (dmax C_slots + 4 d (N-1)/dmin) * alpha_T^2
    double total() const { return low_part + high_part; }
};

AdaptiveBoundTerms bound_adalinucb_binary_terms(const BoundConstants& constants, double horizon);
double bound_adalinucb_binary(const BoundConstants& constants, double horizon);

// Single-threshold continuous-factor variant weighted by the conditional means.
AdaptiveBoundTerms bound_adalinucb_continuous_terms(const BoundConstants& constants,
                                                    double horizon);
double bound_adalinucb_continuous(const BoundConstants& constants, double horizon);

// Problem-dependent baseline bound, scaled by the mean variation factor.
double bound_linucb(const BoundConstants& constants, double horizon);

// General sqrt(T)-type baseline bound (initial design matrix = identity).
double bound_linucb_general(const BoundConstants& constants, double horizon);

// Coefficients of the asymptotically dominant (log T)^2 terms.
double adaptive_logsq_coefficient(const BoundConstants& constants);
double linucb_logsq_coefficient(const BoundConstants& constants);

enum class QuantileSide { lower, upper };

// lower: smallest l with P{L <= l} >= rho; upper: largest l with P{L >= l} >= rho.
double quantile_threshold(const VariationProcess& process, double rho, QuantileSide side);

// (E[L | L <= split], E[L | L > split]); a zero-probability side reports 0.
std::pair<double, double> conditional_means(const VariationProcess& process, double split);

// Regularized incomplete beta function I_x(a, b), continued-fraction evaluation.
double regularized_incomplete_beta(double a, double b, double x);

}  // namespace oppbandit
