#include "oppbandit/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace oppbandit {

namespace {

void check(bool ok, const std::string& field, const std::string& requirement) {
    if (!ok) throw std::invalid_argument("constants: " + field + " " + requirement);
}

}  // namespace

void validate(const BoundConstants& c) {
    check(c.c_noise >= 0.0 && std::isfinite(c.c_noise), "c_noise", "must be >= 0");
    check(c.c_theta >= 0.0 && std::isfinite(c.c_theta), "c_theta", "must be >= 0");
    check(c.c_context > 0.0 && std::isfinite(c.c_context), "c_context", "must be > 0");
    check(c.delta_min > 0.0 && std::isfinite(c.delta_min), "delta_min", "must be > 0");
    check(c.delta_max >= c.delta_min, "delta_max", "must be >= delta_min");
    check(c.n_contexts >= 1, "n_contexts", "must be >= 1");
    check(c.dim >= 1, "dim", "must be >= 1");
    check(c.rho >= 0.0 && c.rho <= 1.0, "rho", "must lie in [0, 1]");
    check(c.eps0 >= 0.0, "eps0", "must be >= 0");
    check(c.eps0 < 1.0 - c.eps1, "eps0", "must be < 1 - eps1");
    check(1.0 - c.eps1 <= 1.0, "eps1", "must be >= 0");
    check(c.delta_tilde > 0.0 && c.delta_tilde < 1.0, "delta_tilde", "must lie in (0, 1)");
    check(c.l_bar >= 0.0, "l_bar", "must be >= 0");
}

double alpha_schedule(const BoundConstants& c, double horizon) {
    check(horizon >= 1.0, "horizon", "must be >= 1");
    const double d = static_cast<double>(c.dim);
    const double inside = (2.0 + 2.0 * horizon * c.c_context * c.c_context) / c.delta_tilde;
    return c.c_noise * std::sqrt(d * std::log(inside)) + c.c_theta;
}

double adaptive_bracket(const BoundConstants& c, double t) {
    const double d = static_cast<double>(c.dim);
    const double log_conf = 2.0 * std::log(2.0 / c.delta_tilde);
    const double inner = d * std::log((d + t * c.c_context * c.c_context) / d) + log_conf;
    const double gap_term =
        (d - 1.0) * std::log(64.0 * c.c_noise * c.c_noise * c.c_theta * c.c_theta *
                             c.c_context / (c.delta_min * c.delta_min));
    return std::log(c.c_context * t) + log_conf + 2.0 * (d - 1.0) * std::log(inner) + gap_term;
}

double c_slots_lhs(const BoundConstants& c, double t) {
    const double bracket = adaptive_bracket(c, t);
    const double coef = 16.0 * c.c_noise * c.c_noise * c.c_theta * c.c_theta /
                        (c.delta_min * c.delta_min);
    return c.rho * t - std::sqrt(0.5 * t * std::log(2.0 / c.delta_tilde)) -
           coef * bracket * bracket;
}

bool c_slots_holds(const BoundConstants& c, double t) {
    const double d = static_cast<double>(c.dim);
    return c_slots_lhs(c, t) >= 4.0 * d / (c.delta_min * c.delta_min);
}

std::uint64_t c_slots(const BoundConstants& c, std::uint64_t cap) {
    validate(c);
    check(c.rho > 0.0, "rho", "must be > 0 for the slot-count search");

    const auto holds = [&](std::uint64_t t) {
        return c_slots_holds(c, static_cast<double>(t));
    };

    std::uint64_t hi = 1;
    while (!holds(hi)) {
        if (hi > cap / 2) {
            std::ostringstream msg;
            msg << "c_slots: search exceeded cap " << cap << " (c_noise=" << c.c_noise
                << " c_theta=" << c.c_theta << " c_context=" << c.c_context
                << " delta_min=" << c.delta_min << " rho=" << c.rho << " dim=" << c.dim
                << " delta_tilde=" << c.delta_tilde << ")";
            throw std::runtime_error(msg.str());
        }
        hi *= 2;
    }
    std::uint64_t lo = hi / 2;  // 0 when hi == 1
    while (hi - lo > 1 && lo > 0) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        if (holds(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // The feasible set is upward-closed for large t but the boundary can be
    // ragged; walk down so the returned value self-certifies.
    while (hi > 1 && holds(hi - 1)) --hi;
    return hi;
}

namespace {

double high_part_factor(const BoundConstants& c) {
    const double d = static_cast<double>(c.dim);
    const double n = static_cast<double>(c.n_contexts);
    const double slots = static_cast<double>(c_slots(c));
    return c.delta_max * slots + 4.0 * d * (n - 1.0) / c.delta_min;
}

double low_part_coefficient(const BoundConstants& c) {
    return 16.0 * c.c_noise * c.c_noise * c.c_theta * c.c_theta / c.delta_min;
}

AdaptiveBoundTerms adaptive_bound_terms(const BoundConstants& c, double horizon,
                                        double low_weight, double high_weight) {
    validate(c);
    check(horizon >= 1.0, "horizon", "must be >= 1");
    const double bracket = adaptive_bracket(c, horizon);
    const double alpha_t = alpha_schedule(c, horizon);

    AdaptiveBoundTerms terms;
    terms.low_weight = low_weight;
    terms.high_weight = high_weight;
    terms.low_part = low_weight * low_part_coefficient(c) * bracket * bracket;
    terms.high_part = high_weight * high_part_factor(c) * alpha_t * alpha_t;
    return terms;
}

}  // namespace

AdaptiveBoundTerms bound_adalinucb_binary_terms(const BoundConstants& c, double horizon) {
    return adaptive_bound_terms(c, horizon, c.eps0, 1.0 - c.eps1);
}

double bound_adalinucb_binary(const BoundConstants& c, double horizon) {
    return bound_adalinucb_binary_terms(c, horizon).total();
}

AdaptiveBoundTerms bound_adalinucb_continuous_terms(const BoundConstants& c, double horizon) {
    return adaptive_bound_terms(c, horizon, c.cond_low_mean, c.cond_high_mean);
}

double bound_adalinucb_continuous(const BoundConstants& c, double horizon) {
    return bound_adalinucb_continuous_terms(c, horizon).total();
}

double bound_linucb(const BoundConstants& c, double horizon) {
    validate(c);
    check(horizon >= 1.0, "horizon", "must be >= 1");
    const double d = static_cast<double>(c.dim);
    // Same bracket shape with confidence terms log(1/delta) instead of log(2/delta).
    const double log_conf = 2.0 * std::log(1.0 / c.delta_tilde);
    const double inner =
        d * std::log((d + horizon * c.c_context * c.c_context) / d) + log_conf;
    const double gap_term =
        (d - 1.0) * std::log(64.0 * c.c_noise * c.c_noise * c.c_theta * c.c_theta *
                             c.c_context / (c.delta_min * c.delta_min));
    const double bracket = std::log(c.c_context * horizon) + log_conf +
                           2.0 * (d - 1.0) * std::log(inner) + gap_term;
    return c.l_bar * low_part_coefficient(c) * bracket * bracket;
}

double bound_linucb_general(const BoundConstants& c, double horizon) {
    validate(c);
    check(horizon >= 1.0, "horizon", "must be >= 1");
    const double d = static_cast<double>(c.dim);
    const double csq = c.c_context * c.c_context;
    const double alpha =
        c.c_noise * std::sqrt(d * std::log((1.0 + horizon * csq) / c.delta_tilde)) + c.c_theta;
    // trace(I_d) = d and log det(I_d) = 0.
    const double log_volume = d * std::log((d + horizon * csq) / d);
    return std::sqrt(8.0 * horizon) * alpha * std::sqrt(log_volume);
}

double adaptive_logsq_coefficient(const BoundConstants& c) {
    return c.eps0 * low_part_coefficient(c);
}

double linucb_logsq_coefficient(const BoundConstants& c) {
    return c.l_bar * low_part_coefficient(c);
}

// ---------------------------------------------------------------------------
// Quantiles and conditional means

namespace {

double betacf(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 3e-15;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 500; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) break;
    }
    return h;
}

double beta_cdf_inverse(double a, double b, double p) {
    if (p <= 0.0) return 0.0;
    if (p >= 1.0) return 1.0;
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (regularized_incomplete_beta(a, b, mid) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double nearest_rank(std::vector<double> values, double rho, QuantileSide side) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    const std::size_t k = std::max<std::size_t>(
        1, std::min<std::size_t>(
               n, static_cast<std::size_t>(std::ceil(rho * static_cast<double>(n)))));
    return side == QuantileSide::lower ? values[k - 1] : values[n - k];
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("ibeta: parameters must be > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * betacf(a, b, x) / a;
    }
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double quantile_threshold(const VariationProcess& process, double rho, QuantileSide side) {
    if (rho < 0.0 || rho > 1.0) throw std::invalid_argument("quantile: rho must lie in [0, 1]");
    switch (process.kind) {
        case VariationProcess::Kind::binary: {
            const double low = process.eps0;
            const double high = 1.0 - process.eps1;
            if (side == QuantileSide::lower) {
                // P{L <= eps0} = rho_process
                return rho <= process.rho ? low : high;
            }
            // P{L >= 1 - eps1} = 1 - rho_process
            return rho <= 1.0 - process.rho ? high : low;
        }
        case VariationProcess::Kind::beta: {
            const double p = side == QuantileSide::lower ? rho : 1.0 - rho;
            return beta_cdf_inverse(process.beta_a, process.beta_b, p);
        }
        case VariationProcess::Kind::trace:
            return nearest_rank(process.trace_values, rho, side);
    }
    return 0.0;
}

std::pair<double, double> conditional_means(const VariationProcess& process, double split) {
    switch (process.kind) {
        case VariationProcess::Kind::binary: {
            const double low = process.eps0;
            const double high = 1.0 - process.eps1;
            double mass_low = 0.0, sum_low = 0.0, mass_high = 0.0, sum_high = 0.0;
            const auto add = [&](double value, double mass) {
                if (value <= split) {
                    mass_low += mass;
                    sum_low += mass * value;
                } else {
                    mass_high += mass;
                    sum_high += mass * value;
                }
            };
            add(low, process.rho);
            add(high, 1.0 - process.rho);
            return {mass_low > 0.0 ? sum_low / mass_low : 0.0,
                    mass_high > 0.0 ? sum_high / mass_high : 0.0};
        }
        case VariationProcess::Kind::beta: {
            const double a = process.beta_a;
            const double b = process.beta_b;
            const double mean = a / (a + b);
            const double cdf = regularized_incomplete_beta(a, b, split);
            // int_0^s x f(x) dx = mean * I_s(a+1, b)
            const double partial = mean * regularized_incomplete_beta(a + 1.0, b, split);
            const double low = cdf > 1e-15 ? partial / cdf : 0.0;
            const double high = (1.0 - cdf) > 1e-15 ? (mean - partial) / (1.0 - cdf) : 0.0;
            return {low, high};
        }
        case VariationProcess::Kind::trace: {
            double mass_low = 0.0, sum_low = 0.0, mass_high = 0.0, sum_high = 0.0;
            for (double v : process.trace_values) {
                if (v <= split) {
                    mass_low += 1.0;
                    sum_low += v;
                } else {
                    mass_high += 1.0;
                    sum_high += v;
                }
            }
            return {mass_low > 0.0 ? sum_low / mass_low : 0.0,
                    mass_high > 0.0 ? sum_high / mass_high : 0.0};
        }
    }
    return {0.0, 0.0};
}

// ---------------------------------------------------------------------------
// JSON

BoundConstants BoundConstants::from_json(const nlohmann::json& j) {
    BoundConstants c;
    c.c_noise = j.value("c_noise", c.c_noise);
    c.c_theta = j.value("c_theta", c.c_theta);
    c.c_context = j.value("c_context", c.c_context);
    c.delta_min = j.value("delta_min", c.delta_min);
    c.delta_max = j.value("delta_max", c.delta_max);
    c.n_contexts = j.value("n_contexts", c.n_contexts);
    c.dim = j.value("dim", c.dim);
    c.rho = j.value("rho", c.rho);
    c.eps0 = j.value("eps0", c.eps0);
    c.eps1 = j.value("eps1", c.eps1);
    c.delta_tilde = j.value("delta_tilde", c.delta_tilde);
    if (j.contains("l_bar")) {
        c.l_bar = j.at("l_bar").get<double>();
    } else {
        c.l_bar = c.rho * c.eps0 + (1.0 - c.rho) * (1.0 - c.eps1);
    }
    c.cond_low_mean = j.value("cond_low_mean", c.cond_low_mean);
    c.cond_high_mean = j.value("cond_high_mean", c.cond_high_mean);
    return c;
}

nlohmann::json BoundConstants::to_json() const {
    return {{"c_noise", c_noise},
            {"c_theta", c_theta},
            {"c_context", c_context},
            {"delta_min", delta_min},
            {"delta_max", delta_max},
            {"n_contexts", n_contexts},
            {"dim", dim},
            {"rho", rho},
            {"eps0", eps0},
            {"eps1", eps1},
            {"delta_tilde", delta_tilde},
            {"l_bar", l_bar},
            {"cond_low_mean", cond_low_mean},
            {"cond_high_mean", cond_high_mean}};
}

}  // namespace oppbandit
