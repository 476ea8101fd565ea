#include "oppbandit/environments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>

namespace oppbandit {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

Vector random_unit_vector(std::size_t dim, Rng& rng) {
    Vector v(dim, 0.0);
    for (;;) {
        double norm_sq = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            v[i] = rng.normal();
            norm_sq += v[i] * v[i];
        }
        if (norm_sq > 1e-24) {
            const double inv = 1.0 / std::sqrt(norm_sq);
            for (double& x : v) x *= inv;
            return v;
        }
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// VariationProcess

VariationProcess VariationProcess::make_binary(double eps0, double eps1, double rho) {
    require(eps0 >= 0.0 && eps0 < 1.0 - eps1 && 1.0 - eps1 <= 1.0,
            "variation: binary levels must satisfy 0 <= eps0 < 1 - eps1 <= 1");
    require(rho >= 0.0 && rho <= 1.0, "variation: rho must lie in [0, 1]");
    VariationProcess p;
    p.kind = Kind::binary;
    p.eps0 = eps0;
    p.eps1 = eps1;
    p.rho = rho;
    return p;
}

VariationProcess VariationProcess::make_beta(double a, double b) {
    require(a > 0.0 && b > 0.0, "variation: beta parameters must be positive");
    VariationProcess p;
    p.kind = Kind::beta;
    p.beta_a = a;
    p.beta_b = b;
    return p;
}

VariationProcess VariationProcess::make_trace(std::vector<double> values, bool normalize_to_max) {
    require(!values.empty(), "variation: trace must be nonempty");
    double max_value = 0.0;
    for (double v : values) {
        require(v >= 0.0 && std::isfinite(v), "variation: trace values must be nonnegative");
        max_value = std::max(max_value, v);
    }
    if (normalize_to_max && max_value > 0.0) {
        for (double& v : values) v /= max_value;
    }
    VariationProcess p;
    p.kind = Kind::trace;
    p.trace_values = std::move(values);
    return p;
}

double VariationProcess::sample(std::uint64_t slot, Rng& rng) const {
    switch (kind) {
        case Kind::binary:
            return rng.uniform() < rho ? eps0 : 1.0 - eps1;
        case Kind::beta:
            return rng.beta(beta_a, beta_b);
        case Kind::trace: {
            const std::size_t n = trace_values.size();
            const std::size_t index = static_cast<std::size_t>((slot - 1) % n);
            return trace_values[index];
        }
    }
    return 0.0;
}

double VariationProcess::mean() const {
    switch (kind) {
        case Kind::binary:
            return rho * eps0 + (1.0 - rho) * (1.0 - eps1);
        case Kind::beta:
            return beta_a / (beta_a + beta_b);
        case Kind::trace:
            return std::accumulate(trace_values.begin(), trace_values.end(), 0.0) /
                   static_cast<double>(trace_values.size());
    }
    return 0.0;
}

VariationProcess VariationProcess::from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "binary") {
        return make_binary(j.value("eps0", 0.0), j.value("eps1", 0.0), j.value("rho", 0.5));
    }
    if (kind == "beta") {
        return make_beta(j.value("a", 2.0), j.value("b", 2.0));
    }
    if (kind == "trace") {
        std::vector<double> values;
        if (j.contains("values")) values = j.at("values").get<std::vector<double>>();
        if (j.contains("path")) {
            std::vector<double> file_values = load_trace_file(j.at("path").get<std::string>());
            values.insert(values.end(), file_values.begin(), file_values.end());
        }
        return make_trace(std::move(values), j.value("normalize", true));
    }
    throw std::invalid_argument("variation: unknown kind '" + kind + "'");
}

nlohmann::json VariationProcess::to_json() const {
    switch (kind) {
        case Kind::binary:
            return {{"kind", "binary"}, {"eps0", eps0}, {"eps1", eps1}, {"rho", rho}};
        case Kind::beta:
            return {{"kind", "beta"}, {"a", beta_a}, {"b", beta_b}};
        case Kind::trace:
            return {{"kind", "trace"}, {"values", trace_values}, {"normalize", false}};
    }
    return {};
}

// ---------------------------------------------------------------------------
// Environment

double EnvironmentSpec::expected_reward(std::size_t group, std::size_t arm) const {
    return dot(context_catalog[group][arm], theta_star[arm]);
}

EnvironmentSpec generate_environment(const EnvironmentConfig& config) {
    require(config.num_arms >= 1, "environment: num_arms must be positive");
    require(config.num_context_groups >= 1, "environment: num_context_groups must be positive");
    require(config.dim >= 1, "environment: dim must be positive");
    require(config.noise_sigma >= 0.0, "environment: noise_sigma must be nonnegative");

    EnvironmentSpec env;
    env.num_arms = config.num_arms;
    env.num_context_groups = config.num_context_groups;
    env.dim = config.dim;
    env.noise_sigma = config.noise_sigma;
    env.noise_kind = config.noise_kind;
    env.variation = config.variation;
    env.joint_rewards = config.joint_rewards;
    env.seed = config.seed;

    Rng rng(derive_seed(config.seed, "environment", 0));
    env.theta_star.reserve(config.num_arms);
    if (config.joint_rewards) {
        const Vector shared = random_unit_vector(config.dim, rng);
        env.theta_star.assign(config.num_arms, shared);
    } else {
        for (std::size_t a = 0; a < config.num_arms; ++a) {
            env.theta_star.push_back(random_unit_vector(config.dim, rng));
        }
    }
    env.context_catalog.resize(config.num_context_groups);
    for (std::size_t g = 0; g < config.num_context_groups; ++g) {
        env.context_catalog[g].reserve(config.num_arms);
        for (std::size_t a = 0; a < config.num_arms; ++a) {
            env.context_catalog[g].push_back(random_unit_vector(config.dim, rng));
        }
    }
    return env;
}

DecisionRound sample_round(const EnvironmentSpec& env, std::uint64_t slot, Rng& rng) {
    DecisionRound round;
    round.slot = slot;
    const std::size_t group = rng.uniform_index(env.num_context_groups);
    round.arms.reserve(env.num_arms);
    for (std::size_t a = 0; a < env.num_arms; ++a) {
        round.arms.push_back({static_cast<ArmId>(a), env.context_catalog[group][a]});
    }
    round.variation_factor = env.variation.sample(slot, rng);
    return round;
}

RoundOutcome realize_reward(const EnvironmentSpec& env, const DecisionRound& round,
                            ArmId chosen, Rng& rng) {
    double best = 0.0;
    bool have_best = false;
    bool chosen_seen = false;
    double expected_chosen = 0.0;
    for (const ArmContext& arm : round.arms) {
        require(arm.id >= 0 && static_cast<std::size_t>(arm.id) < env.num_arms,
                "realize_reward: arm id outside environment");
        const double mu = dot(arm.context, env.theta_star[static_cast<std::size_t>(arm.id)]);
        if (!have_best || mu > best) {
            best = mu;
            have_best = true;
        }
        if (arm.id == chosen) {
            chosen_seen = true;
            expected_chosen = mu;
        }
    }
    require(chosen_seen, "realize_reward: chosen arm not in round");

    double noise = 0.0;
    if (env.noise_kind == NoiseKind::gaussian) {
        noise = rng.normal(0.0, env.noise_sigma);
    } else {
        // Zero-mean uniform with standard deviation noise_sigma.
        const double half_width = env.noise_sigma * std::sqrt(3.0);
        noise = rng.uniform(-half_width, half_width);
    }

    RoundOutcome outcome;
    outcome.expected_best = best;
    outcome.expected_chosen = expected_chosen;
    outcome.nominal_reward = expected_chosen + noise;
    outcome.actual_reward = round.variation_factor * outcome.nominal_reward;
    outcome.nominal_regret = best - expected_chosen;
    outcome.actual_regret = round.variation_factor * outcome.nominal_regret;
    return outcome;
}

ProblemConstants problem_constants(const EnvironmentSpec& env) {
    ProblemConstants constants;

    std::set<Vector> distinct;
    double max_norm = 0.0;
    for (const auto& group : env.context_catalog) {
        for (const Vector& x : group) {
            distinct.insert(x);
            max_norm = std::max(max_norm, std::sqrt(dot(x, x)));
        }
    }
    constants.n_contexts = distinct.size();
    constants.c_context = max_norm;

    bool any_gap = false;
    double min_gap = 0.0;
    double max_gap = 0.0;
    std::set<Vector> optimal_contexts;
    for (std::size_t g = 0; g < env.num_context_groups; ++g) {
        double best = env.expected_reward(g, 0);
        double worst = best;
        for (std::size_t a = 1; a < env.num_arms; ++a) {
            const double mu = env.expected_reward(g, a);
            best = std::max(best, mu);
            worst = std::min(worst, mu);
        }
        bool has_second = false;
        double second = 0.0;
        for (std::size_t a = 0; a < env.num_arms; ++a) {
            const double mu = env.expected_reward(g, a);
            if (mu == best) {
                optimal_contexts.insert(env.context_catalog[g][a]);
            } else if (!has_second || mu > second) {
                has_second = true;
                second = mu;
            }
        }
        if (has_second) {
            const double gap = best - second;
            min_gap = any_gap ? std::min(min_gap, gap) : gap;
            any_gap = true;
        }
        max_gap = std::max(max_gap, best - worst);
    }
    constants.delta_min_defined = any_gap;
    constants.delta_min = any_gap ? min_gap : 0.0;
    constants.delta_max = max_gap;
    constants.single_optimal_context = optimal_contexts.size() == 1;
    return constants;
}

std::vector<double> load_trace_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("trace file: cannot open '" + path + "'");
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        values.push_back(std::stod(line.substr(first)));
    }
    if (values.empty()) throw std::runtime_error("trace file: no values in '" + path + "'");
    return values;
}

// ---------------------------------------------------------------------------
// JSON round trip

nlohmann::json EnvironmentSpec::to_json() const {
    return {{"num_arms", num_arms},
            {"num_context_groups", num_context_groups},
            {"dim", dim},
            {"noise_sigma", noise_sigma},
            {"noise_kind", noise_kind == NoiseKind::gaussian ? "gaussian" : "bounded_uniform"},
            {"variation", variation.to_json()},
            {"joint_rewards", joint_rewards},
            {"seed", seed},
            {"theta_star", theta_star},
            {"context_catalog", context_catalog}};
}

EnvironmentSpec EnvironmentSpec::from_json(const nlohmann::json& j) {
    EnvironmentSpec env;
    env.num_arms = j.at("num_arms").get<std::size_t>();
    env.num_context_groups = j.at("num_context_groups").get<std::size_t>();
    env.dim = j.at("dim").get<std::size_t>();
    env.noise_sigma = j.at("noise_sigma").get<double>();
    env.noise_kind = j.value("noise_kind", std::string("gaussian")) == "bounded_uniform"
                         ? NoiseKind::bounded_uniform
                         : NoiseKind::gaussian;
    env.variation = VariationProcess::from_json(j.at("variation"));
    env.joint_rewards = j.value("joint_rewards", false);
    env.seed = j.at("seed").get<std::uint64_t>();
    env.theta_star = j.at("theta_star").get<std::vector<Vector>>();
    env.context_catalog = j.at("context_catalog").get<std::vector<std::vector<Vector>>>();

    require(env.theta_star.size() == env.num_arms, "environment json: theta_star size mismatch");
    require(env.context_catalog.size() == env.num_context_groups,
            "environment json: catalog group count mismatch");
    for (const auto& group : env.context_catalog) {
        require(group.size() == env.num_arms, "environment json: catalog arm count mismatch");
        for (const auto& x : group) {
            require(x.size() == env.dim, "environment json: context dimension mismatch");
        }
    }
    for (const auto& theta : env.theta_star) {
        require(theta.size() == env.dim, "environment json: theta dimension mismatch");
    }
    return env;
}

}  // namespace oppbandit
