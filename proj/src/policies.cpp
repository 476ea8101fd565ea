#include "oppbandit/policies.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oppbandit {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

nlohmann::json state_to_json(const PdState& pd, const RidgeState& ridge) {
    nlohmann::json a = nlohmann::json::array();
    for (std::size_t i = 0; i < pd.dim; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = 0; j < pd.dim; ++j) row.push_back(pd.a_matrix(i, j));
        a.push_back(std::move(row));
    }
    return nlohmann::json{{"dim", pd.dim},
                          {"update_count", pd.update_count},
                          {"a", std::move(a)},
                          {"b", ridge.b_vector},
                          {"theta", ridge.theta_hat}};
}

}  // namespace

double normalize_variation(double variation, const ThresholdConfig& thresholds) {
    require(thresholds.lower <= thresholds.upper,
            "normalize_variation: thresholds.lower must be <= thresholds.upper");
    if (thresholds.lower == thresholds.upper) {
        return variation <= thresholds.lower ? 0.0 : 1.0;
    }
    const double clamped = std::max(thresholds.lower, std::min(variation, thresholds.upper));
    return (clamped - thresholds.lower) / (thresholds.upper - thresholds.lower);
}

double adalinucb_index(const PdState& pd, const RidgeState& ridge, double alpha,
                       std::span<const double> x, double l_tilde) {
    require(x.size() == pd.dim, "adalinucb_index: dimension mismatch");
    return dot(ridge.theta_hat, x) + alpha * std::sqrt(1.0 - l_tilde) * weighted_norm(pd, x);
}

// ---------------------------------------------------------------------------
// LinearPolicy

LinearPolicy::LinearPolicy(const LinearPolicyOptions& options)
    : options_(options),
      state_dim_(options.mode == LinearMode::combine ? options.dim + 1 : options.dim) {
    require(options_.dim >= 1, "LinearPolicy: dim must be positive");
    require(options_.alpha > 0.0, "LinearPolicy: alpha must be positive");
    require(options_.thresholds.lower <= options_.thresholds.upper,
            "LinearPolicy: thresholds.lower must be <= thresholds.upper");
    shared_.pd = pd_init(state_dim_, options_.regularizer);
    shared_.ridge = ridge_init(state_dim_);
}

Vector LinearPolicy::effective_context(std::span<const double> x, double variation) const {
    require(x.size() == options_.dim, "LinearPolicy: context dimension mismatch");
    switch (options_.mode) {
        case LinearMode::multiply: {
            Vector scaled(x.begin(), x.end());
            for (double& v : scaled) v *= variation;
            return scaled;
        }
        case LinearMode::combine: {
            Vector augmented;
            augmented.reserve(x.size() + 1);
            augmented.push_back(variation);
            augmented.insert(augmented.end(), x.begin(), x.end());
            return augmented;
        }
        default:
            return Vector(x.begin(), x.end());
    }
}

double LinearPolicy::effective_reward(double nominal, double variation) const {
    switch (options_.mode) {
        case LinearMode::multiply:
            return variation * nominal;
        case LinearMode::adaptive:
        case LinearMode::combine:
            return options_.reward_signal == RewardSignal::actual ? variation * nominal
                                                                  : nominal;
        default:
            return nominal;
    }
}

double LinearPolicy::width_scale(double variation) const {
    if (options_.mode != LinearMode::adaptive) return 1.0;
    return std::sqrt(1.0 - normalize_variation(variation, options_.thresholds));
}

LinearPolicy::ArmState& LinearPolicy::state_for(ArmId arm) {
    if (options_.model == ParameterModel::joint) return shared_;
    auto it = per_arm_.find(arm);
    if (it == per_arm_.end()) {
        ArmState fresh{pd_init(state_dim_, options_.regularizer), ridge_init(state_dim_)};
        it = per_arm_.emplace(arm, std::move(fresh)).first;
    }
    return it->second;
}

ArmId LinearPolicy::select_arm(const DecisionRound& round) {
    require(!round.arms.empty(), "select_arm: empty arm set");
    const double scale = width_scale(round.variation_factor);
    bool have_best = false;
    ArmId best_id = 0;
    double best_index = 0.0;
    for (const ArmContext& arm : round.arms) {
        const Vector x = effective_context(arm.context, round.variation_factor);
        const ArmState& st = state_for(arm.id);
        const double index = dot(st.ridge.theta_hat, x) +
                             options_.alpha * scale * weighted_norm(st.pd, x);
        if (!have_best || index > best_index ||
            (index == best_index && arm.id < best_id)) {
            have_best = true;
            best_id = arm.id;
            best_index = index;
        }
    }
    return best_id;
}

void LinearPolicy::update(const DecisionRound& round, ArmId chosen, double nominal_reward) {
    const auto it = std::find_if(round.arms.begin(), round.arms.end(),
                                 [chosen](const ArmContext& a) { return a.id == chosen; });
    require(it != round.arms.end(), "update: chosen arm not in round");
    const Vector x = effective_context(it->context, round.variation_factor);
    const double r = effective_reward(nominal_reward, round.variation_factor);
    ArmState& st = state_for(chosen);
    ridge_observe(st.pd, st.ridge, x, r);
}

double LinearPolicy::normalized_factor(const DecisionRound& round) const {
    if (options_.mode != LinearMode::adaptive) return 0.0;
    return normalize_variation(round.variation_factor, options_.thresholds);
}

void LinearPolicy::set_thresholds(const ThresholdConfig& thresholds) {
    require(thresholds.lower <= thresholds.upper,
            "set_thresholds: thresholds.lower must be <= thresholds.upper");
    options_.thresholds = thresholds;
}

const PdState& LinearPolicy::pd_state() const {
    require(options_.model == ParameterModel::joint, "pd_state: policy is disjoint");
    return shared_.pd;
}

const RidgeState& LinearPolicy::ridge_state() const {
    require(options_.model == ParameterModel::joint, "ridge_state: policy is disjoint");
    return shared_.ridge;
}

const PdState& LinearPolicy::pd_state(ArmId arm) const {
    return const_cast<LinearPolicy*>(this)->state_for(arm).pd;
}

const RidgeState& LinearPolicy::ridge_state(ArmId arm) const {
    return const_cast<LinearPolicy*>(this)->state_for(arm).ridge;
}

nlohmann::json LinearPolicy::snapshot() const {
    nlohmann::json j;
    switch (options_.mode) {
        case LinearMode::adaptive: j["mode"] = "adaptive"; break;
        case LinearMode::extracted: j["mode"] = "extracted"; break;
        case LinearMode::multiply: j["mode"] = "multiply"; break;
        case LinearMode::combine: j["mode"] = "combine"; break;
    }
    j["model"] = options_.model == ParameterModel::joint ? "joint" : "disjoint";
    j["alpha"] = options_.alpha;
    if (options_.mode == LinearMode::adaptive) {
        j["thresholds"] = {{"lower", options_.thresholds.lower},
                           {"upper", options_.thresholds.upper}};
    }
    if (options_.model == ParameterModel::joint) {
        j["state"] = state_to_json(shared_.pd, shared_.ridge);
    } else {
        nlohmann::json arms = nlohmann::json::object();
        for (const auto& [id, st] : per_arm_) {
            arms[std::to_string(id)] = state_to_json(st.pd, st.ridge);
        }
        j["per_arm"] = std::move(arms);
    }
    return j;
}

// ---------------------------------------------------------------------------
// Empirical thresholds

EmpiricalThresholdTracker::EmpiricalThresholdTracker(double rho_lower, double rho_upper,
                                                     std::size_t window)
    : rho_lower_(rho_lower), rho_upper_(rho_upper), window_(window) {
    require(rho_lower >= 0.0 && rho_lower <= 1.0 && rho_upper >= 0.0 && rho_upper <= 1.0,
            "EmpiricalThresholdTracker: quantile levels must lie in [0, 1]");
}

void EmpiricalThresholdTracker::record(double variation) {
    if (samples_.empty()) {
        running_min_ = variation;
        running_max_ = variation;
    } else {
        running_min_ = std::min(running_min_, variation);
        running_max_ = std::max(running_max_, variation);
    }
    samples_.push_back(variation);
    if (window_ > 0 && samples_.size() > window_) {
        samples_.erase(samples_.begin(), samples_.end() - static_cast<std::ptrdiff_t>(window_));
        // Running extremes are only maintained for unbounded history.
    }
}

ThresholdConfig EmpiricalThresholdTracker::thresholds() const {
    if (samples_.empty()) return ThresholdConfig{0.0, 0.0};
    std::vector<double> sorted(samples_);
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const auto rank = [n](double rho) {
        const std::size_t k = static_cast<std::size_t>(std::ceil(rho * static_cast<double>(n)));
        return std::max<std::size_t>(1, std::min(k, n));
    };
    double lower = sorted[rank(rho_lower_) - 1];
    double upper = sorted[n - rank(rho_upper_)];
    if (lower > upper) upper = lower;
    return ThresholdConfig{lower, upper};
}

ThresholdConfig EmpiricalThresholdTracker::cached_thresholds() const {
    if (samples_.empty()) return ThresholdConfig{0.0, 0.0};
    if (rho_lower_ == 0.0 && rho_upper_ == 0.0 && window_ == 0) {
        return ThresholdConfig{running_min_, running_max_};
    }
    const std::size_t n = samples_.size();
    if (cached_at_ == 0 || n >= cached_at_ + std::max<std::size_t>(1, cached_at_ / 64)) {
        cached_ = thresholds();
        cached_at_ = n;
    }
    return cached_;
}

ThresholdConfig empirical_thresholds(const EmpiricalThresholdTracker& state) {
    return state.thresholds();
}

EmpiricalAdaptivePolicy::EmpiricalAdaptivePolicy(const LinearPolicyOptions& options,
                                                 double rho_lower, double rho_upper,
                                                 std::size_t window)
    : core_([&options] {
          LinearPolicyOptions o = options;
          o.mode = LinearMode::adaptive;
          return o;
      }()),
      tracker_(rho_lower, rho_upper, window) {}

void EmpiricalAdaptivePolicy::observe_factor(const DecisionRound& round) {
    if (last_recorded_slot_ && *last_recorded_slot_ == round.slot) return;
    tracker_.record(round.variation_factor);
    last_recorded_slot_ = round.slot;
    core_.set_thresholds(tracker_.cached_thresholds());
}

ArmId EmpiricalAdaptivePolicy::select_arm(const DecisionRound& round) {
    observe_factor(round);
    return core_.select_arm(round);
}

void EmpiricalAdaptivePolicy::update(const DecisionRound& round, ArmId chosen,
                                     double nominal_reward) {
    observe_factor(round);
    core_.update(round, chosen, nominal_reward);
}

double EmpiricalAdaptivePolicy::normalized_factor(const DecisionRound& round) const {
    return core_.normalized_factor(round);
}

nlohmann::json EmpiricalAdaptivePolicy::snapshot() const {
    nlohmann::json j = core_.snapshot();
    j["mode"] = "e_adaptive";
    j["quantiles"] = {{"rho_lower", tracker_.rho_lower()},
                      {"rho_upper", tracker_.rho_upper()},
                      {"samples", tracker_.sample_count()}};
    return j;
}

// ---------------------------------------------------------------------------
// RandomPolicy

ArmId RandomPolicy::select_arm(const DecisionRound& round) {
    require(!round.arms.empty(), "select_arm: empty arm set");
    return round.arms[rng_.uniform_index(round.arms.size())].id;
}

nlohmann::json RandomPolicy::snapshot() const { return {{"mode", "random"}}; }

// ---------------------------------------------------------------------------
// KernelUcbPolicy

Vector KernelUcbPolicy::augment(double variation, std::span<const double> x) {
    Vector augmented;
    augmented.reserve(x.size() + 1);
    augmented.push_back(variation);
    augmented.insert(augmented.end(), x.begin(), x.end());
    return augmented;
}

double KernelUcbPolicy::kernel(std::span<const double> a, std::span<const double> b) const {
    require(a.size() == b.size(), "kernel: dimension mismatch");
    double sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        sq += diff * diff;
    }
    return std::exp(-options_.kernel_gamma * sq);
}

double KernelUcbPolicy::index_for(std::span<const double> x_augmented) const {
    require(!history_.empty(), "index_for: no history yet, first action is forced");
    const std::size_t n = history_.size();
    require(x_augmented.size() == history_.front().size(), "index_for: dimension mismatch");

    Vector k(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) k[i] = kernel(x_augmented, history_[i]);

    Vector gk(n, 0.0);  // (K + lambda I)^{-1} k
    for (std::size_t i = 0; i < n; ++i) gk[i] = dot(gram_inverse_[i], k);

    const double mean = dot(rewards_, gk);
    const double variance = kernel(x_augmented, x_augmented) - dot(k, gk);
    return mean + options_.alpha * std::sqrt(std::max(0.0, variance));
}

void KernelUcbPolicy::refactor_gram_inverse() {
    const std::size_t n = history_.size();
    Matrix gram(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double v = kernel(history_[i], history_[j]);
            if (i == j) v += options_.ridge_lambda;
            gram(i, j) = v;
            gram(j, i) = v;
        }
    }
    const Matrix inv = cholesky_inverse(gram);
    gram_inverse_.assign(n, Vector(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) gram_inverse_[i][j] = inv(i, j);
}

void KernelUcbPolicy::extend(Vector x_augmented, double reward) {
    const std::size_t n = history_.size();
    const double kappa = kernel(x_augmented, x_augmented) + options_.ridge_lambda;
    if (n == 0) {
        history_.push_back(std::move(x_augmented));
        rewards_.push_back(reward);
        gram_inverse_.assign(1, Vector(1, 1.0 / kappa));
        return;
    }
    require(x_augmented.size() == history_.front().size(), "extend: dimension mismatch");

    Vector k(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) k[i] = kernel(x_augmented, history_[i]);
    Vector gk(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) gk[i] = dot(gram_inverse_[i], k);
    const double schur = kappa - dot(k, gk);

    history_.push_back(std::move(x_augmented));
    rewards_.push_back(reward);

    if (!(schur > 1e-12 * kappa)) {
        refactor_gram_inverse();
        return;
    }

    const double inv_schur = 1.0 / schur;
    for (std::size_t i = 0; i < n; ++i) {
        Vector& row = gram_inverse_[i];
        const double gi = gk[i] * inv_schur;
        for (std::size_t j = 0; j < n; ++j) row[j] += gi * gk[j];
        row.push_back(-gi);
    }
    Vector last(n + 1, 0.0);
    for (std::size_t j = 0; j < n; ++j) last[j] = -gk[j] * inv_schur;
    last[n] = inv_schur;
    gram_inverse_.push_back(std::move(last));
}

ArmId KernelUcbPolicy::select_arm(const DecisionRound& round) {
    require(!round.arms.empty(), "select_arm: empty arm set");
    if (history_.empty()) return round.arms.front().id;
    bool have_best = false;
    ArmId best_id = 0;
    double best_index = 0.0;
    for (const ArmContext& arm : round.arms) {
        const Vector x = augment(round.variation_factor, arm.context);
        const double index = index_for(x);
        if (!have_best || index > best_index ||
            (index == best_index && arm.id < best_id)) {
            have_best = true;
            best_id = arm.id;
            best_index = index;
        }
    }
    return best_id;
}

void KernelUcbPolicy::update(const DecisionRound& round, ArmId chosen, double nominal_reward) {
    const auto it = std::find_if(round.arms.begin(), round.arms.end(),
                                 [chosen](const ArmContext& a) { return a.id == chosen; });
    require(it != round.arms.end(), "update: chosen arm not in round");
    extend(augment(round.variation_factor, it->context), nominal_reward);
}

nlohmann::json KernelUcbPolicy::snapshot() const {
    return {{"mode", "kernel_ucb"},
            {"alpha", options_.alpha},
            {"kernel_gamma", options_.kernel_gamma},
            {"ridge_lambda", options_.ridge_lambda},
            {"history", history_.size()}};
}

// ---------------------------------------------------------------------------
// Config-driven construction

namespace {

ParameterModel parse_model(const std::string& text) {
    if (text == "joint") return ParameterModel::joint;
    if (text == "disjoint") return ParameterModel::disjoint;
    throw std::invalid_argument("policy config: unknown model '" + text + "'");
}

RewardSignal parse_reward_signal(const std::string& text) {
    if (text == "nominal") return RewardSignal::nominal;
    if (text == "actual") return RewardSignal::actual;
    throw std::invalid_argument("policy config: unknown reward_signal '" + text + "'");
}

}  // namespace

PolicyConfig PolicyConfig::from_json(const nlohmann::json& j) {
    PolicyConfig c;
    c.name = j.at("name").get<std::string>();
    c.label = j.value("label", c.name);
    c.alpha = j.value("alpha", 1.5);
    c.regularizer = j.value("regularizer", 1.0);
    if (j.contains("model")) c.model = parse_model(j.at("model").get<std::string>());
    if (j.contains("reward_signal"))
        c.reward_signal = parse_reward_signal(j.at("reward_signal").get<std::string>());
    if (j.contains("thresholds")) {
        c.thresholds.lower = j.at("thresholds").at("lower").get<double>();
        c.thresholds.upper = j.at("thresholds").at("upper").get<double>();
    }
    if (j.contains("quantiles")) {
        const auto& q = j.at("quantiles");
        c.rho_lower = q.value("rho_lower", 0.0);
        c.rho_upper = q.value("rho_upper", 0.0);
        c.window = q.value("window", static_cast<std::size_t>(0));
    }
    if (j.contains("kernel")) {
        const auto& k = j.at("kernel");
        c.kernel.alpha = c.alpha;
        c.kernel.kernel_gamma = k.value("gamma", 2.0);
        c.kernel.ridge_lambda = k.value("lambda", 0.5);
    }
    return c;
}

nlohmann::json PolicyConfig::to_json() const {
    nlohmann::json j{{"name", name},
                     {"label", label},
                     {"alpha", alpha},
                     {"model", model == ParameterModel::joint ? "joint" : "disjoint"},
                     {"regularizer", regularizer}};
    if (name == "adalinucb") {
        j["thresholds"] = {{"lower", thresholds.lower}, {"upper", thresholds.upper}};
    }
    if (name == "e_adalinucb") {
        j["quantiles"] = {{"rho_lower", rho_lower}, {"rho_upper", rho_upper}, {"window", window}};
    }
    if (name == "kernel_ucb") {
        j["kernel"] = {{"gamma", kernel.kernel_gamma}, {"lambda", kernel.ridge_lambda}};
    }
    if (reward_signal == RewardSignal::actual) j["reward_signal"] = "actual";
    return j;
}

std::unique_ptr<Policy> make_policy(const PolicyConfig& config, std::size_t dim,
                                    std::uint64_t seed) {
    LinearPolicyOptions options;
    options.dim = dim;
    options.alpha = config.alpha;
    options.model = config.model;
    options.regularizer = config.regularizer;
    options.thresholds = config.thresholds;
    options.reward_signal = config.reward_signal;

    if (config.name == "adalinucb") {
        options.mode = LinearMode::adaptive;
        return std::make_unique<LinearPolicy>(options);
    }
    if (config.name == "linucb_extracted") {
        options.mode = LinearMode::extracted;
        return std::make_unique<LinearPolicy>(options);
    }
    if (config.name == "linucb_multiply") {
        options.mode = LinearMode::multiply;
        return std::make_unique<LinearPolicy>(options);
    }
    if (config.name == "linucb_combine") {
        options.mode = LinearMode::combine;
        return std::make_unique<LinearPolicy>(options);
    }
    if (config.name == "e_adalinucb") {
        options.mode = LinearMode::adaptive;
        return std::make_unique<EmpiricalAdaptivePolicy>(options, config.rho_lower,
                                                         config.rho_upper, config.window);
    }
    if (config.name == "kernel_ucb") {
        KernelUcbOptions k = config.kernel;
        k.alpha = config.alpha;
        return std::make_unique<KernelUcbPolicy>(k);
    }
    if (config.name == "random") {
        return std::make_unique<RandomPolicy>(seed);
    }
    throw std::invalid_argument("policy config: unknown policy '" + config.name + "'");
}

}  // namespace oppbandit
