#include "oppbandit/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace oppbandit {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

}  // namespace

std::string format_double(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

// ---------------------------------------------------------------------------
// Episodes

RegretTrace run_episode(Policy& policy, const EnvironmentSpec& env, std::uint64_t horizon,
                        std::uint64_t rounds_seed) {
    require(horizon >= 1, "run_episode: horizon must be positive");
    Rng rng(derive_seed(env.seed, "episode", rounds_seed));

    RegretTrace trace;
    trace.slots.reserve(horizon);
    trace.cum_nominal_regret.reserve(horizon);
    trace.cum_actual_regret.reserve(horizon);
    trace.cum_nominal_reward.reserve(horizon);
    trace.cum_actual_reward.reserve(horizon);

    double cum_nr = 0.0, cum_ar = 0.0, cum_nrew = 0.0, cum_arew = 0.0;
    for (std::uint64_t t = 1; t <= horizon; ++t) {
        const DecisionRound round = sample_round(env, t, rng);
        const ArmId arm = policy.select_arm(round);
        const RoundOutcome outcome = realize_reward(env, round, arm, rng);
        policy.update(round, arm, outcome.nominal_reward);

        SlotRecord record;
        record.t = t;
        record.arm = arm;
        record.variation = round.variation_factor;
        record.normalized = policy.normalized_factor(round);
        record.nominal_regret = outcome.nominal_regret;
        record.actual_regret = outcome.actual_regret;
        record.nominal_reward = outcome.nominal_reward;
        record.actual_reward = outcome.actual_reward;
        trace.slots.push_back(record);

        cum_nr += outcome.nominal_regret;
        cum_ar += outcome.actual_regret;
        cum_nrew += outcome.nominal_reward;
        cum_arew += outcome.actual_reward;
        trace.cum_nominal_regret.push_back(cum_nr);
        trace.cum_actual_regret.push_back(cum_ar);
        trace.cum_nominal_reward.push_back(cum_nrew);
        trace.cum_actual_reward.push_back(cum_arew);
    }
    return trace;
}

RegretTrace run_episode(const PolicyConfig& config, const EnvironmentSpec& env,
                        std::uint64_t horizon, std::uint64_t seed) {
    auto policy = make_policy(config, env.dim, derive_seed(seed, "policy:" + config.name, 0));
    return run_episode(*policy, env, horizon, derive_seed(seed, "rounds", 0));
}

std::pair<double, double> decompose_regret(const RegretTrace& trace,
                                           const ThresholdConfig& thresholds) {
    double low = 0.0, high = 0.0;
    for (const SlotRecord& record : trace.slots) {
        if (record.variation <= thresholds.lower) {
            low += record.nominal_regret;
        } else {
            high += record.nominal_regret;
        }
    }
    return {low, high};
}

// ---------------------------------------------------------------------------
// Replay log IO

ReplayLog load_replay_log(std::istream& in) {
    ReplayLog log;
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            ++log.malformed_lines;
            continue;
        }
        try {
            ReplayRecord record;
            record.ts = j.value("ts", static_cast<std::uint64_t>(log.records.size()));
            record.displayed = j.at("displayed").get<ArmId>();
            record.reward = j.at("reward").get<double>();
            record.variation = j.value("L", 0.0);
            for (const auto& entry : j.at("pool")) {
                ArmContext arm;
                arm.id = entry.at("id").get<ArmId>();
                arm.context = entry.at("x").get<Vector>();
                record.pool.push_back(std::move(arm));
            }
            log.records.push_back(std::move(record));
        } catch (const nlohmann::json::exception&) {
            ++log.malformed_lines;
        }
    }
    return log;
}

ReplayLog load_replay_log_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("replay log: cannot open '" + path + "'");
    return load_replay_log(in);
}

void write_replay_log(std::ostream& out, const ReplayLog& log) {
    for (const ReplayRecord& record : log.records) {
        nlohmann::json pool = nlohmann::json::array();
        for (const ArmContext& arm : record.pool) {
            pool.push_back({{"id", arm.id}, {"x", arm.context}});
        }
        nlohmann::json j{{"ts", record.ts},
                         {"displayed", record.displayed},
                         {"pool", std::move(pool)},
                         {"reward", record.reward},
                         {"L", record.variation}};
        out << j.dump() << "\n";
    }
}

// ---------------------------------------------------------------------------
// Replay evaluation

ReplayResult replay_offline(Policy& policy, const ReplayLog& log, const ReplayOptions& options) {
    require(log.length() > 0, "replay_offline: empty log");

    ReplayResult result;
    result.invalid = log.malformed_lines;

    std::size_t events = 0;
    for (const ReplayRecord& record : log.records) {
        ++events;
        const bool displayed_in_pool =
            std::any_of(record.pool.begin(), record.pool.end(),
                        [&](const ArmContext& a) { return a.id == record.displayed; });
        if (record.pool.empty() || !displayed_in_pool) {
            ++result.invalid;
        } else {
            DecisionRound round;
            round.slot = events;
            round.arms = record.pool;
            round.variation_factor =
                options.variation_override.empty()
                    ? record.variation
                    : options.variation_override[(events - 1) % options.variation_override.size()];

            const ArmId choice = policy.select_arm(round);
            if (choice == record.displayed) {
                ++result.matched;
                result.matched_nominal_reward += record.reward;
                result.matched_actual_reward += round.variation_factor * record.reward;
                policy.update(round, choice, record.reward);
            } else {
                ++result.discarded;
            }
        }

        if (options.checkpoint_every > 0 &&
            (events % options.checkpoint_every == 0 || events == log.records.size())) {
            result.series.push_back({events, result.matched, result.matched_nominal_reward,
                                     result.matched_actual_reward});
        }
    }
    return result;
}

ReplayLog generate_uniform_log(const EnvironmentSpec& env, std::size_t num_events,
                               std::uint64_t seed) {
    Rng round_rng(derive_seed(seed, "log-rounds", 0));
    Rng display_rng(derive_seed(seed, "log-display", 0));

    ReplayLog log;
    log.records.reserve(num_events);
    for (std::size_t i = 1; i <= num_events; ++i) {
        const DecisionRound round = sample_round(env, i, round_rng);
        const std::size_t pick = display_rng.uniform_index(round.arms.size());
        const ArmId displayed = round.arms[pick].id;
        const RoundOutcome outcome = realize_reward(env, round, displayed, round_rng);

        ReplayRecord record;
        record.ts = i;
        record.displayed = displayed;
        record.pool = round.arms;
        record.reward = outcome.nominal_reward;
        record.variation = round.variation_factor;
        log.records.push_back(std::move(record));
    }
    return log;
}

// ---------------------------------------------------------------------------
// Aggregation

Aggregate aggregate_runs(const std::vector<RegretTrace>& traces,
                         const std::vector<std::uint64_t>& checkpoints) {
    require(!traces.empty(), "aggregate_runs: no traces");
    require(!checkpoints.empty(), "aggregate_runs: no checkpoints");

    std::vector<std::uint64_t> sorted(checkpoints);
    std::sort(sorted.begin(), sorted.end());
    const std::uint64_t max_checkpoint = sorted.back();
    for (const RegretTrace& trace : traces) {
        require(trace.horizon() >= max_checkpoint,
                "aggregate_runs: trace shorter than max checkpoint");
    }

    Aggregate out;
    out.checkpoints = sorted;
    const double n = static_cast<double>(traces.size());

    const auto fill = [&](AggregateSeries& series, auto accessor) {
        series.mean.reserve(sorted.size());
        series.standard_error.reserve(sorted.size());
        for (std::uint64_t checkpoint : sorted) {
            const std::size_t index = static_cast<std::size_t>(checkpoint - 1);
            double sum = 0.0;
            for (const RegretTrace& trace : traces) sum += accessor(trace)[index];
            const double mean = sum / n;
            double se = 0.0;
            if (traces.size() >= 2) {
                double ss = 0.0;
                for (const RegretTrace& trace : traces) {
                    const double d = accessor(trace)[index] - mean;
                    ss += d * d;
                }
                se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
            }
            series.mean.push_back(mean);
            series.standard_error.push_back(se);
        }
    };

    fill(out.cum_nominal_regret, [](const RegretTrace& t) -> const std::vector<double>& {
        return t.cum_nominal_regret;
    });
    fill(out.cum_actual_regret, [](const RegretTrace& t) -> const std::vector<double>& {
        return t.cum_actual_regret;
    });
    fill(out.cum_nominal_reward, [](const RegretTrace& t) -> const std::vector<double>& {
        return t.cum_nominal_reward;
    });
    fill(out.cum_actual_reward, [](const RegretTrace& t) -> const std::vector<double>& {
        return t.cum_actual_reward;
    });
    return out;
}

// ---------------------------------------------------------------------------
// CSV

void write_trace_csv(std::ostream& out, const RegretTrace& trace,
                     const std::vector<std::uint64_t>& checkpoints) {
    out << kTraceCsvHeader << "\n";
    const auto emit = [&](std::size_t index) {
        const SlotRecord& r = trace.slots[index];
        out << r.t << ',' << r.arm << ',' << format_double(r.variation) << ','
            << format_double(r.normalized) << ',' << format_double(r.nominal_regret) << ','
            << format_double(r.actual_regret) << ','
            << format_double(trace.cum_nominal_regret[index]) << ','
            << format_double(trace.cum_actual_regret[index]) << "\n";
    };
    if (checkpoints.empty()) {
        for (std::size_t i = 0; i < trace.slots.size(); ++i) emit(i);
        return;
    }
    std::vector<std::uint64_t> sorted(checkpoints);
    std::sort(sorted.begin(), sorted.end());
    for (std::uint64_t checkpoint : sorted) {
        if (checkpoint >= 1 && checkpoint <= trace.horizon()) {
            emit(static_cast<std::size_t>(checkpoint - 1));
        }
    }
}

void write_aggregate_csv(std::ostream& out,
                         const std::vector<std::pair<std::string, Aggregate>>& per_policy) {
    out << "policy,t,mean_cum_actual_regret,se_cum_actual_regret,"
           "mean_cum_nominal_regret,se_cum_nominal_regret,"
           "mean_cum_actual_reward,se_cum_actual_reward,"
           "mean_cum_nominal_reward,se_cum_nominal_reward\n";
    for (const auto& [name, agg] : per_policy) {
        for (std::size_t i = 0; i < agg.checkpoints.size(); ++i) {
            out << name << ',' << agg.checkpoints[i] << ','
                << format_double(agg.cum_actual_regret.mean[i]) << ','
                << format_double(agg.cum_actual_regret.standard_error[i]) << ','
                << format_double(agg.cum_nominal_regret.mean[i]) << ','
                << format_double(agg.cum_nominal_regret.standard_error[i]) << ','
                << format_double(agg.cum_actual_reward.mean[i]) << ','
                << format_double(agg.cum_actual_reward.standard_error[i]) << ','
                << format_double(agg.cum_nominal_reward.mean[i]) << ','
                << format_double(agg.cum_nominal_reward.standard_error[i]) << "\n";
        }
    }
}

}  // namespace oppbandit
