#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "oppbandit/environments.hpp"
#include "oppbandit/policies.hpp"

namespace oppbandit {

struct SlotRecord {
    std::uint64_t t = 0;
    ArmId arm = 0;
    double variation = 0.0;
    double normalized = 0.0;
    double nominal_regret = 0.0;
    double actual_regret = 0.0;
    double nominal_reward = 0.0;
    double actual_reward = 0.0;
};

// Per-slot history of one episode plus running cumulative series. The actual
// series is accumulated from variation * nominal per slot, so the partition
// identities used by the tests hold bit-exactly.
struct RegretTrace {
    std::vector<SlotRecord> slots;
    std::vector<double> cum_nominal_regret;
    std::vector<double> cum_actual_regret;
    std::vector<double> cum_nominal_reward;
    std::vector<double> cum_actual_reward;

    std::uint64_t horizon() const { return slots.size(); }
};

// One full episode: sample round -> select -> realize -> update, feeding the
// policy the nominal reward. The environment stream (groups, variation
// factors, noise) is a function of (env.seed, rounds_seed) only, so distinct
// policies replayed with the same pair face identical worlds.
RegretTrace run_episode(Policy& policy, const EnvironmentSpec& env, std::uint64_t horizon,
                        std::uint64_t rounds_seed);

// Convenience overload building the policy from its config with a derived seed.
RegretTrace run_episode(const PolicyConfig& config, const EnvironmentSpec& env,
                        std::uint64_t horizon, std::uint64_t seed);

// Splits cumulative nominal regret into slots with L <= thresholds.lower and
// the rest; the two parts sum to the total exactly.
std::pair<double, double> decompose_regret(const RegretTrace& trace,
                                           const ThresholdConfig& thresholds);

// ---------------------------------------------------------------------------
// Offline replay

struct ReplayRecord {
    std::uint64_t ts = 0;
    ArmId displayed = 0;
    std::vector<ArmContext> pool;
    double reward = 0.0;
    double variation = 0.0;
};

struct ReplayLog {
    std::vector<ReplayRecord> records;
    std::size_t malformed_lines = 0;

    std::size_t length() const { return records.size() + malformed_lines; }
};

// JSON-lines, one record per line:
//   {"ts":..,"displayed":..,"pool":[{"id":..,"x":[..]},..],"reward":..,"L":..}
ReplayLog load_replay_log(std::istream& in);
ReplayLog load_replay_log_file(const std::string& path);
void write_replay_log(std::ostream& out, const ReplayLog& log);

struct ReplayCheckpoint {
    std::size_t events = 0;   // log records consumed so far
    std::size_t matched = 0;
    double cum_nominal_reward = 0.0;
    double cum_actual_reward = 0.0;
};

struct ReplayResult {
    std::size_t matched = 0;
    std::size_t discarded = 0;
    std::size_t invalid = 0;
    double matched_nominal_reward = 0.0;
    double matched_actual_reward = 0.0;
    std::vector<ReplayCheckpoint> series;

    double reward_per_match() const {
        return matched == 0 ? 0.0 : matched_nominal_reward / static_cast<double>(matched);
    }
    double actual_reward_per_match() const {
        return matched == 0 ? 0.0 : matched_actual_reward / static_cast<double>(matched);
    }
};

struct ReplayOptions {
    // When nonempty, replaces the logged variation factors positionally,
    // cycling if shorter than the log.
    std::vector<double> variation_override;
    std::size_t checkpoint_every = 1000;
};

// Rejection replay for logs collected under uniform-random display: an event
// is revealed to the policy only when its selection matches the logged arm;
// everything else is discarded with no state change.
ReplayResult replay_offline(Policy& policy, const ReplayLog& log,
                            const ReplayOptions& options = {});

// Synthetic log: rounds drawn from the environment, displayed arm uniform,
// logged reward the realized nominal reward of the displayed arm.
ReplayLog generate_uniform_log(const EnvironmentSpec& env, std::size_t num_events,
                               std::uint64_t seed);

// ---------------------------------------------------------------------------
// Aggregation

struct AggregateSeries {
    std::vector<double> mean;
    std::vector<double> standard_error;  // 0 when only one replication
};

struct Aggregate {
    std::vector<std::uint64_t> checkpoints;
    AggregateSeries cum_nominal_regret;
    AggregateSeries cum_actual_regret;
    AggregateSeries cum_nominal_reward;
    AggregateSeries cum_actual_reward;
};

Aggregate aggregate_runs(const std::vector<RegretTrace>& traces,
                         const std::vector<std::uint64_t>& checkpoints);

// ---------------------------------------------------------------------------
// CSV emission

inline constexpr const char* kTraceCsvHeader =
    "t,arm,L,l_tilde,nominal_regret,actual_regret,cum_nominal,cum_actual";

// Writes trace rows; when checkpoints is empty every slot is emitted.
void write_trace_csv(std::ostream& out, const RegretTrace& trace,
                     const std::vector<std::uint64_t>& checkpoints);

void write_aggregate_csv(std::ostream& out,
                         const std::vector<std::pair<std::string, Aggregate>>& per_policy);

std::string format_double(double value);

}  // namespace oppbandit
