#include <algorithm>
#include <atomic>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oppbandit/bounds.hpp"
#include "oppbandit/environments.hpp"
#include "oppbandit/evaluation.hpp"
#include "oppbandit/policies.hpp"

#include "CLI11.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace oppbandit;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open '" + path + "'");
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw UsageError("invalid JSON in '" + path + "'");
    return j;
}

std::string sanitize(const std::string& name) {
    std::string out;
    for (char c : name) {
        out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
    }
    return out;
}

std::ofstream open_output(const fs::path& dir, const std::string& filename) {
    fs::create_directories(dir);
    std::ofstream out(dir / filename);
    if (!out) throw std::runtime_error("cannot write '" + (dir / filename).string() + "'");
    return out;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateConfig {
    nlohmann::json environment;  // inline generator config or {"path": ...}
    std::vector<PolicyConfig> policies;
    std::uint64_t horizon = 0;
    std::size_t replications = 1;
    std::vector<std::uint64_t> checkpoints;
    std::uint64_t seed = 1;
    std::string output = "out";
};

EnvironmentConfig parse_environment_config(const nlohmann::json& j) {
    EnvironmentConfig config;
    config.num_arms = j.value("num_arms", config.num_arms);
    config.num_context_groups = j.value("num_context_groups", config.num_context_groups);
    config.dim = j.value("dim", config.dim);
    config.noise_sigma = j.value("noise_sigma", config.noise_sigma);
    if (j.value("noise_kind", std::string("gaussian")) == "bounded_uniform") {
        config.noise_kind = NoiseKind::bounded_uniform;
    }
    if (j.contains("variation")) config.variation = VariationProcess::from_json(j.at("variation"));
    config.joint_rewards = j.value("joint_rewards", false);
    return config;
}

SimulateConfig parse_simulate_config(const nlohmann::json& j) {
    SimulateConfig config;
    if (!j.contains("environment")) throw UsageError("config: missing 'environment' section");
    config.environment = j.at("environment");
    if (!j.contains("policies") || !j.at("policies").is_array() || j.at("policies").empty()) {
        throw UsageError("config: 'policies' must be a nonempty array");
    }
    for (const auto& p : j.at("policies")) config.policies.push_back(PolicyConfig::from_json(p));
    config.horizon = j.value("horizon", static_cast<std::uint64_t>(0));
    config.replications = j.value("replications", static_cast<std::size_t>(1));
    config.seed = j.value("seed", static_cast<std::uint64_t>(1));
    config.output = j.value("output", std::string("out"));

    if (config.horizon < 1) throw UsageError("config: horizon must be >= 1");
    if (config.replications < 1) throw UsageError("config: replications must be >= 1");

    std::uint64_t every = 100;
    if (j.contains("checkpoints")) {
        const auto& c = j.at("checkpoints");
        if (c.is_array()) {
            config.checkpoints = c.get<std::vector<std::uint64_t>>();
        } else if (c.is_object() && c.contains("every")) {
            every = c.at("every").get<std::uint64_t>();
        } else {
            throw UsageError("config: checkpoints must be an array or {\"every\": N}");
        }
    }
    if (config.checkpoints.empty()) {
        for (std::uint64_t t = every; t <= config.horizon; t += every) {
            config.checkpoints.push_back(t);
        }
        if (config.checkpoints.empty() || config.checkpoints.back() != config.horizon) {
            config.checkpoints.push_back(config.horizon);
        }
    }
    std::sort(config.checkpoints.begin(), config.checkpoints.end());
    if (config.checkpoints.back() > config.horizon) {
        throw UsageError("config: horizon must be >= max checkpoint (horizon=" +
                         std::to_string(config.horizon) + ", max checkpoint=" +
                         std::to_string(config.checkpoints.back()) + ")");
    }

    std::vector<std::string> labels;
    for (const auto& p : config.policies) labels.push_back(p.label);
    std::sort(labels.begin(), labels.end());
    if (std::adjacent_find(labels.begin(), labels.end()) != labels.end()) {
        throw UsageError("config: policy labels must be unique");
    }
    return config;
}

int run_simulate(const std::string& config_path, std::optional<std::uint64_t> seed_override,
                 std::optional<std::string> out_override, unsigned jobs, bool verbose) {
    SimulateConfig config = parse_simulate_config(load_json_file(config_path));
    if (seed_override) config.seed = *seed_override;
    if (out_override) config.output = *out_override;

    // One environment per replication, shared by every policy in that
    // replication so all learners face the same rounds and noise.
    std::vector<EnvironmentSpec> environments;
    environments.reserve(config.replications);
    if (config.environment.contains("path")) {
        const EnvironmentSpec loaded = EnvironmentSpec::from_json(
            load_json_file(config.environment.at("path").get<std::string>()));
        environments.assign(config.replications, loaded);
    } else {
        EnvironmentConfig env_config = parse_environment_config(config.environment);
        for (std::size_t rep = 0; rep < config.replications; ++rep) {
            env_config.seed = derive_seed(config.seed, "env", rep);
            environments.push_back(generate_environment(env_config));
        }
    }

    const std::size_t num_policies = config.policies.size();
    std::vector<std::vector<RegretTrace>> traces(num_policies);
    for (auto& t : traces) t.resize(config.replications);

    struct Task {
        std::size_t policy;
        std::size_t rep;
    };
    std::vector<Task> tasks;
    for (std::size_t p = 0; p < num_policies; ++p) {
        for (std::size_t rep = 0; rep < config.replications; ++rep) tasks.push_back({p, rep});
    }

    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::string first_error;
    const unsigned worker_count =
        std::max(1u, std::min(jobs, static_cast<unsigned>(tasks.size())));

    std::vector<nlohmann::json> snapshots(tasks.size());
    const auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            const Task task = tasks[i];
            const PolicyConfig& pc = config.policies[task.policy];
            try {
                auto policy = make_policy(
                    pc, environments[task.rep].dim,
                    derive_seed(config.seed, "policy:" + pc.label, task.rep));
                traces[task.policy][task.rep] =
                    run_episode(*policy, environments[task.rep], config.horizon, task.rep);
                if (verbose) snapshots[i] = policy->snapshot();
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (first_error.empty()) {
                    first_error = "episode failed (policy=" + pc.label +
                                  ", replication=" + std::to_string(task.rep) +
                                  ", seed=" + std::to_string(config.seed) + "): " + e.what();
                }
                return;
            }
        }
    };

    std::vector<std::thread> workers;
    for (unsigned w = 0; w < worker_count; ++w) workers.emplace_back(worker);
    for (auto& w : workers) w.join();
    if (!first_error.empty()) {
        std::cerr << "error: " << first_error << "\n";
        return kExitRuntime;
    }

    const fs::path out_dir(config.output);
    std::vector<std::pair<std::string, Aggregate>> per_policy;
    for (std::size_t p = 0; p < num_policies; ++p) {
        per_policy.emplace_back(config.policies[p].label,
                                aggregate_runs(traces[p], config.checkpoints));
    }

    {
        auto out = open_output(out_dir, "aggregate.csv");
        write_aggregate_csv(out, per_policy);
    }
    for (std::size_t p = 0; p < num_policies; ++p) {
        for (std::size_t rep = 0; rep < config.replications; ++rep) {
            auto out = open_output(out_dir, "trace_" + sanitize(config.policies[p].label) +
                                                "_rep" + std::to_string(rep) + ".csv");
            write_trace_csv(out, traces[p][rep],
                            verbose ? std::vector<std::uint64_t>{} : config.checkpoints);
        }
    }
    for (std::size_t rep = 0; rep < config.replications; ++rep) {
        auto out = open_output(out_dir, "env_rep" + std::to_string(rep) + ".json");
        out << environments[rep].to_json().dump(2) << "\n";
    }
    if (verbose) {
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            auto out = open_output(
                out_dir, "snapshot_" + sanitize(config.policies[tasks[i].policy].label) +
                             "_rep" + std::to_string(tasks[i].rep) + ".json");
            out << snapshots[i].dump(2) << "\n";
        }
    }
    {
        nlohmann::json resolved{{"config", config_path},
                                {"seed", config.seed},
                                {"horizon", config.horizon},
                                {"replications", config.replications}};
        auto out = open_output(out_dir, "run_config.json");
        out << resolved.dump(2) << "\n";
    }

    std::cout << "final cumulative regret at t=" << config.checkpoints.back() << " (mean +/- se over "
              << config.replications << " replications)\n";
    for (const auto& [label, agg] : per_policy) {
        const std::size_t last = agg.checkpoints.size() - 1;
        std::cout << "  " << label << ": actual=" << agg.cum_actual_regret.mean[last] << " +/- "
                  << agg.cum_actual_regret.standard_error[last]
                  << "  nominal=" << agg.cum_nominal_regret.mean[last] << " +/- "
                  << agg.cum_nominal_regret.standard_error[last] << "\n";
    }
    std::cout << "wrote " << (out_dir / "aggregate.csv").string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// replay

int run_replay(const std::string& config_path, std::optional<std::uint64_t> seed_override,
               std::optional<std::string> out_override) {
    const nlohmann::json j = load_json_file(config_path);
    if (!j.contains("log")) throw UsageError("config: missing 'log' path");
    if (!j.contains("policies") || !j.at("policies").is_array() || j.at("policies").empty()) {
        throw UsageError("config: 'policies' must be a nonempty array");
    }
    std::vector<PolicyConfig> policies;
    for (const auto& p : j.at("policies")) policies.push_back(PolicyConfig::from_json(p));
    std::uint64_t seed = j.value("seed", static_cast<std::uint64_t>(1));
    if (seed_override) seed = *seed_override;
    std::string output = j.value("output", std::string("out"));
    if (out_override) output = *out_override;

    ReplayLog log;
    try {
        log = load_replay_log_file(j.at("log").get<std::string>());
    } catch (const std::runtime_error& e) {
        throw UsageError(e.what());
    }
    if (log.length() == 0) throw UsageError("replay log is empty");
    if (log.records.empty()) {
        std::cerr << "error: no parsable records (" << log.malformed_lines
                  << " malformed lines)\n";
        return kExitRuntime;
    }

    ReplayOptions options;
    options.checkpoint_every = j.value("checkpoint_every", static_cast<std::size_t>(1000));
    if (j.contains("variation_trace")) {
        options.variation_override =
            load_trace_file(j.at("variation_trace").get<std::string>());
        if (options.variation_override.size() < log.records.size()) {
            std::cerr << "warning: variation trace shorter than log ("
                      << options.variation_override.size() << " < " << log.records.size()
                      << "); factors cycle\n";
        }
    }

    std::size_t structurally_invalid = 0;
    for (const ReplayRecord& record : log.records) {
        const bool ok = !record.pool.empty() &&
                        std::any_of(record.pool.begin(), record.pool.end(),
                                    [&](const ArmContext& a) { return a.id == record.displayed; });
        if (!ok) ++structurally_invalid;
    }
    const std::size_t invalid_total = structurally_invalid + log.malformed_lines;
    if (2 * invalid_total > log.length()) {
        std::cerr << "error: " << invalid_total << " of " << log.length()
                  << " log entries are invalid (>50%); aborting\n";
        return kExitRuntime;
    }

    std::size_t dim = 0;
    for (const ReplayRecord& record : log.records) {
        if (!record.pool.empty()) {
            dim = record.pool.front().context.size();
            break;
        }
    }

    const fs::path out_dir(output);
    auto summary = open_output(out_dir, "replay_summary.csv");
    summary << "policy,events,matched,discarded,invalid,cum_reward,cum_actual_reward,"
               "reward_per_match,actual_reward_per_match\n";

    for (const PolicyConfig& pc : policies) {
        auto policy = make_policy(pc, dim, derive_seed(seed, "policy:" + pc.label, 0));
        const ReplayResult result = replay_offline(*policy, log, options);

        auto out = open_output(out_dir, "replay_" + sanitize(pc.label) + ".csv");
        out << "policy,events,matched,cum_reward,cum_actual_reward\n";
        for (const ReplayCheckpoint& point : result.series) {
            out << pc.label << ',' << point.events << ',' << point.matched << ','
                << format_double(point.cum_nominal_reward) << ','
                << format_double(point.cum_actual_reward) << "\n";
        }

        summary << pc.label << ',' << log.length() << ',' << result.matched << ','
                << result.discarded << ',' << result.invalid << ','
                << format_double(result.matched_nominal_reward) << ','
                << format_double(result.matched_actual_reward) << ','
                << format_double(result.reward_per_match()) << ','
                << format_double(result.actual_reward_per_match()) << "\n";

        std::cout << pc.label << ": matched " << result.matched << "/" << log.length()
                  << ", reward/match " << result.reward_per_match() << ", actual reward/match "
                  << result.actual_reward_per_match() << "\n";
    }
    std::cout << "wrote " << (out_dir / "replay_summary.csv").string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// bounds

int run_bounds(const std::string& constants_path, const std::string& grid_text,
               std::optional<std::string> out_override) {
    BoundConstants constants = BoundConstants::from_json(load_json_file(constants_path));
    try {
        validate(constants);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    std::vector<double> grid;
    std::stringstream ss(grid_text);
    std::string token;
    while (std::getline(ss, token, ',')) {
        if (!token.empty()) grid.push_back(std::stod(token));
    }
    if (grid.empty()) throw UsageError("t-grid is empty");
    for (double t : grid) {
        if (t < 1.0) throw UsageError("t-grid values must be >= 1");
    }
    std::sort(grid.begin(), grid.end());

    const std::uint64_t slots = c_slots(constants);
    const bool have_conditional =
        constants.cond_low_mean > 0.0 || constants.cond_high_mean > 0.0;

    std::ostringstream csv;
    csv << "t,bound_adalinucb,bound_linucb,c_slots,alpha_t,bound_adalinucb_continuous,"
           "bound_linucb_general,ada_logsq_coeff,linucb_logsq_coeff\n";
    for (double t : grid) {
        csv << format_double(t) << ',' << format_double(bound_adalinucb_binary(constants, t))
            << ',' << format_double(bound_linucb(constants, t)) << ',' << slots << ','
            << format_double(alpha_schedule(constants, t)) << ','
            << (have_conditional ? format_double(bound_adalinucb_continuous(constants, t))
                                 : std::string(""))
            << ',' << format_double(bound_linucb_general(constants, t)) << ','
            << format_double(adaptive_logsq_coefficient(constants)) << ','
            << format_double(linucb_logsq_coefficient(constants)) << "\n";
    }

    if (out_override) {
        auto out = open_output(fs::path(*out_override), "bounds.csv");
        out << csv.str();
        std::cout << "wrote " << (fs::path(*out_override) / "bounds.csv").string() << "\n";
    } else {
        std::cout << csv.str();
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"opportunistic linear contextual bandits: simulation, replay, bounds"};
    app.require_subcommand(1);

    std::string config_path;
    std::string constants_path;
    std::string grid_text = "1000,10000,100000";
    std::optional<std::uint64_t> seed_override;
    std::optional<std::string> out_override;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    bool verbose = false;

    std::uint64_t seed_value = 0;
    std::string out_value;

    auto* simulate = app.add_subcommand("simulate", "run seeded multi-replication experiments");
    simulate->add_option("--config", config_path, "experiment config JSON")->required();
    auto* sim_seed = simulate->add_option("--seed", seed_value, "master seed override");
    auto* sim_out = simulate->add_option("--out", out_value, "output directory override");
    simulate->add_option("--jobs", jobs, "max concurrent episodes");
    simulate->add_flag("--verbose", verbose, "emit full per-slot trace CSVs");

    auto* replay = app.add_subcommand("replay", "offline rejection replay of a logged dataset");
    replay->add_option("--config", config_path, "replay config JSON")->required();
    auto* rep_seed = replay->add_option("--seed", seed_value, "seed override");
    auto* rep_out = replay->add_option("--out", out_value, "output directory override");

    auto* bounds = app.add_subcommand("bounds", "evaluate regret-bound formulas over a horizon grid");
    bounds->add_option("--constants", constants_path, "bound constants JSON")->required();
    bounds->add_option("--t-grid", grid_text, "comma-separated horizons");
    auto* bnd_out = bounds->add_option("--out", out_value, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (simulate->parsed()) {
            if (sim_seed->count() > 0) seed_override = seed_value;
            if (sim_out->count() > 0) out_override = out_value;
            return run_simulate(config_path, seed_override, out_override, jobs, verbose);
        }
        if (replay->parsed()) {
            if (rep_seed->count() > 0) seed_override = seed_value;
            if (rep_out->count() > 0) out_override = out_value;
            return run_replay(config_path, seed_override, out_override);
        }
        if (bounds->parsed()) {
            if (bnd_out->count() > 0) out_override = out_value;
            return run_bounds(constants_path, grid_text, out_override);
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
