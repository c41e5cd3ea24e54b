/*
 * Copyright 2026 The mumimo-sched Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Experiment orchestration behind the command-line tool: flat key=value
// configuration, sweeps over K / T / V / scheduler, a bounded worker pool,
// and CSV output.
//
// Seed rule: replication r at K = k runs with
//   derive_seed(master_seed, "users=<k>", r)
// so every scheduler, T and V at the same K and r sees the same channel,
// beam and arrival sample paths.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "mumimo/analysis.hpp"
#include "mumimo/common.hpp"
#include "mumimo/engine.hpp"

namespace mumimo {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Ordered key -> value map read from `key = value` lines; `#` starts a comment.
using ConfigMap = std::map<std::string, std::string>;

inline std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::pair<std::string, std::string> split_assignment(std::string_view line)
{
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
        throw ConfigError("expected key=value, got '" + std::string(line) + "'");
    }
    auto key = trim(line.substr(0, eq));
    if (key.empty()) {
        throw ConfigError("empty key in '" + std::string(line) + "'");
    }
    return {key, trim(line.substr(eq + 1))};
}

inline ConfigMap parse_config(std::istream& in)
{
    ConfigMap out;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        if (trim(line).empty()) {
            continue;
        }
        auto [k, v] = split_assignment(line);
        out[k] = v;
    }
    return out;
}

inline ConfigMap read_config_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read config file " + path.string());
    }
    return parse_config(in);
}

inline std::vector<std::string> split_list(const std::string& value)
{
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

inline double parse_double(const std::string& key, const std::string& value)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) {
            throw std::invalid_argument(value);
        }
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key + ": '" + value + "' is not a number");
    }
}

inline std::int64_t parse_int(const std::string& key, const std::string& value)
{
    const double v = parse_double(key, value);
    if (v != std::floor(v) || std::abs(v) > 9e15) {
        throw ConfigError(key + ": '" + value + "' is not an integer");
    }
    return static_cast<std::int64_t>(v);
}

inline bool parse_bool(const std::string& key, const std::string& value)
{
    if (value == "true" || value == "1" || value == "yes") {
        return true;
    }
    if (value == "false" || value == "0" || value == "no") {
        return false;
    }
    throw ConfigError(key + ": '" + value + "' is not a boolean");
}

/// Accepts "a,b,c" or "start:step:stop" (inclusive).
inline std::vector<double> parse_grid(const std::string& key, const std::string& value)
{
    std::vector<double> out;
    if (value.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(value);
        std::string p;
        while (std::getline(ss, p, ':')) {
            parts.push_back(trim(p));
        }
        if (parts.size() != 3) {
            throw ConfigError(key + ": range must be start:step:stop");
        }
        const double start = parse_double(key, parts[0]);
        const double step = parse_double(key, parts[1]);
        const double stop = parse_double(key, parts[2]);
        if (!(step > 0.0) || stop < start) {
            throw ConfigError(key + ": range needs step > 0 and stop >= start");
        }
        const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
        for (std::size_t i = 0; i < n; ++i) {
            out.push_back(start + static_cast<double>(i) * step);
        }
        return out;
    }
    for (const auto& item : split_list(value)) {
        out.push_back(parse_double(key, item));
    }
    if (out.empty()) {
        throw ConfigError(key + ": empty list");
    }
    return out;
}

/// 9 significant digits; nan and inf spelled out.
inline std::string fmt(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

struct ExperimentSpec {
    SimParams base;
    std::vector<int> users;
    std::vector<int> refresh_periods;
    std::vector<double> cost_weights;
    std::vector<SchedulerKind> schedulers;
    std::vector<double> b_grid;
    int replications = 1;
    std::uint64_t master_seed = 1;
    std::filesystem::path out_dir = "results";
    int workers = 1;

    // analyze
    std::vector<int> analysis_users;
    std::vector<int> analysis_refresh;
    double analysis_cost_weight = 1.0;
    std::size_t p0_samples = 100000;
    R0Limit r0_limit = R0Limit::infinity;

    void validate() const
    {
        base.validate();
        if (replications < 1) {
            throw ConfigError("replications must be >= 1");
        }
        if (workers < 1) {
            throw ConfigError("workers must be >= 1");
        }
        for (int k : users) {
            if (k < 1) {
                throw ConfigError("sweep.users values must be >= 1");
            }
        }
        for (int t : refresh_periods) {
            if (t < 1) {
                throw ConfigError("sweep.refresh_period values must be >= 1");
            }
        }
        for (double v : cost_weights) {
            if (!(v >= 0.0)) {
                throw ConfigError("sweep.cost_weight values must be >= 0");
            }
        }
        for (int k : analysis_users) {
            if (k < 1) {
                throw ConfigError("analysis.users values must be >= 1");
            }
        }
        for (int t : analysis_refresh) {
            if (t < 1) {
                throw ConfigError("analysis.refresh_period values must be >= 1");
            }
        }
        if (!(analysis_cost_weight > 0.0)) {
            throw ConfigError("analysis.cost_weight must be > 0");
        }
        if (b_grid.empty()) {
            throw ConfigError("b_grid must not be empty");
        }
    }
};

/// Every key the config understands, for error messages.
inline const std::vector<std::string>& known_keys()
{
    static const std::vector<std::string> keys{
        "users", "tx_antennas", "rx_antennas", "power", "power_db", "arrival_rate_total", "packet_bits",
        "bandwidth_hz", "slot_seconds", "refresh_period", "cost_weight", "total_slots", "scheduler", "lf_threshold",
        "lf_threshold_db", "pfs_window", "arrival", "batch_size", "correlation", "ar1_coefficient", "beams", "seed",
        "warmup", "trace", "sweep.users", "sweep.refresh_period", "sweep.cost_weight", "sweep.scheduler", "b_grid",
        "replications", "out", "workers", "analysis.users", "analysis.refresh_period", "analysis.cost_weight",
        "analysis.p0_samples", "analysis.r0_limit"};
    return keys;
}

template <class T>
std::vector<T> to_ints(const std::string& key, const std::string& value)
{
    std::vector<T> out;
    for (const auto& item : split_list(value)) {
        out.push_back(static_cast<T>(parse_int(key, item)));
    }
    if (out.empty()) {
        throw ConfigError(key + ": empty list");
    }
    return out;
}

inline ExperimentSpec build_spec(const ConfigMap& config)
{
    ExperimentSpec spec;
    auto& b = spec.base;
    for (const auto& [key, value] : config) {
        if (key == "users") {
            b.users = static_cast<int>(parse_int(key, value));
        } else if (key == "tx_antennas") {
            b.tx_antennas = static_cast<int>(parse_int(key, value));
        } else if (key == "rx_antennas") {
            b.rx_antennas = static_cast<int>(parse_int(key, value));
        } else if (key == "power") {
            b.power = parse_double(key, value);
        } else if (key == "power_db") {
            b.power = std::pow(10.0, parse_double(key, value) / 10.0);
        } else if (key == "arrival_rate_total") {
            b.arrival_rate_total = parse_double(key, value);
        } else if (key == "packet_bits") {
            b.packet_bits = parse_double(key, value);
        } else if (key == "bandwidth_hz") {
            b.bandwidth_hz = parse_double(key, value);
        } else if (key == "slot_seconds") {
            b.slot_seconds = parse_double(key, value);
        } else if (key == "refresh_period") {
            b.refresh_period = static_cast<int>(parse_int(key, value));
        } else if (key == "cost_weight") {
            b.cost_weight = parse_double(key, value);
        } else if (key == "total_slots") {
            b.total_slots = parse_int(key, value);
        } else if (key == "scheduler") {
            b.scheduler = parse_scheduler(value);
        } else if (key == "lf_threshold") {
            b.lf_threshold = parse_double(key, value);
        } else if (key == "lf_threshold_db") {
            b.lf_threshold = std::pow(10.0, parse_double(key, value) / 10.0);
        } else if (key == "pfs_window") {
            b.pfs_window = parse_double(key, value);
        } else if (key == "arrival") {
            if (value == "poisson") {
                b.arrival_kind = ArrivalModel::Kind::poisson;
            } else if (value == "bernoulli_batch") {
                b.arrival_kind = ArrivalModel::Kind::bernoulli_batch;
            } else if (value == "deterministic") {
                b.arrival_kind = ArrivalModel::Kind::deterministic;
            } else {
                throw ConfigError("arrival: expected poisson, bernoulli_batch or deterministic");
            }
        } else if (key == "batch_size") {
            b.batch_size = static_cast<int>(parse_int(key, value));
        } else if (key == "correlation") {
            if (value == "iid") {
                b.correlation = Correlation::iid;
            } else if (value == "ar1") {
                b.correlation = Correlation::ar1;
            } else {
                throw ConfigError("correlation: expected iid or ar1");
            }
        } else if (key == "ar1_coefficient") {
            b.ar1_coefficient = parse_double(key, value);
        } else if (key == "beams") {
            if (value == "fresh") {
                b.beams = BeamRefresh::fresh;
            } else if (value == "fixed") {
                b.beams = BeamRefresh::fixed;
            } else {
                throw ConfigError("beams: expected fresh or fixed");
            }
        } else if (key == "seed") {
            spec.master_seed = static_cast<std::uint64_t>(parse_int(key, value));
        } else if (key == "warmup") {
            b.warmup = parse_int(key, value);
        } else if (key == "trace") {
            b.trace = parse_bool(key, value);
        } else if (key == "sweep.users") {
            spec.users = to_ints<int>(key, value);
        } else if (key == "sweep.refresh_period") {
            spec.refresh_periods = to_ints<int>(key, value);
        } else if (key == "sweep.cost_weight") {
            spec.cost_weights = parse_grid(key, value);
        } else if (key == "sweep.scheduler") {
            for (const auto& s : split_list(value)) {
                spec.schedulers.push_back(parse_scheduler(s));
            }
        } else if (key == "b_grid") {
            spec.b_grid = parse_grid(key, value);
        } else if (key == "replications") {
            spec.replications = static_cast<int>(parse_int(key, value));
        } else if (key == "out") {
            spec.out_dir = value;
        } else if (key == "workers") {
            spec.workers = static_cast<int>(parse_int(key, value));
        } else if (key == "analysis.users") {
            spec.analysis_users = to_ints<int>(key, value);
        } else if (key == "analysis.refresh_period") {
            spec.analysis_refresh = to_ints<int>(key, value);
        } else if (key == "analysis.cost_weight") {
            spec.analysis_cost_weight = parse_double(key, value);
        } else if (key == "analysis.p0_samples") {
            spec.p0_samples = static_cast<std::size_t>(parse_int(key, value));
        } else if (key == "analysis.r0_limit") {
            if (value == "1" || value == "one") {
                spec.r0_limit = R0Limit::one;
            } else if (value == "inf" || value == "infinity") {
                spec.r0_limit = R0Limit::infinity;
            } else {
                throw ConfigError("analysis.r0_limit: expected 1 or inf");
            }
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
    b.seed = spec.master_seed;
    if (spec.users.empty()) {
        spec.users = {b.users};
    }
    if (spec.refresh_periods.empty()) {
        spec.refresh_periods = {b.refresh_period};
    }
    if (spec.cost_weights.empty()) {
        spec.cost_weights = {b.cost_weight};
    }
    if (spec.schedulers.empty()) {
        spec.schedulers = {b.scheduler};
    }
    if (spec.b_grid.empty()) {
        spec.b_grid = parse_grid("b_grid", "0:1:60");
    }
    if (spec.analysis_users.empty()) {
        spec.analysis_users = {10, 20, 40, 80};
    }
    if (spec.analysis_refresh.empty()) {
        spec.analysis_refresh = {1, 5, 10};
    }
    spec.validate();
    return spec;
}

/// One simulation of a sweep, in sweep order.
struct RunPoint {
    int id = 0;
    int replication = 0;
    SimParams params;
};

/// Sweep order: users, refresh period, cost weight, scheduler, replication.
/// T and V only vary for the proposed scheduler; other schedulers run once
/// per K.
inline std::vector<RunPoint> expand_sweep(const ExperimentSpec& spec)
{
    std::vector<RunPoint> out;
    int id = 0;
    for (int k : spec.users) {
        for (std::size_t ti = 0; ti < spec.refresh_periods.size(); ++ti) {
            for (std::size_t vi = 0; vi < spec.cost_weights.size(); ++vi) {
                for (auto s : spec.schedulers) {
                    if (s != SchedulerKind::proposed && (ti > 0 || vi > 0)) {
                        continue;
                    }
                    for (int r = 0; r < spec.replications; ++r) {
                        RunPoint p;
                        p.id = id++;
                        p.replication = r;
                        p.params = spec.base;
                        p.params.users = k;
                        p.params.scheduler = s;
                        p.params.refresh_period = spec.refresh_periods[ti];
                        p.params.cost_weight = spec.cost_weights[vi];
                        p.params.seed =
                            derive_seed(spec.master_seed, "users=" + std::to_string(k), static_cast<std::uint64_t>(r));
                        p.params.validate();
                        out.push_back(p);
                    }
                }
            }
        }
    }
    return out;
}

/// Everything the summary needs from one run; the trace itself is dropped.
struct RunResult {
    RunPoint point;
    std::vector<double> overflow;
    std::vector<numerics::Interval> overflow_ci;
    double mean_q_max = 0.0;
    double mean_feedback = 0.0;
    double mean_policy_cost = 0.0;
    double mean_queue = 0.0;
    double mean_delay = 0.0;
    double throughput = 0.0;
    std::optional<DecayFit> decay;
    bool conserved = false;
    double max_little_error = 0.0;
};

inline RunResult summarize(const RunPoint& point, const MetricsTrace& trace, std::span<const double> b_grid)
{
    RunResult r;
    r.point = point;
    r.overflow = overflow_curve(trace, b_grid);
    const std::size_t batches = std::min<std::size_t>(20, trace.slots());
    for (double b : b_grid) {
        if (batches >= 2) {
            r.overflow_ci.push_back(overflow_interval(trace.q_max, b, batches));
        } else {
            r.overflow_ci.push_back({std::nan(""), std::nan(""), std::nan("")});
        }
    }
    r.mean_q_max = trace.mean_q_max();
    r.mean_feedback = trace.mean_feedback;
    r.mean_policy_cost = trace.mean_policy_cost;
    r.throughput = trace.throughput;
    double q = 0.0;
    double delay_weighted = 0.0;
    double dep = 0.0;
    for (const auto& u : trace.users) {
        q += u.mean_queue;
        if (u.mean_departures > 0.0 && !std::isnan(u.mean_delay)) {
            delay_weighted += u.mean_delay * u.mean_departures;
            dep += u.mean_departures;
            r.max_little_error = std::max(r.max_little_error, std::abs(u.mean_delay / u.little_delay() - 1.0));
        }
    }
    r.mean_queue = q / static_cast<double>(trace.users.size());
    r.mean_delay = dep > 0.0 ? delay_weighted / dep : std::nan("");
    try {
        r.decay = empirical_decay_rate(b_grid, r.overflow);
    } catch (const InsufficientDataError&) {
        r.decay.reset();
    }
    r.conserved = trace.conserved();
    return r;
}

inline std::filesystem::path ensure_dir(const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw IoError("cannot create output directory " + dir.string());
    }
    return dir;
}

inline std::ofstream open_out(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    return out;
}

inline void write_run_file(const std::filesystem::path& path, const MetricsTrace& trace)
{
    auto out = open_out(path);
    out << "user,mean_queue,mean_departures,mean_delay,little_delay,arrivals,departures,final_queue\n";
    for (std::size_t k = 0; k < trace.users.size(); ++k) {
        const auto& u = trace.users[k];
        out << k << ',' << fmt(u.mean_queue) << ',' << fmt(u.mean_departures) << ',' << fmt(u.mean_delay) << ','
            << fmt(u.little_delay()) << ',' << fmt(quanta_to_packets(u.arrivals)) << ','
            << fmt(quanta_to_packets(u.departures)) << ',' << fmt(quanta_to_packets(u.final_queue)) << '\n';
    }
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

inline void write_trace_file(const std::filesystem::path& path, const MetricsTrace& trace)
{
    auto out = open_out(path);
    const std::size_t k_users = trace.users.size();
    const bool per_user = !trace.served_packets.empty();
    out << "slot,q_max,q_argmax,feedback_users";
    if (per_user) {
        for (std::size_t k = 0; k < k_users; ++k) {
            out << ",served_" << k;
        }
        for (std::size_t k = 0; k < k_users; ++k) {
            out << ",arrivals_" << k;
        }
    }
    out << '\n';
    for (std::size_t i = 0; i < trace.slots(); ++i) {
        out << trace.window_start + static_cast<std::int64_t>(i) << ',' << fmt(trace.q_max[i]) << ','
            << trace.q_argmax[i] << ',' << trace.feedback_users[i];
        if (per_user) {
            for (std::size_t k = 0; k < k_users; ++k) {
                out << ',' << fmt(trace.served_packets[i * k_users + k]);
            }
            for (std::size_t k = 0; k < k_users; ++k) {
                out << ',' << trace.arrivals[i * k_users + k];
            }
        }
        out << '\n';
    }
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

/// Runs `task(i)` for i in [0, n) on up to `workers` threads. Results land
/// by index; the first failure (in index order) is rethrown.
template <class Task>
void parallel_for(std::size_t n, int workers, Task&& task)
{
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto body = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                task(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto count = static_cast<std::size_t>(std::max(1, workers));
    if (count == 1 || n <= 1) {
        body();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < std::min(count, n); ++w) {
            pool.emplace_back(body);
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

inline const char* kSummaryHeader =
    "run_id,scheduler,users,refresh_period,cost_weight,replication,seed,slots,B,overflow_prob,ci_low,ci_high,"
    "mean_q_max,mean_feedback,mean_policy_cost,mean_queue,mean_delay,throughput,decay_rate,decay_r2,conserved";

inline void write_summary(const std::filesystem::path& path, const std::vector<RunResult>& results,
                          std::span<const double> b_grid)
{
    auto out = open_out(path);
    out << kSummaryHeader << '\n';
    for (const auto& r : results) {
        const auto& p = r.point.params;
        const std::int64_t slots = p.total_slots - p.warmup_slots();
        for (std::size_t i = 0; i < b_grid.size(); ++i) {
            out << r.point.id << ',' << to_string(p.scheduler) << ',' << p.users << ',' << p.refresh_period << ','
                << fmt(p.cost_weight) << ',' << r.point.replication << ',' << p.seed << ',' << slots << ','
                << fmt(b_grid[i]) << ',' << fmt(r.overflow[i]) << ',' << fmt(r.overflow_ci[i].low) << ','
                << fmt(r.overflow_ci[i].high) << ',' << fmt(r.mean_q_max) << ',' << fmt(r.mean_feedback) << ','
                << fmt(r.mean_policy_cost) << ',' << fmt(r.mean_queue) << ',' << fmt(r.mean_delay) << ','
                << fmt(r.throughput) << ',' << fmt(r.decay ? r.decay->rate : std::nan("")) << ','
                << fmt(r.decay ? r.decay->r_squared : std::nan("")) << ',' << (r.conserved ? 1 : 0) << '\n';
        }
    }
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

inline std::vector<RunResult> execute(const ExperimentSpec& spec, std::ostream& log)
{
    const auto dir = ensure_dir(spec.out_dir);
    for (const auto& w : spec.base.warnings()) {
        log << "warning: " << w << '\n';
    }
    const auto points = expand_sweep(spec);
    std::vector<RunResult> results(points.size());
    std::mutex log_mutex;
    parallel_for(points.size(), spec.workers, [&](std::size_t i) {
        const auto trace = run(points[i].params);
        results[i] = summarize(points[i], trace, spec.b_grid);
        const auto id = std::to_string(points[i].id);
        write_run_file(dir / ("run_" + id + ".csv"), trace);
        if (points[i].params.trace) {
            write_trace_file(dir / ("trace_" + id + ".csv"), trace);
        }
        std::lock_guard lock(log_mutex);
        log << "run " << id << ": " << to_string(points[i].params.scheduler) << " K=" << points[i].params.users
            << " T=" << points[i].params.refresh_period << " V=" << fmt(points[i].params.cost_weight)
            << " mean Qmax=" << fmt(results[i].mean_q_max) << '\n';
    });
    write_summary(dir / "summary.csv", results, spec.b_grid);
    return results;
}

inline int cmd_run(const ExperimentSpec& spec, std::ostream& log)
{
    execute(spec, log);
    return 0;
}

/// Like run, defaulting to all five schedulers, plus compare.csv with one
/// overflow column per scheduler (first replication, first T and V).
inline int cmd_compare(ExperimentSpec spec, std::ostream& log)
{
    if (spec.schedulers.size() <= 1) {
        spec.schedulers = {SchedulerKind::proposed, SchedulerKind::csio, SchedulerKind::csio_lf, SchedulerKind::pfs,
                           SchedulerKind::mwq};
    }
    const auto results = execute(spec, log);
    auto out = open_out(spec.out_dir / "compare.csv");
    out << "users,B";
    for (auto s : spec.schedulers) {
        out << ',' << to_string(s);
    }
    out << '\n';
    for (int k : spec.users) {
        for (std::size_t i = 0; i < spec.b_grid.size(); ++i) {
            out << k << ',' << fmt(spec.b_grid[i]);
            for (auto s : spec.schedulers) {
                double v = std::nan("");
                for (const auto& r : results) {
                    const auto& p = r.point.params;
                    if (p.users == k && p.scheduler == s && r.point.replication == 0 &&
                        p.refresh_period == spec.refresh_periods.front() &&
                        p.cost_weight == spec.cost_weights.front()) {
                        v = r.overflow[i];
                        break;
                    }
                }
                out << ',' << fmt(v);
            }
            out << '\n';
        }
    }
    if (!out) {
        throw IoError("write failed: compare.csv");
    }
    return 0;
}

inline RateParams rate_params(const SimParams& p, int users, double cost_weight, R0Limit limit)
{
    RateParams r;
    r.users = users;
    r.tx_antennas = p.tx_antennas;
    r.rx_antennas = p.rx_antennas;
    r.power = p.power;
    r.arrival_rate_total = p.arrival_rate_total;
    r.packet_bits = p.packet_bits;
    r.bandwidth_hz = p.bandwidth_hz;
    r.slot_seconds = p.slot_seconds;
    r.cost_weight = cost_weight;
    r.r0_limit = limit;
    return r;
}

/// Rows of a previously written summary.csv, keyed by column name.
inline std::vector<std::map<std::string, std::string>> read_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    std::vector<std::map<std::string, std::string>> rows;
    if (!in) {
        return rows;
    }
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) {
            cells.push_back(c);
        }
        if (header.empty()) {
            header = cells;
            continue;
        }
        std::map<std::string, std::string> row;
        for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i) {
            row[header[i]] = cells[i];
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Mean empirical decay rate per (scheduler, users, T) from summary rows.
inline std::map<std::tuple<std::string, int, int>, double> empirical_rates(
    const std::vector<std::map<std::string, std::string>>& rows)
{
    std::map<std::tuple<std::string, int, int>, std::pair<double, int>> acc;
    std::map<std::string, bool> seen;
    for (const auto& row : rows) {
        const auto& id = row.at("run_id");
        if (seen[id]) {
            continue;
        }
        seen[id] = true;
        const double rate = std::stod(row.at("decay_rate"));
        if (std::isnan(rate)) {
            continue;
        }
        auto& a = acc[{row.at("scheduler"), std::stoi(row.at("users")), std::stoi(row.at("refresh_period"))}];
        a.first += rate;
        a.second += 1;
    }
    std::map<std::tuple<std::string, int, int>, double> out;
    for (const auto& [key, a] : acc) {
        out[key] = a.first / a.second;
    }
    return out;
}

/// theory.csv: decay-rate bounds over the K and T grids, next to empirical
/// decay rates from out_dir/summary.csv when present. Also writes
/// tradeoff.csv (feedback vs queue per V) when the summary has proposed runs.
inline int cmd_analyze(const ExperimentSpec& spec, std::ostream& log)
{
    const auto dir = ensure_dir(spec.out_dir);
    const auto rows = read_csv(dir / "summary.csv");
    const auto empirical = empirical_rates(rows);

    auto out = open_out(dir / "theory.csv");
    out << "users,refresh_period,cost_weight,epsilon,i_baseline,i_baseline_asymptotic,i_prop_lb,p0T,i_prop_T,"
           "empirical_proposed,empirical_csio\n";
    if (rows.empty()) {
        out << "# warning: no simulation data in " << (dir / "summary.csv").string()
            << "; theory columns only\n";
        log << "warning: no simulation data found, writing theory only\n";
    }
    auto guarded = [](auto&& f) {
        try {
            return f();
        } catch (const HypothesisError&) {
            return std::nan("");
        }
    };
    for (int k : spec.analysis_users) {
        const auto params = rate_params(spec.base, k, spec.analysis_cost_weight, spec.r0_limit);
        const double eps = epsilon(params);
        const double ib = guarded([&] { return i_baseline(params, BaselineForm::exact); });
        const double ib_asym = guarded([&] { return i_baseline(params, BaselineForm::asymptotic); });
        const double ilb = guarded([&] { return i_prop_lb(params); });
        for (int t : spec.analysis_refresh) {
            auto rng = substream(spec.master_seed, 0x70305400ULL);
            const double p0 = p0T(t, params, spec.p0_samples, rng);
            const double it = guarded([&] { return i_prop_T(params, p0); });
            auto lookup = [&](const char* s) {
                const auto it2 = empirical.find({s, k, t});
                return it2 == empirical.end() ? std::nan("") : it2->second;
            };
            out << k << ',' << t << ',' << fmt(spec.analysis_cost_weight) << ',' << fmt(eps) << ',' << fmt(ib)
                << ',' << fmt(ib_asym) << ',' << fmt(ilb) << ',' << fmt(p0) << ',' << fmt(it) << ','
                << fmt(lookup("proposed")) << ',' << fmt(lookup("csio")) << '\n';
        }
    }
    if (!out) {
        throw IoError("write failed: theory.csv");
    }

    std::map<std::tuple<int, int, double>, std::array<double, 3>> tradeoff;
    std::map<std::string, bool> seen;
    for (const auto& row : rows) {
        if (row.at("scheduler") != "proposed" || seen[row.at("run_id")]) {
            continue;
        }
        seen[row.at("run_id")] = true;
        auto& a = tradeoff[{std::stoi(row.at("users")), std::stoi(row.at("refresh_period")),
                            std::stod(row.at("cost_weight"))}];
        a[0] += std::stod(row.at("mean_feedback"));
        a[1] += std::stod(row.at("mean_queue"));
        a[2] += 1.0;
    }
    if (!tradeoff.empty()) {
        auto t = open_out(dir / "tradeoff.csv");
        t << "users,refresh_period,cost_weight,mean_feedback,mean_queue\n";
        for (const auto& [key, a] : tradeoff) {
            t << std::get<0>(key) << ',' << std::get<1>(key) << ',' << fmt(std::get<2>(key)) << ','
              << fmt(a[0] / a[2]) << ',' << fmt(a[1] / a[2]) << '\n';
        }
    }
    return 0;
}

} // namespace mumimo
