#include "sinai/walk.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sinai/parallel.hpp"
#include "sinai/rng.hpp"

namespace sinai {

namespace {

std::uint64_t to_threshold(double alpha) {
    const double scaled = std::ldexp(alpha, 64);
    if (scaled >= 18446744073709551615.0) return std::numeric_limits<std::uint64_t>::max();
    return static_cast<std::uint64_t>(scaled);
}

constexpr std::int64_t kFar = std::numeric_limits<std::int64_t>::max() / 4;

struct Cursor {
    std::int64_t x;
    std::uint64_t t;
};

// Steps until t == limit or x leaves [glo, ghi].
template <bool Watch, bool Full, bool Targets>
void run(Cursor& c, std::uint64_t limit, std::int64_t glo, std::int64_t ghi, const std::uint64_t* thr,
         std::int64_t base, SplitMix64& rng, const WalkerConfig& cfg, WalkResult& out) {
    std::int64_t x = c.x;
    std::uint64_t t = c.t;
    while (t < limit) {
        x += rng() < thr[x - base] ? 1 : -1;
        ++t;
        if constexpr (Watch)
            if (x == *cfg.watch_site) out.last_visit = t;
        if constexpr (Full) out.trajectory.push_back(x);
        if constexpr (Targets)
            for (std::size_t k = 0; k < cfg.targets.size(); ++k)
                if (x == cfg.targets[k] && !out.hitting_times[k]) out.hitting_times[k] = t;
        if (x < glo || x > ghi) break;
    }
    c.x = x;
    c.t = t;
}

using Runner = void (*)(Cursor&, std::uint64_t, std::int64_t, std::int64_t, const std::uint64_t*, std::int64_t,
                        SplitMix64&, const WalkerConfig&, WalkResult&);

template <bool W, bool F>
Runner pick(bool targets) {
    return targets ? &run<W, F, true> : &run<W, F, false>;
}

Runner pick(bool watch, bool full, bool targets) {
    if (watch) return full ? pick<true, true>(targets) : pick<true, false>(targets);
    return full ? pick<false, true>(targets) : pick<false, false>(targets);
}

}  // namespace

StepTable::StepTable(const Environment& env, Window window)
    : env_(env.extendable() ? env.extended(window) : env), window_(env_.window()) {
    thresholds_.reserve(static_cast<std::size_t>(window_.size()));
    for (std::int64_t i = window_.lo; i <= window_.hi; ++i) thresholds_.push_back(to_threshold(env_.alpha(i)));
}

StepTable StepTable::grown(std::int64_t site, std::int64_t max_sites) const {
    if (!env_.extendable())
        throw Error(ErrorKind::WindowExhausted, "walk left the explicit environment at " + std::to_string(site));
    std::int64_t lo = window_.lo, hi = window_.hi;
    while (!(lo <= site && site <= hi)) {
        const std::int64_t span = std::max<std::int64_t>(hi - lo + 1, 16);
        lo -= span / 2;
        hi += span / 2;
    }
    if (hi - lo + 1 > max_sites) throw Error(ErrorKind::WindowExhausted, "walk exceeded the site cap");
    return StepTable(env_, {lo, hi});
}

WalkResult simulate(const StepTable& table, const WalkerConfig& cfg, std::int64_t max_sites) {
    if (cfg.max_steps < 1) throw Error(ErrorKind::InvalidConfig, "max_steps must be at least 1");
    const bool full = cfg.mode == RecordMode::FullTrajectory;
    if (full && cfg.max_steps > kMaxTrajectorySteps)
        throw Error(ErrorKind::InvalidConfig, "full trajectories are limited to 1e7 steps");
    std::vector<std::uint64_t> checkpoints = cfg.checkpoints;
    std::sort(checkpoints.begin(), checkpoints.end());

    WalkResult out;
    out.hitting_times.assign(cfg.targets.size(), std::nullopt);
    if (full) {
        out.trajectory.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(cfg.max_steps + 1, 1 << 20)));
        out.trajectory.push_back(cfg.start);
    }
    if (cfg.watch_site && *cfg.watch_site == cfg.start) out.last_visit = 0;

    const Window stop = cfg.stop_outside.value_or(Window{-kFar, kFar});
    const Runner runner = pick(cfg.watch_site.has_value(), full, !cfg.targets.empty());
    const StepTable* tab = &table;
    std::optional<StepTable> local;
    SplitMix64 rng(cfg.seed);
    Cursor c{cfg.start, 0};
    std::size_t next_cp = 0;

    for (;;) {
        while (next_cp < checkpoints.size() && checkpoints[next_cp] == c.t) {
            out.checkpoint_positions.push_back(c.x);
            ++next_cp;
        }
        if (!stop.contains(c.x)) {
            out.exit_time = c.t;
            break;
        }
        if (c.t >= cfg.max_steps) break;
        if (!tab->window().contains(c.x)) {
            local = tab->grown(c.x, max_sites);
            tab = &*local;
        }
        std::uint64_t limit = cfg.max_steps;
        if (next_cp < checkpoints.size()) limit = std::min(limit, checkpoints[next_cp]);
        const std::int64_t glo = std::max(tab->window().lo, stop.lo);
        const std::int64_t ghi = std::min(tab->window().hi, stop.hi);
        runner(c, limit, glo, ghi, tab->data(), tab->window().lo, rng, cfg, out);
    }
    // Checkpoints past an early stop are never reached.
    out.endpoint = c.x;
    out.steps = c.t;
    return out;
}

WalkResult simulate(const Environment& env, const WalkerConfig& cfg, std::int64_t max_sites) {
    const Window w = env.extendable() ? Window{std::min(env.window().lo, cfg.start - 64),
                                               std::max(env.window().hi, cfg.start + 64)}
                                      : env.window();
    if (!w.contains(cfg.start)) throw Error(ErrorKind::OutOfWindow, "start outside the environment");
    return simulate(StepTable(env, w), cfg, max_sites);
}

std::vector<WalkResult> simulate_replicas(const StepTable& table, const WalkerConfig& cfg, std::uint64_t replicas,
                                          std::uint64_t master_seed, int threads) {
    std::vector<WalkResult> results(replicas);
    parallel_for(replicas, threads, [&](std::uint64_t i) {
        WalkerConfig c = cfg;
        c.seed = derive_seed(master_seed, Stream::Replica, i);
        results[i] = simulate(table, c);
    });
    return results;
}

Frequency binomial(std::uint64_t count, std::uint64_t trials) {
    Frequency f;
    f.count = count;
    f.trials = trials;
    if (trials == 0) return f;
    f.value = static_cast<double>(count) / static_cast<double>(trials);
    f.se = std::sqrt(f.value * (1.0 - f.value) / static_cast<double>(trials));
    return f;
}

std::vector<TailPoint> estimate_return_tail(const Environment& env, std::int64_t bottom, int side,
                                            const std::vector<double>& q_grid, std::uint64_t replicas,
                                            std::uint64_t seed, int threads) {
    if (side != 1 && side != -1) throw Error(ErrorKind::InvalidConfig, "side must be +1 or -1");
    if (q_grid.empty() || replicas == 0) throw Error(ErrorKind::InvalidConfig, "empty q grid or no replicas");
    const double q_max = *std::max_element(q_grid.begin(), q_grid.end());
    if (q_max < 0.0) throw Error(ErrorKind::InvalidConfig, "negative q");

    WalkerConfig cfg;
    cfg.start = bottom + side;
    cfg.max_steps = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::floor(q_max)) + 1);
    cfg.stop_outside = side > 0 ? Window{bottom + 1, kFar} : Window{-kFar, bottom - 1};
    const Window w = env.extendable() ? Window{bottom - 1024, bottom + 1024} : env.window();
    const StepTable table(env, w);
    const auto results = simulate_replicas(table, cfg, replicas, seed, threads);

    std::vector<TailPoint> out;
    for (double q : q_grid) {
        std::uint64_t above = 0;
        for (const auto& r : results)
            if (!r.exit_time || static_cast<double>(*r.exit_time) > q) ++above;
        const auto f = binomial(above, replicas);
        out.push_back({q, f.value, f.se});
    }
    return out;
}

Frequency last_return_event(const Environment& env, std::uint64_t n, std::uint64_t q, std::int64_t bottom,
                            std::uint64_t replicas, std::uint64_t seed, int threads, std::int64_t start) {
    if (q < 1 || q > n) throw Error(ErrorKind::InvalidConfig, "need 1 <= q <= n");
    if (n > kStepBudgetPerReplica) throw Error(ErrorKind::BudgetExceeded, "n exceeds the per-replica step budget");
    WalkerConfig cfg;
    cfg.start = start;
    cfg.max_steps = n;
    cfg.watch_site = bottom;
    const Window w = env.extendable() ? Window{std::min(start, bottom) - 1024, std::max(start, bottom) + 1024}
                                      : env.window();
    const auto results = simulate_replicas(StepTable(env, w), cfg, replicas, seed, threads);
    std::uint64_t missed = 0;
    for (const auto& r : results)
        if (!r.last_visit || *r.last_visit < n - q) ++missed;
    return binomial(missed, replicas);
}

}  // namespace sinai
