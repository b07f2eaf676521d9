#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "sinai/env.hpp"

namespace sinai {

enum class RecordMode { FullTrajectory, EndpointOnly, HittingTimesOnly };

inline constexpr std::uint64_t kMaxTrajectorySteps = 10'000'000;

struct WalkerConfig {
    std::int64_t start = 0;
    std::uint64_t max_steps = 1;
    std::uint64_t seed = 0;
    RecordMode mode = RecordMode::EndpointOnly;
    /// Walk stops on first leaving this window (exit time recorded).
    std::optional<Window> stop_outside;
    /// First hitting times of these sites (HittingTimesOnly).
    std::vector<std::int64_t> targets;
    /// Step counts at which the position is recorded.
    std::vector<std::uint64_t> checkpoints;
    /// Records the last time the walk stood on this site.
    std::optional<std::int64_t> watch_site;
};

struct WalkResult {
    std::int64_t endpoint = 0;
    std::uint64_t steps = 0;
    /// Time the walk left cfg.stop_outside; nullopt = censored at max_steps.
    std::optional<std::uint64_t> exit_time;
    /// One per target; nullopt = censored.
    std::vector<std::optional<std::uint64_t>> hitting_times;
    std::vector<std::int64_t> checkpoint_positions;
    std::optional<std::uint64_t> last_visit;
    std::vector<std::int64_t> trajectory;
};

/// Precomputed step thresholds alpha_i * 2^64 over a window.
class StepTable {
public:
    StepTable(const Environment& env, Window window);

    const Environment& env() const noexcept { return env_; }
    const Window& window() const noexcept { return window_; }
    std::uint64_t threshold(std::int64_t i) const noexcept {
        return thresholds_[static_cast<std::size_t>(i - window_.lo)];
    }
    const std::uint64_t* data() const noexcept { return thresholds_.data(); }
    /// Table over a window twice as wide around the old one (and holding `site`).
    StepTable grown(std::int64_t site, std::int64_t max_sites) const;

private:
    Environment env_;
    Window window_;
    std::vector<std::uint64_t> thresholds_;
};

inline constexpr std::int64_t kDefaultWalkCap = std::int64_t{1} << 26;

/// One walk. The table is grown privately if the walk leaves it.
WalkResult simulate(const StepTable& table, const WalkerConfig& cfg, std::int64_t max_sites = kDefaultWalkCap);
WalkResult simulate(const Environment& env, const WalkerConfig& cfg, std::int64_t max_sites = kDefaultWalkCap);

/// Replicas of `cfg` with seeds derive_seed(master, Replica, i).
std::vector<WalkResult> simulate_replicas(const StepTable& table, const WalkerConfig& cfg, std::uint64_t replicas,
                                          std::uint64_t master_seed, int threads);

struct TailPoint {
    double q = 0.0;
    double tail = 0.0;
    double se = 0.0;
};

/// P[T_bottom > q] from bottom + side (side = +1 or -1), for each q.
std::vector<TailPoint> estimate_return_tail(const Environment& env, std::int64_t bottom, int side,
                                            const std::vector<double>& q_grid, std::uint64_t replicas,
                                            std::uint64_t seed, int threads);

struct Frequency {
    double value = 0.0;
    double se = 0.0;
    std::uint64_t count = 0;
    std::uint64_t trials = 0;
};

Frequency binomial(std::uint64_t count, std::uint64_t trials);

inline constexpr std::uint64_t kStepBudgetPerReplica = 1'000'000'000;

/// Fraction of walks from `start` that do not visit `bottom` during [n - q, n].
Frequency last_return_event(const Environment& env, std::uint64_t n, std::uint64_t q, std::int64_t bottom,
                            std::uint64_t replicas, std::uint64_t seed, int threads, std::int64_t start = 0);

}  // namespace sinai
