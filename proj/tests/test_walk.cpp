#include <cmath>

#include <gtest/gtest.h>

#include "sinai/exact.hpp"
#include "sinai/walk.hpp"

using namespace sinai;

namespace {

ErrorKind kind_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorKind::InvalidConfig;
}

}  // namespace

TEST(Walk, ForcedRightDrift) {
    const auto env = Environment::from_alphas(-10, std::vector<double>(1100, 1.0 - 1e-15));
    WalkerConfig cfg;
    cfg.max_steps = 1000;
    cfg.mode = RecordMode::FullTrajectory;
    cfg.seed = 4;
    const auto r = simulate(env, cfg);
    ASSERT_EQ(r.trajectory.size(), 1001u);
    for (std::size_t k = 0; k < r.trajectory.size(); ++k) EXPECT_EQ(r.trajectory[k], static_cast<std::int64_t>(k));
}

TEST(Walk, DeterministicAndNearestNeighbour) {
    const auto env = Environment::sampled(DistSpec::two_point(0.3), 12, {-100, 100});
    WalkerConfig cfg;
    cfg.max_steps = 20000;
    cfg.mode = RecordMode::FullTrajectory;
    cfg.seed = 77;
    const auto a = simulate(env, cfg);
    const auto b = simulate(env, cfg);
    EXPECT_EQ(a.trajectory, b.trajectory);
    for (std::size_t k = 1; k < a.trajectory.size(); ++k) ASSERT_EQ(std::abs(a.trajectory[k] - a.trajectory[k - 1]), 1);
    EXPECT_EQ(((a.endpoint - cfg.start) % 2 + 2) % 2, static_cast<std::int64_t>(cfg.max_steps % 2));
    cfg.seed = 78;
    EXPECT_NE(simulate(env, cfg).trajectory, a.trajectory);
}

TEST(Walk, TableGrowsForSampledButNotExplicit) {
    const auto sampled = Environment::sampled(DistSpec::symmetric_uniform(0.1), 3, {-4, 4});
    WalkerConfig cfg;
    cfg.max_steps = 100000;
    cfg.seed = 1;
    const auto r = simulate(StepTable(sampled, {-4, 4}), cfg);
    EXPECT_EQ(r.steps, cfg.max_steps);
    const auto fixed = Environment::from_alphas(-4, std::vector<double>(9, 0.5));
    EXPECT_EQ(kind_of([&] { simulate(StepTable(fixed, fixed.window()), cfg); }), ErrorKind::WindowExhausted);
}

TEST(Walk, ConfigChecks) {
    const auto env = Environment::constant(0.5, {-10, 10});
    WalkerConfig cfg;
    cfg.max_steps = 0;
    EXPECT_EQ(kind_of([&] { simulate(env, cfg); }), ErrorKind::InvalidConfig);
    cfg.max_steps = kMaxTrajectorySteps + 1;
    cfg.mode = RecordMode::FullTrajectory;
    EXPECT_EQ(kind_of([&] { simulate(env, cfg); }), ErrorKind::InvalidConfig);
}

TEST(Walk, HittingTimesAgreeWithTrajectory) {
    const auto env = Environment::sampled(DistSpec::two_point(0.3), 5, {-200, 200});
    WalkerConfig full;
    full.max_steps = 5000;
    full.seed = 2;
    full.mode = RecordMode::FullTrajectory;
    full.targets = {-7, 9};
    full.checkpoints = {1000, 10, 5000};
    full.watch_site = 3;
    const auto r = simulate(env, full);
    for (std::size_t t = 0; t < full.targets.size(); ++t) {
        std::optional<std::uint64_t> first;
        for (std::size_t k = 1; k < r.trajectory.size() && !first; ++k)
            if (r.trajectory[k] == full.targets[t]) first = k;
        EXPECT_EQ(r.hitting_times[t], first);
    }
    ASSERT_EQ(r.checkpoint_positions.size(), 3u);
    EXPECT_EQ(r.checkpoint_positions[0], r.trajectory[10]);
    EXPECT_EQ(r.checkpoint_positions[1], r.trajectory[1000]);
    EXPECT_EQ(r.checkpoint_positions[2], r.trajectory[5000]);
    std::optional<std::uint64_t> last;
    for (std::size_t k = 0; k < r.trajectory.size(); ++k)
        if (r.trajectory[k] == 3) last = k;
    EXPECT_EQ(r.last_visit, last);
    // Same seed without the trajectory gives the same numbers.
    auto lean = full;
    lean.mode = RecordMode::HittingTimesOnly;
    const auto s = simulate(env, lean);
    EXPECT_EQ(s.hitting_times, r.hitting_times);
    EXPECT_EQ(s.endpoint, r.endpoint);
    EXPECT_EQ(s.last_visit, r.last_visit);
}

TEST(Walk, FlatGamblersRuin) {
    const auto env = Environment::constant(0.5, {-20, 30});
    WalkerConfig cfg;
    cfg.max_steps = 10000;
    cfg.stop_outside = Window{-9, 19};
    const auto results = simulate_replicas(StepTable(env, env.window()), cfg, 100000, 31, 0);
    std::uint64_t low = 0, censored = 0;
    for (const auto& r : results) {
        if (!r.exit_time) ++censored;
        else if (r.endpoint == -10) ++low;
    }
    const auto f = binomial(low, results.size() - censored);
    EXPECT_LT(censored, 50u);
    EXPECT_NEAR(f.value, 2.0 / 3.0, 3 * f.se);
}

TEST(Walk, ExitFrequencyMatchesExact) {
    const auto env = Environment::sampled(DistSpec::symmetric_uniform(0.2), 8, {-50, 50});
    WalkerConfig cfg;
    cfg.start = 2;
    cfg.max_steps = 1'000'000;
    cfg.stop_outside = Window{-11, 14};
    const auto results = simulate_replicas(StepTable(env, env.window()), cfg, 100000, 4, 0);
    std::uint64_t right = 0;
    for (const auto& r : results) right += r.endpoint == 15;
    const auto f = binomial(right, results.size());
    EXPECT_NEAR(f.value, exit_prob(env, -12, 2, 15).p_b_first, 3 * f.se);
}

TEST(Walk, ReplicasIndependentOfThreads) {
    const auto env = Environment::sampled(DistSpec::two_point(0.3), 3, {-100, 100});
    WalkerConfig cfg;
    cfg.max_steps = 3000;
    const StepTable table(env, env.window());
    const auto one = simulate_replicas(table, cfg, 64, 10, 1);
    const auto four = simulate_replicas(table, cfg, 64, 10, 4);
    for (std::size_t i = 0; i < one.size(); ++i) EXPECT_EQ(one[i].endpoint, four[i].endpoint);
}

TEST(ReturnTail, BasicShape) {
    const auto env = Environment::sampled(DistSpec::two_point(0.3), 6, {-500, 500});
    const std::vector<double> q{0.0, 1.0, 3.0, 10.0, 100.0, 1000.0};
    const auto tails = estimate_return_tail(env, 0, 1, q, 20000, 2, 0);
    ASSERT_EQ(tails.size(), q.size());
    EXPECT_EQ(tails[0].tail, 1.0);
    for (std::size_t k = 1; k < tails.size(); ++k) EXPECT_LE(tails[k].tail, tails[k - 1].tail);
    // T > 1 from bottom + 1 means the first step went right.
    EXPECT_NEAR(tails[1].tail, env.alpha(1), 3 * tails[1].se + 1e-12);
    EXPECT_EQ(kind_of([&] { estimate_return_tail(env, 0, 2, q, 10, 1, 0); }), ErrorKind::InvalidConfig);
}

TEST(LastReturn, MonotoneInQ) {
    const auto env = Environment::sampled(DistSpec::two_point(0.3), 6, {-500, 500});
    const std::uint64_t n = 20000;
    double prev = 0.0;
    for (std::uint64_t q : {20000u, 5000u, 500u, 50u}) {
        const auto f = last_return_event(env, n, q, 0, 2000, 3, 0);
        EXPECT_GE(f.value, prev);
        prev = f.value;
    }
    EXPECT_EQ(kind_of([&] { last_return_event(env, 10, 11, 0, 10, 1, 0); }), ErrorKind::InvalidConfig);
    EXPECT_EQ(kind_of([&] { last_return_event(env, 2'000'000'000, 10, 0, 10, 1, 0); }), ErrorKind::BudgetExceeded);
}
