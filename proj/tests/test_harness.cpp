#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "sinai/exact.hpp"
#include "sinai/goodenv.hpp"
#include "sinai/harness.hpp"
#include "sinai/io.hpp"
#include "sinai/rng.hpp"
#include "support.hpp"

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

ExperimentConfig small(Experiment e) {
    ExperimentConfig c;
    c.experiment = e;
    c.n_grid = {1e3, 1e4};
    c.environments = 6;
    c.walks = 20;
    c.seed = 3;
    c.threads = 1;
    c.all_envs = true;
    c.chop_width = 0.0;
    return c;
}

std::string read(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST(Config, ParsesAndRoundTrips) {
    const auto c = config_from_json(R"({"experiment": "localization", "dist": "uniform:0.1",
        "n_grid": ["1e4", 1e5], "gamma": 3.5, "walks": "1e3", "good_filter": "full", "q_grid": [1, 10]})");
    EXPECT_EQ(c.experiment, Experiment::Localization);
    EXPECT_EQ(c.n_grid, (std::vector<double>{1e4, 1e5}));
    EXPECT_EQ(c.walks, 1000u);
    EXPECT_EQ(c.good_filter, GoodFilter::Full);
    const auto again = config_from_json(config_to_json(c));
    EXPECT_EQ(config_to_json(again), config_to_json(c));
}

TEST(Config, Rejects) {
    EXPECT_EQ(kind_of([] { config_from_json(R"({"n_grid": [1e4], "colour": 1})"); }), ErrorKind::InvalidConfig);
    EXPECT_EQ(kind_of([] { config_from_json(R"({"n_grid": []})"); }), ErrorKind::InvalidConfig);
    EXPECT_EQ(kind_of([] { config_from_json(R"({"n_grid": [1e4], "experiment": "x"})"); }), ErrorKind::InvalidConfig);
    EXPECT_EQ(kind_of([] { config_from_json("{"); }), ErrorKind::InvalidConfig);
    EXPECT_EQ(kind_of([] { config_from_json(R"({"n_grid": [1e4], "dist": "twopoint:0.5"})"); }),
              ErrorKind::InvalidSpec);
}

TEST(Table, CsvRoundTripIsExact) {
    Table t;
    t.columns = {"a", "b", "c"};
    const double values[] = {0.1, 1.0 / 3.0, 2.5e-300, -7.0, std::nan("")};
    for (double v : values) t.rows.push_back({format_number(v), format_number(std::int64_t{-4}), ""});
    const auto back = Table::from_csv(t.to_csv());
    EXPECT_EQ(back.columns, t.columns);
    EXPECT_EQ(back.rows, t.rows);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(back.number(i, "a"), values[i]);
    EXPECT_TRUE(std::isnan(back.number(4, "a")));
    EXPECT_EQ(kind_of([&] { back.column("z"); }), ErrorKind::InvalidConfig);
}

TEST(Quantile, Interpolates) {
    EXPECT_EQ(quantile({3, 1, 2}, 0.5), 2.0);
    EXPECT_EQ(quantile({1, 2, 3, 4}, 0.5), 2.5);
    EXPECT_NEAR(quantile({0, 10}, 0.9), 9.0, 1e-12);
    EXPECT_TRUE(std::isnan(quantile({}, 0.5)));
}

TEST(Io, EnvironmentJsonRoundTrip) {
    const auto env = Environment::sampled(DistSpec::parse("table:0.2/0.5,0.8/0.5"), 9, {-30, 40});
    const auto back = environment_from_json(environment_to_json(env));
    EXPECT_EQ(back.window(), env.window());
    for (std::int64_t k = -30; k <= 40; ++k) EXPECT_EQ(back.alpha(k), env.alpha(k));
    const auto fixed = Environment::from_alphas(-2, {0.1, 0.2, 0.3});
    const auto fback = environment_from_json(environment_to_json(fixed));
    EXPECT_FALSE(fback.extendable());
    EXPECT_EQ(fback.alpha(0), 0.3);
    EXPECT_EQ(kind_of([] { environment_from_json(R"({"family": "x", "params": {}, "window": [0, 1]})"); }),
              ErrorKind::InvalidSpec);
    EXPECT_EQ(parse_window("-1000:1000"), (Window{-1000, 1000}));
    EXPECT_EQ(parse_number("1e6"), 1e6);
    EXPECT_EQ(kind_of([] { parse_number("1e6x"); }), ErrorKind::InvalidConfig);
}

TEST(Containment, DeepValleyNeverEscapes) {
    // Walls of height about 400 on both sides of 0; nothing gets out in 1e4 steps.
    const double n = 1e4;
    const auto shape = testing_support::polyline({{-300, 400.0}, {0, 0.0}, {300, 400.0}});
    const auto env = testing_support::from_potential(-300, shape);
    const Valley v{-200, 0, 200, 0.0};
    const auto c = containment_escapes(env, v, n, 250.0, 1000, 5, 0);
    EXPECT_EQ(c.walks, 1000u);
    EXPECT_EQ(c.valley, 0u);
    EXPECT_EQ(c.fixed, 0u);
    // A flat stretch is left almost surely.
    const auto flat = Environment::constant(0.5, {-100, 100});
    const auto e = containment_escapes(flat, Valley{-3, 0, 3, 0.0}, n, 5.0, 200, 5, 0);
    EXPECT_EQ(e.valley, 200u);
}

TEST(Containment, BoundColumnAndDeterminism) {
    auto cfg = small(Experiment::Containment);
    const auto a = run_experiment(cfg);
    cfg.threads = 3;
    const auto b = run_experiment(cfg);
    EXPECT_EQ(a.rows.to_csv(), b.rows.to_csv());
    EXPECT_EQ(a.summary.to_csv(), b.summary.to_csv());
    const auto spec = DistSpec::parse(cfg.dist);
    for (std::size_t i = 0; i < a.rows.rows.size(); ++i) {
        const double bound = a.rows.number(i, "bound");
        if (std::isnan(bound)) continue;
        const auto s = derived_scales(a.rows.number(i, "n"), cfg.gamma, cfg.kappa, spec.sigma2());
        EXPECT_EQ(bound, containment_bound(s));
    }
    EXPECT_FALSE(a.checks.empty());
}

TEST(Localization, TheoremEventEmptyAndBoundColumn) {
    auto cfg = small(Experiment::Localization);
    const auto r = run_experiment(cfg);
    for (std::size_t i = 0; i < r.rows.rows.size(); ++i) EXPECT_EQ(r.rows.number(i, "theorem_event"), 0.0);
    for (std::size_t i = 0; i < r.summary.rows.size(); ++i) {
        // gamma = 3 is below gamma0, so there is no theorem bound to report.
        EXPECT_TRUE(std::isnan(r.summary.number(i, "localization_bound")));
    }
    cfg.gamma = 30.0;
    const auto hi = run_experiment(cfg);
    const auto spec = DistSpec::parse(cfg.dist);
    for (std::size_t i = 0; i < hi.summary.rows.size(); ++i) {
        const auto s = derived_scales(hi.summary.number(i, "n"), 30.0, 1.0, spec.sigma2());
        EXPECT_EQ(hi.summary.number(i, "localization_bound"), localization_bound(s));
    }
}

TEST(Tails, BoundColumnReproducesEvaluator) {
    auto cfg = small(Experiment::TailVsBound);
    cfg.n_grid = {1e4};
    cfg.environments = 3;
    cfg.walks = 200;
    cfg.q_grid = {1, 10, 100, 1000};
    const auto r = run_experiment(cfg);
    ASSERT_FALSE(r.rows.rows.empty());
    const auto spec = DistSpec::parse(cfg.dist);
    const auto s = derived_scales(1e4, cfg.gamma, cfg.kappa, spec.sigma2());
    GoodEnvOptions o;
    o.chop_width = 0.0;
    // Recompute the first row of every environment from scratch.
    std::int64_t last_draw = -1;
    for (std::size_t i = 0; i < r.rows.rows.size(); ++i) {
        const auto draw = static_cast<std::int64_t>(r.rows.number(i, "draw"));
        const bool hinge = r.rows.number(i, "hinge") != 0.0;
        EXPECT_EQ(hinge, r.rows.number(i, "exponent") > 0.0);
        if (draw == last_draw) continue;
        last_draw = draw;
        const auto env = Environment::sampled(spec, derive_seed(cfg.seed, Stream::EnvDraw, static_cast<std::uint64_t>(draw)),
                                              {-1024, 1024});
        const auto rep = check_good_environment(env, 1e4, cfg.gamma, cfg.kappa, o);
        ASSERT_TRUE(rep.chain.has_value());
        const auto& v = *rep.valley;
        const PotentialView pot(env.covering({v.m_left - 1, v.m_right + 1}), 1e4);
        const Side side = r.rows.rows[i][r.rows.column("side")] == "right" ? Side::Right : Side::Left;
        const auto b = return_tail_bound(pot, *rep.chain, static_cast<int>(r.rows.number(i, "level")),
                                         r.rows.number(i, "q"), side);
        EXPECT_EQ(r.rows.number(i, "bound"), b.value);
    }
    (void)s;
}

TEST(Subdiffusivity, RunsAndWrites) {
    auto cfg = small(Experiment::Subdiffusivity);
    cfg.n_grid = {1e2, 1e3, 1e4};
    cfg.control_walks = 200;
    const auto r = run_experiment(cfg);
    EXPECT_EQ(r.rows.rows.size(), cfg.environments * cfg.walks);
    EXPECT_EQ(r.summary.rows.size(), 3u);
    const auto dir = std::filesystem::temp_directory_path() / "sinai_harness_test";
    std::filesystem::remove_all(dir);
    write_outputs(r, cfg, dir.string(), true);
    EXPECT_EQ(read(dir / "subdiff.csv"), r.rows.to_csv());
    EXPECT_EQ(Table::from_csv(read(dir / "subdiff_summary.csv")).rows, r.summary.rows);
    EXPECT_TRUE(std::filesystem::exists(dir / "subdiff.json"));
    EXPECT_TRUE(std::filesystem::exists(dir / "subdiff.dat"));
    std::filesystem::remove_all(dir);
}

TEST(GoodEnvScan, Runs) {
    auto cfg = small(Experiment::GoodEnvScan);
    cfg.environments = 100;
    cfg.n_grid = {1e4, 1e6};
    const auto r = run_experiment(cfg);
    EXPECT_EQ(r.rows.rows.size(), 200u);
    EXPECT_EQ(r.summary.rows.size(), 2u);
    EXPECT_EQ(r.checks.size(), 1u);
}

TEST(Selection, NoGoodEnvironment) {
    auto cfg = small(Experiment::Containment);
    cfg.all_envs = false;
    cfg.good_filter = GoodFilter::Full;
    cfg.chop_width = -1.0;
    cfg.max_env_draws = 20;
    EXPECT_EQ(kind_of([&] { run_experiment(cfg); }), ErrorKind::NoGoodEnvironmentFound);
}
