#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sinai/exact.hpp"
#include "sinai/goodenv.hpp"
#include "sinai/harness.hpp"
#include "sinai/io.hpp"
#include "sinai/walk.hpp"

using namespace sinai;
using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::InvalidConfig, "cannot read " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::InvalidConfig, "cannot write " + path);
    out << text;
}

std::uint64_t count_of(const std::string& text) {
    const double v = parse_number(text);
    if (v < 0 || v != std::floor(v)) throw Error(ErrorKind::InvalidConfig, "expected a count: " + text);
    return static_cast<std::uint64_t>(v);
}

std::int64_t site_of(const std::string& text) {
    const double v = parse_number(text);
    if (v != std::floor(v)) throw Error(ErrorKind::InvalidConfig, "expected an integer: " + text);
    return static_cast<std::int64_t>(v);
}

struct GoodArgs {
    std::string gamma = "3", kappa = "1", chop_width = "-1", barrier_cap = "65536";
    bool strict = false;

    void add(CLI::App* app) {
        app->add_option("--gamma", gamma);
        app->add_option("--kappa", kappa);
        app->add_option("--chop-width", chop_width, "negative: l_n * b_n");
        app->add_option("--barrier-cap", barrier_cap, "sites searched for the inner barrier");
        app->add_flag("--strict-normalization", strict, "read the side-dominance flank unnormalized");
    }
    GoodEnvOptions options() const {
        GoodEnvOptions o;
        o.chop_width = parse_number(chop_width);
        o.barrier_cap = site_of(barrier_cap);
        o.strict_normalization = strict;
        return o;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random walk in random environment: potentials, valleys, exact chains and experiments"};
    app.require_subcommand(1);
    int code = 0;

    // gen
    auto* gen = app.add_subcommand("gen", "sample an environment and write it as JSON");
    std::string gen_dist = "twopoint:0.3", gen_seed = "1", gen_window = "-1000:1000", gen_out;
    gen->add_option("--dist", gen_dist);
    gen->add_option("--seed", gen_seed);
    gen->add_option("--window", gen_window, "lo:hi");
    gen->add_option("--out", gen_out);
    gen->callback([&] {
        const auto env = Environment::sampled(DistSpec::parse(gen_dist), count_of(gen_seed), parse_window(gen_window));
        emit(gen_out, environment_to_json(env) + "\n");
    });

    // analyze
    auto* analyze = app.add_subcommand("analyze", "basic valley, refinement chain and inner barrier");
    std::string an_env, an_n = "1e6", an_sigma2, an_out;
    GoodArgs an_good;
    analyze->add_option("--env", an_env)->required();
    analyze->add_option("--n", an_n);
    analyze->add_option("--sigma2", an_sigma2, "needed for explicit environments");
    analyze->add_option("--out", an_out);
    an_good.add(analyze);
    analyze->callback([&] {
        const auto env = environment_from_json(slurp(an_env));
        auto options = an_good.options();
        if (!an_sigma2.empty()) options.sigma2 = parse_number(an_sigma2);
        const auto report = check_good_environment(env, parse_number(an_n), parse_number(an_good.gamma),
                                                   parse_number(an_good.kappa), options);
        emit(an_out, report_to_json(report) + "\n");
    });

    // goodenv
    auto* goodenv = app.add_subcommand("goodenv", "estimate the good-environment probability");
    std::string ge_dist = "twopoint:0.3", ge_n = "1e6", ge_replicas = "1000", ge_seed = "1", ge_out;
    int ge_threads = 0;
    GoodArgs ge_good;
    goodenv->add_option("--dist", ge_dist);
    goodenv->add_option("--n", ge_n);
    goodenv->add_option("--replicas", ge_replicas);
    goodenv->add_option("--seed", ge_seed);
    goodenv->add_option("--threads", ge_threads);
    goodenv->add_option("--out", ge_out);
    ge_good.add(goodenv);
    goodenv->callback([&] {
        const auto est = estimate_good_probability(DistSpec::parse(ge_dist), parse_number(ge_n),
                                                   parse_number(ge_good.gamma), parse_number(ge_good.kappa),
                                                   count_of(ge_replicas), count_of(ge_seed), ge_good.options(),
                                                   ge_threads, true);
        Table t;
        t.columns = {"replica", "overall"};
        for (auto c : kClauseNames) t.columns.emplace_back(c);
        for (auto c : {"m0", "M0", "M0p", "r", "rp"}) t.columns.emplace_back(c);
        for (std::size_t i = 0; i < est.reports.size(); ++i) {
            const auto& r = est.reports[i];
            std::vector<std::string> row{format_number(static_cast<std::uint64_t>(i)), format_number(int(r.overall))};
            for (const auto& c : r.clauses) row.emplace_back(to_string(c.status));
            for (auto v : {r.valley ? format_number(r.valley->bottom) : "nan",
                           r.valley ? format_number(r.valley->m_right) : "nan",
                           r.valley ? format_number(r.valley->m_left) : "nan",
                           r.chain ? format_number(r.chain->right.r) : "nan",
                           r.chain ? format_number(r.chain->left.r) : "nan"})
                row.push_back(v);
            t.rows.push_back(row);
        }
        emit(ge_out, t.to_csv());
        std::cerr << "good: " << est.estimate << " +- " << est.se << "  basin: " << est.basin_estimate << " +- "
                  << est.basin_se << "  undetermined: " << est.undetermined << "\n";
    });

    // exact
    auto* exact = app.add_subcommand("exact", "exit probabilities and exit-time moments");
    std::string ex_env, ex_n = "1e6", ex_a, ex_x, ex_b;
    exact->add_option("--env", ex_env)->required();
    exact->add_option("--n", ex_n, "accepted for symmetry; the chain formulas do not depend on n");
    exact->add_option("--a", ex_a)->required();
    exact->add_option("--x", ex_x)->required();
    exact->add_option("--b", ex_b)->required();
    exact->callback([&] {
        const auto env = environment_from_json(slurp(ex_env));
        const auto a = site_of(ex_a), x = site_of(ex_x), b = site_of(ex_b);
        const auto p = exit_prob(env, a, x, b);
        const auto t = expected_exit_time(env, a, x, b);
        json j{{"pB", p.p_b_first}, {"pA", p.p_a_first}, {"eT", t.value}};
        // Second moment is available from the sites next to an end.
        if (x == a + 1 && b > a + 1) j["eT2"] = second_moment_exit_adjacent(env, a, b - 1, Side::Right).value;
        else if (x == b - 1 && b > a + 1) j["eT2"] = second_moment_exit_adjacent(env, b, a + 1, Side::Left).value;
        std::cout << j.dump(2) << "\n";
    });

    // simulate
    auto* simulate_cmd = app.add_subcommand("simulate", "walk replicas in a fixed environment");
    std::string si_env, si_start = "0", si_steps = "1e6", si_replicas = "1000", si_seed = "1", si_record = "endpoints",
                si_stop, si_out;
    std::vector<std::string> si_targets;
    int si_threads = 0;
    simulate_cmd->add_option("--env", si_env)->required();
    simulate_cmd->add_option("--start", si_start);
    simulate_cmd->add_option("--steps", si_steps);
    simulate_cmd->add_option("--replicas", si_replicas);
    simulate_cmd->add_option("--seed", si_seed);
    simulate_cmd->add_option("--record", si_record)->check(CLI::IsMember({"endpoints", "hitting", "full"}));
    simulate_cmd->add_option("--target", si_targets, "site whose first hitting time is recorded");
    simulate_cmd->add_option("--stop", si_stop, "lo:hi, stop on leaving");
    simulate_cmd->add_option("--threads", si_threads);
    simulate_cmd->add_option("--out", si_out);
    simulate_cmd->callback([&] {
        const auto env = environment_from_json(slurp(si_env));
        WalkerConfig cfg;
        cfg.start = site_of(si_start);
        cfg.max_steps = count_of(si_steps);
        for (const auto& t : si_targets) cfg.targets.push_back(site_of(t));
        if (!si_stop.empty()) cfg.stop_outside = parse_window(si_stop);
        cfg.mode = si_record == "full"      ? RecordMode::FullTrajectory
                   : si_record == "hitting" ? RecordMode::HittingTimesOnly
                                            : RecordMode::EndpointOnly;
        const Window w = env.extendable() ? Window{std::min(env.window().lo, cfg.start - 64),
                                                   std::max(env.window().hi, cfg.start + 64)}
                                          : env.window();
        if (!w.contains(cfg.start)) throw Error(ErrorKind::OutOfWindow, "start outside the environment");
        const auto results = simulate_replicas(StepTable(env, w), cfg, count_of(si_replicas), count_of(si_seed), si_threads);
        Table t;
        t.columns = {"replica", "endpoint", "steps", "censored", "exit_time"};
        for (auto s : cfg.targets) t.columns.push_back("hit_" + format_number(s));
        if (cfg.mode == RecordMode::FullTrajectory) t.columns.push_back("trajectory");
        for (std::size_t i = 0; i < results.size(); ++i) {
            const auto& r = results[i];
            std::vector<std::string> row{format_number(static_cast<std::uint64_t>(i)), format_number(r.endpoint),
                                         format_number(r.steps), format_number(int(!r.exit_time)),
                                         r.exit_time ? format_number(*r.exit_time) : ""};
            for (const auto& h : r.hitting_times) row.push_back(h ? format_number(*h) : "");
            if (cfg.mode == RecordMode::FullTrajectory) {
                std::string path;
                for (std::size_t k = 0; k < r.trajectory.size(); ++k)
                    path += (k ? " " : "") + format_number(r.trajectory[k]);
                row.push_back(path);
            }
            t.rows.push_back(row);
        }
        emit(si_out, t.to_csv());
    });

    // experiment
    auto* experiment = app.add_subcommand("experiment", "run a Monte Carlo experiment from a JSON config");
    std::string xp_name, xp_config, xp_out = ".";
    int xp_threads = 0;
    bool xp_plot = false, xp_all = false;
    experiment->add_option("name", xp_name, "containment|localization|subdiff|goodenv|tails")->required();
    experiment->add_option("--config", xp_config)->required();
    experiment->add_option("--threads", xp_threads, "default: SINAI_THREADS, else 1");
    experiment->add_option("--out", xp_out, "output directory");
    experiment->add_flag("--plot", xp_plot, "also write a gnuplot data file");
    experiment->add_flag("--all-envs", xp_all, "keep environments that fail the good-environment check");
    experiment->callback([&] {
        auto cfg = config_from_json(slurp(xp_config));
        cfg.experiment = parse_experiment(xp_name);
        if (xp_threads > 0) cfg.threads = xp_threads;
        if (xp_all) cfg.all_envs = true;
        const auto result = run_experiment(cfg);
        write_outputs(result, cfg, xp_out, xp_plot);
        for (const auto& c : result.checks)
            std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
        code = result.all_passed() ? 0 : 2;
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int r = app.exit(e);
        return r == 0 ? 0 : 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return code;
}
