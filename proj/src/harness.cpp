#include "sinai/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "sinai/exact.hpp"
#include "sinai/goodenv.hpp"
#include "sinai/parallel.hpp"
#include "sinai/rng.hpp"
#include "sinai/valleys.hpp"
#include "sinai/walk.hpp"

namespace sinai {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double joint_se(double a, double b) { return std::sqrt(a * a + b * b); }

std::uint64_t walk_seed(std::uint64_t master, std::size_t n_index, std::uint64_t draw) {
    return derive_seed(master, Stream::Replica, (draw << 8) | static_cast<std::uint64_t>(n_index));
}

Environment draw_environment(const DistSpec& spec, std::uint64_t master, std::uint64_t draw) {
    return Environment::sampled(spec, derive_seed(master, Stream::EnvDraw, draw), {-1024, 1024});
}

GoodEnvOptions good_options(const ExperimentConfig& cfg) {
    GoodEnvOptions o;
    o.chop_width = cfg.chop_width;
    o.barrier_cap = cfg.barrier_cap;
    o.strict_normalization = cfg.strict_normalization;
    return o;
}

bool is_good(const GoodEnvReport& r, GoodFilter filter) {
    return filter == GoodFilter::Full ? r.overall : r.passes(kBasinClauses);
}

struct Pick {
    std::uint64_t draw = 0;
    Environment env;
    GoodEnvReport report;
    bool good = false;
};

// Environments for one horizon, in draw order. Goodness is evaluated in
// parallel batches, selection is sequential, so the result is schedule-free.
std::vector<Pick> select_environments(const ExperimentConfig& cfg, const DistSpec& spec, double n,
                                      bool need_chain = false) {
    const auto options = good_options(cfg);
    std::vector<Pick> picked;
    std::uint64_t next = 0;
    while (picked.size() < cfg.environments && next < cfg.max_env_draws) {
        const std::uint64_t batch = std::min<std::uint64_t>(
            cfg.max_env_draws - next, cfg.all_envs ? cfg.environments - picked.size()
                                                   : std::max<std::uint64_t>(64, 2 * (cfg.environments - picked.size())));
        std::vector<std::optional<Pick>> slots(batch);
        parallel_for(batch, cfg.threads, [&](std::uint64_t k) {
            const std::uint64_t draw = next + k;
            Environment env = draw_environment(spec, cfg.seed, draw);
            auto report = check_good_environment(env, n, cfg.gamma, cfg.kappa, options);
            const bool good = report.valley && is_good(report, cfg.good_filter);
            slots[k] = Pick{draw, std::move(env), std::move(report), good};
        });
        for (auto& s : slots) {
            if (picked.size() >= cfg.environments) break;
            const bool usable = s->report.valley && (!need_chain || s->report.chain);
            if (cfg.all_envs || (s->good && usable)) picked.push_back(std::move(*s));
        }
        next += batch;
    }
    if (picked.empty())
        throw Error(ErrorKind::NoGoodEnvironmentFound,
                    "no usable environment in " + std::to_string(cfg.max_env_draws) + " draws at n = " +
                        format_number(n));
    return picked;
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

// Mean over environments of per-environment frequencies; the error bar is the
// larger of the between-environment and pooled binomial errors.
MeanSe cluster_mean(const std::vector<double>& freqs, std::uint64_t walks_each) {
    MeanSe out;
    if (freqs.empty()) return out;
    const double k = static_cast<double>(freqs.size());
    out.mean = std::accumulate(freqs.begin(), freqs.end(), 0.0) / k;
    double var = 0.0;
    for (double f : freqs) var += (f - out.mean) * (f - out.mean);
    const double between = freqs.size() > 1 ? std::sqrt(var / (k - 1.0) / k) : 0.0;
    const double pooled = std::sqrt(out.mean * (1.0 - out.mean) / (k * static_cast<double>(walks_each)));
    out.se = std::max(between, pooled);
    return out;
}

std::string describe(double value, double se) {
    std::ostringstream s;
    s.precision(4);
    s << value << " +- " << se;
    return s.str();
}

DistSpec spec_of(const ExperimentConfig& cfg) { return DistSpec::parse(cfg.dist); }

std::vector<double> sorted_grid(std::vector<double> grid) {
    if (grid.empty()) throw Error(ErrorKind::InvalidConfig, "n_grid is empty");
    std::sort(grid.begin(), grid.end());
    return grid;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(Experiment e) {
    switch (e) {
    case Experiment::Containment: return "containment";
    case Experiment::Localization: return "localization";
    case Experiment::Subdiffusivity: return "subdiff";
    case Experiment::GoodEnvScan: return "goodenv";
    case Experiment::TailVsBound: return "tails";
    }
    return "unknown";
}

Experiment parse_experiment(const std::string& name) {
    for (auto e : {Experiment::Containment, Experiment::Localization, Experiment::Subdiffusivity,
                   Experiment::GoodEnvScan, Experiment::TailVsBound})
        if (to_string(e) == name) return e;
    if (name == "subdiffusivity") return Experiment::Subdiffusivity;
    throw Error(ErrorKind::InvalidConfig, "unknown experiment '" + name + "'");
}

namespace {

double json_number(const json& v) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        std::size_t used = 0;
        const double d = std::stod(s, &used);
        if (used == s.size()) return d;
    }
    throw Error(ErrorKind::InvalidConfig, "expected a number, got " + v.dump());
}

std::uint64_t json_count(const json& v) {
    const double d = json_number(v);
    if (d < 0 || d != std::floor(d)) throw Error(ErrorKind::InvalidConfig, "expected a count, got " + v.dump());
    return static_cast<std::uint64_t>(d);
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, e.what());
    }
    ExperimentConfig c;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& k = it.key();
        const auto& v = it.value();
        if (k == "experiment") c.experiment = parse_experiment(v.get<std::string>());
        else if (k == "dist") c.dist = v.get<std::string>();
        else if (k == "n_grid") {
            c.n_grid.clear();
            for (const auto& x : v) c.n_grid.push_back(json_number(x));
        } else if (k == "gamma") c.gamma = json_number(v);
        else if (k == "kappa") c.kappa = json_number(v);
        else if (k == "environments") c.environments = json_count(v);
        else if (k == "walks") c.walks = json_count(v);
        else if (k == "seed") c.seed = v.is_number_unsigned() ? v.get<std::uint64_t>() : json_count(v);
        else if (k == "threads") c.threads = static_cast<int>(json_count(v));
        else if (k == "all_envs") c.all_envs = v.get<bool>();
        else if (k == "good_filter") {
            const auto f = v.get<std::string>();
            if (f == "basin") c.good_filter = GoodFilter::Basin;
            else if (f == "full") c.good_filter = GoodFilter::Full;
            else throw Error(ErrorKind::InvalidConfig, "good_filter is basin or full");
        } else if (k == "chop_width") c.chop_width = json_number(v);
        else if (k == "barrier_cap") c.barrier_cap = static_cast<std::int64_t>(json_count(v));
        else if (k == "strict_normalization") c.strict_normalization = v.get<bool>();
        else if (k == "max_env_draws") c.max_env_draws = json_count(v);
        else if (k == "q_grid") {
            c.q_grid.clear();
            for (const auto& x : v) c.q_grid.push_back(json_number(x));
        } else if (k == "control_walks") c.control_walks = json_count(v);
        else throw Error(ErrorKind::InvalidConfig, "unknown config key '" + k + "'");
    }
    if (c.n_grid.empty()) throw Error(ErrorKind::InvalidConfig, "n_grid must not be empty");
    if (c.environments == 0 || c.walks == 0) throw Error(ErrorKind::InvalidConfig, "need environments and walks");
    DistSpec::parse(c.dist);
    return c;
}

std::string config_to_json(const ExperimentConfig& c) {
    json j;
    j["experiment"] = to_string(c.experiment);
    j["dist"] = c.dist;
    j["n_grid"] = c.n_grid;
    j["gamma"] = c.gamma;
    j["kappa"] = c.kappa;
    j["environments"] = c.environments;
    j["walks"] = c.walks;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["all_envs"] = c.all_envs;
    j["good_filter"] = c.good_filter == GoodFilter::Basin ? "basin" : "full";
    j["chop_width"] = c.chop_width;
    j["barrier_cap"] = c.barrier_cap;
    j["strict_normalization"] = c.strict_normalization;
    j["max_env_draws"] = c.max_env_draws;
    j["q_grid"] = c.q_grid;
    j["control_walks"] = c.control_walks;
    return j.dump(2);
}

// ---------------------------------------------------------------------------

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
std::string format_number(std::int64_t v) { return std::to_string(v); }
std::string format_number(std::uint64_t v) { return std::to_string(v); }
std::string format_number(int v) { return std::to_string(v); }

std::string Table::to_csv() const {
    std::string out;
    for (std::size_t k = 0; k < columns.size(); ++k) out += (k ? "," : "") + columns[k];
    out += '\n';
    for (const auto& row : rows) {
        for (std::size_t k = 0; k < row.size(); ++k) out += (k ? "," : "") + row[k];
        out += '\n';
    }
    return out;
}

Table Table::from_csv(const std::string& text) {
    Table t;
    std::istringstream in(text);
    std::string line;
    auto split = [](const std::string& l) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream s(l);
        while (std::getline(s, cell, ',')) cells.push_back(cell);
        if (!l.empty() && l.back() == ',') cells.emplace_back();
        return cells;
    };
    if (std::getline(in, line)) t.columns = split(line);
    while (std::getline(in, line))
        if (!line.empty()) t.rows.push_back(split(line));
    return t;
}

std::size_t Table::column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw Error(ErrorKind::InvalidConfig, "no column '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
}

double Table::number(std::size_t row, const std::string& name) const {
    const auto& cell = rows.at(row).at(column(name));
    if (cell == "nan") return kNaN;
    if (cell == "inf") return std::numeric_limits<double>::infinity();
    if (cell == "-inf") return -std::numeric_limits<double>::infinity();
    return std::stod(cell);
}

bool ExperimentResult::all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) return kNaN;
    std::sort(values.begin(), values.end());
    // Type-7 interpolation (R's and numpy's default).
    const double h = (static_cast<double>(values.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

// ---------------------------------------------------------------------------

EscapeCounts containment_escapes(const Environment& env, const Valley& v, double n, double extent_bound,
                                 std::uint64_t walks, std::uint64_t seed, int threads) {
    const auto B = static_cast<std::int64_t>(std::floor(extent_bound));
    WalkerConfig w;
    w.start = 0;
    w.max_steps = static_cast<std::uint64_t>(n);
    w.mode = RecordMode::HittingTimesOnly;
    // Stop once outside both intervals; the targets tell which was left first.
    w.stop_outside = Window{std::min(v.m_left, -B), std::max(v.m_right, B)};
    w.targets = {v.m_left - 1, v.m_right + 1, -B - 1, B + 1};
    const Window span{w.stop_outside->lo - 1, w.stop_outside->hi + 1};
    const StepTable table(env, env.extendable() ? span : env.window());
    const auto results = simulate_replicas(table, w, walks, seed, threads);
    EscapeCounts out;
    out.walks = walks;
    for (const auto& r : results) {
        if (r.exit_time || r.hitting_times[0] || r.hitting_times[1]) ++out.valley;
        if (r.exit_time || r.hitting_times[2] || r.hitting_times[3]) ++out.fixed;
    }
    return out;
}

ExperimentResult run_containment(const ExperimentConfig& cfg) {
    const auto grid = sorted_grid(cfg.n_grid);
    const auto spec = spec_of(cfg);
    ExperimentResult res;
    res.name = "containment";
    res.rows.columns = {"n", "draw", "good", "basin", "m0", "M0p", "M0", "walks", "escapes", "escape_freq",
                        "fixed_escapes", "fixed_freq", "bound"};
    res.summary.columns = {"n", "environments", "walks", "escape_freq", "se", "fixed_freq", "fixed_se", "bound"};

    std::vector<MeanSe> per_n;
    for (std::size_t ni = 0; ni < grid.size(); ++ni) {
        const double n = grid[ni];
        const auto picks = select_environments(cfg, spec, n);
        const auto scales = derived_scales(n, cfg.gamma, cfg.kappa, spec.sigma2());
        const double bound = containment_bound(scales);

        std::vector<double> freqs, fixed_freqs;
        for (const auto& p : picks) {
            std::vector<std::string> row{format_number(n), format_number(p.draw), format_number(int(p.good)),
                                         format_number(int(p.report.passes(kBasinClauses)))};
            if (!p.report.valley) {
                for (int k = 0; k < 9; ++k) row.push_back("nan");
                res.rows.rows.push_back(row);
                continue;
            }
            const auto& v = *p.report.valley;
            const auto c = containment_escapes(p.env, v, n, scales.extent_bound(), cfg.walks,
                                               walk_seed(cfg.seed, ni, p.draw), cfg.threads);
            const std::uint64_t escapes = c.valley, fixed = c.fixed;
            const auto f = binomial(escapes, cfg.walks);
            const auto g = binomial(fixed, cfg.walks);
            freqs.push_back(f.value);
            fixed_freqs.push_back(g.value);
            for (auto x : {v.bottom, v.m_left, v.m_right}) row.push_back(format_number(x));
            row.push_back(format_number(cfg.walks));
            row.push_back(format_number(escapes));
            row.push_back(format_number(f.value));
            row.push_back(format_number(fixed));
            row.push_back(format_number(g.value));
            row.push_back(format_number(bound));
            res.rows.rows.push_back(row);
        }
        const auto m = cluster_mean(freqs, cfg.walks);
        const auto mf = cluster_mean(fixed_freqs, cfg.walks);
        per_n.push_back(m);
        res.summary.rows.push_back({format_number(n), format_number(static_cast<std::uint64_t>(freqs.size())),
                                    format_number(static_cast<std::uint64_t>(freqs.size()) * cfg.walks),
                                    format_number(m.mean), format_number(m.se), format_number(mf.mean),
                                    format_number(mf.se), format_number(bound)});
        res.checks.push_back({"escape_below_bound n=" + format_number(n), m.mean <= bound + 3.0 * m.se,
                              describe(m.mean, m.se) + " vs bound " + format_number(bound)});
        res.checks.push_back({"fixed_interval_below_bound n=" + format_number(n), mf.mean <= bound + 3.0 * mf.se,
                              describe(mf.mean, mf.se) + " vs bound " + format_number(bound)});
    }
    for (std::size_t k = 1; k < per_n.size(); ++k) {
        const bool ok = per_n[k].mean <= per_n[k - 1].mean + 2.0 * joint_se(per_n[k].se, per_n[k - 1].se);
        res.checks.push_back({"escape_non_increasing " + format_number(grid[k - 1]) + "->" + format_number(grid[k]), ok,
                              describe(per_n[k - 1].mean, per_n[k - 1].se) + " -> " +
                                  describe(per_n[k].mean, per_n[k].se)});
    }
    return res;
}

ExperimentResult run_localization(const ExperimentConfig& cfg) {
    const auto grid = sorted_grid(cfg.n_grid);
    const auto spec = spec_of(cfg);
    ExperimentResult res;
    res.name = "localization";
    res.rows.columns = {"n", "draw", "good", "m0", "M0p", "M0", "barrier_lo", "barrier_hi", "barrier_known",
                        "walks", "theorem_event", "inside_barrier", "inside_valley", "no_late_return", "q"};
    res.summary.columns = {"n",          "environments",     "theorem_freq", "localization_bound", "half_width_sites",
                           "barrier_freq", "barrier_se",       "valley_freq",  "valley_se",          "no_late_return_freq",
                           "no_late_return_se", "leading_term"};

    std::vector<MeanSe> barrier_per_n;
    for (std::size_t ni = 0; ni < grid.size(); ++ni) {
        const double n = grid[ni];
        const auto picks = select_environments(cfg, spec, n);
        const auto scales = derived_scales(n, cfg.gamma, cfg.kappa, spec.sigma2());
        const auto bounds = theorem_bounds(scales);
        const double q_real = std::min(std::exp(std::min(scales.log_q_n, 700.0)), n);
        const auto q = static_cast<std::uint64_t>(std::ceil(q_real));

        std::vector<double> barrier_f, valley_f, late_f;
        std::uint64_t theorem_hits = 0, total = 0;
        for (const auto& p : picks) {
            if (!p.report.valley) continue;
            const auto& v = *p.report.valley;
            const std::int64_t m0 = v.bottom;
            std::int64_t lo, hi;
            const bool known = p.report.barrier.has_value();
            if (known) {
                lo = p.report.barrier->m_less;
                hi = p.report.barrier->m_greater;
            } else {
                // Barrier lies beyond the searched range, so that range is inside it.
                lo = m0 - cfg.barrier_cap;
                hi = m0 + cfg.barrier_cap;
            }
            WalkerConfig w;
            w.start = 0;
            w.max_steps = static_cast<std::uint64_t>(n);
            w.watch_site = m0;
            const StepTable table(p.env, {std::min<std::int64_t>(v.m_left, -64) - 64, std::max<std::int64_t>(v.m_right, 64) + 64});
            const auto walks = simulate_replicas(table, w, cfg.walks, walk_seed(cfg.seed, ni, p.draw), cfg.threads);
            std::uint64_t event = 0, in_barrier = 0, in_valley = 0, no_return = 0;
            for (const auto& r : walks) {
                const double dist = std::abs(static_cast<double>(r.endpoint - m0));
                if (dist > bounds.half_width_sites) ++event;
                if (lo <= r.endpoint && r.endpoint <= hi) ++in_barrier;
                if (v.m_left <= r.endpoint && r.endpoint <= v.m_right) ++in_valley;
                if (!r.last_visit || *r.last_visit < static_cast<std::uint64_t>(n) - q) ++no_return;
            }
            theorem_hits += event;
            total += cfg.walks;
            barrier_f.push_back(binomial(in_barrier, cfg.walks).value);
            valley_f.push_back(binomial(in_valley, cfg.walks).value);
            late_f.push_back(binomial(no_return, cfg.walks).value);
            res.rows.rows.push_back({format_number(n), format_number(p.draw), format_number(int(p.good)),
                                     format_number(m0), format_number(v.m_left), format_number(v.m_right),
                                     format_number(lo), format_number(hi), format_number(int(known)),
                                     format_number(cfg.walks), format_number(event), format_number(in_barrier),
                                     format_number(in_valley), format_number(no_return), format_number(q)});
        }
        const auto mb = cluster_mean(barrier_f, cfg.walks);
        const auto mv = cluster_mean(valley_f, cfg.walks);
        const auto ml = cluster_mean(late_f, cfg.walks);
        barrier_per_n.push_back(mb);
        const auto theorem = binomial(theorem_hits, total);
        const double loc = bounds.localization.value_or(kNaN);
        res.summary.rows.push_back({format_number(n), format_number(static_cast<std::uint64_t>(barrier_f.size())),
                                    format_number(theorem.value), format_number(loc),
                                    format_number(bounds.half_width_sites), format_number(mb.mean),
                                    format_number(mb.se), format_number(mv.mean), format_number(mv.se),
                                    format_number(ml.mean), format_number(ml.se),
                                    format_number(bounds.last_return_leading.value_or(kNaN))});
        res.checks.push_back({"theorem_event_empty n=" + format_number(n), theorem_hits == 0,
                              format_number(theorem_hits) + " of " + format_number(total) +
                                  " endpoints beyond half-width " + format_number(bounds.half_width_sites)});
        if (bounds.localization)
            res.checks.push_back({"theorem_below_bound n=" + format_number(n),
                                  theorem.value <= loc + 3.0 * theorem.se,
                                  describe(theorem.value, theorem.se) + " vs " + format_number(loc)});
    }
    for (std::size_t k = 1; k < barrier_per_n.size(); ++k) {
        const auto& a = barrier_per_n[k - 1];
        const auto& b = barrier_per_n[k];
        res.checks.push_back({"barrier_non_decreasing " + format_number(grid[k - 1]) + "->" + format_number(grid[k]),
                              b.mean >= a.mean - 2.0 * joint_se(a.se, b.se),
                              describe(a.mean, a.se) + " -> " + describe(b.mean, b.se)});
    }
    return res;
}

ExperimentResult run_subdiffusivity(const ExperimentConfig& cfg) {
    const auto grid = sorted_grid(cfg.n_grid);
    const auto spec = spec_of(cfg);
    const double n_max = grid.back();
    std::vector<std::uint64_t> checkpoints;
    for (double n : grid) checkpoints.push_back(static_cast<std::uint64_t>(n));

    ExperimentResult res;
    res.name = "subdiff";
    res.rows.columns = {"draw", "walk"};
    for (double n : grid) res.rows.columns.push_back("x_" + format_number(n));
    res.summary.columns = {"n",          "median_abs",        "q90_abs",         "median_over_sqrt_n",
                           "median_over_log2", "flat_median_abs", "flat_q90_abs", "flat_median_over_sqrt_n"};

    WalkerConfig w;
    w.start = 0;
    w.max_steps = static_cast<std::uint64_t>(n_max);
    w.checkpoints = checkpoints;
    const double log_max = std::log(n_max);
    const auto half = static_cast<std::int64_t>(std::max(4096.0, 8.0 * log_max * log_max / spec.sigma2()));

    const std::uint64_t total = cfg.environments * cfg.walks;
    std::vector<WalkResult> walks(total);
    std::vector<std::optional<StepTable>> tables(cfg.environments);
    parallel_for(cfg.environments, cfg.threads, [&](std::uint64_t e) {
        tables[e].emplace(draw_environment(spec, cfg.seed, e), Window{-half, half});
    });
    parallel_for(total, cfg.threads, [&](std::uint64_t k) {
        const std::uint64_t e = k / cfg.walks, i = k % cfg.walks;
        WalkerConfig c = w;
        c.seed = derive_seed(walk_seed(cfg.seed, 0, e), Stream::Replica, i);
        walks[k] = simulate(*tables[e], c);
    });
    tables.clear();

    std::vector<WalkResult> flat(cfg.control_walks);
    {
        const auto flat_half = static_cast<std::int64_t>(8.0 * std::sqrt(n_max)) + 64;
        const StepTable table(Environment::constant(0.5, {-flat_half, flat_half}), {-flat_half, flat_half});
        flat = simulate_replicas(table, w, cfg.control_walks, derive_seed(cfg.seed, Stream::EnvDraw, ~0ULL),
                                 cfg.threads);
    }

    for (std::uint64_t k = 0; k < total; ++k) {
        std::vector<std::string> row{format_number(k / cfg.walks), format_number(k % cfg.walks)};
        for (auto x : walks[k].checkpoint_positions) row.push_back(format_number(x));
        res.rows.rows.push_back(row);
    }

    std::vector<double> sqrt_ratio, log_ratio, flat_ratio;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        std::vector<double> abs_x, abs_flat;
        for (const auto& r : walks) abs_x.push_back(std::abs(static_cast<double>(r.checkpoint_positions[j])));
        for (const auto& r : flat) abs_flat.push_back(std::abs(static_cast<double>(r.checkpoint_positions[j])));
        const double n = grid[j];
        const double med = quantile(abs_x, 0.5);
        const double fmed = quantile(abs_flat, 0.5);
        sqrt_ratio.push_back(med / std::sqrt(n));
        log_ratio.push_back(med / (std::log(n) * std::log(n)));
        flat_ratio.push_back(fmed / std::sqrt(n));
        res.summary.rows.push_back({format_number(n), format_number(med), format_number(quantile(abs_x, 0.9)),
                                    format_number(sqrt_ratio.back()), format_number(log_ratio.back()),
                                    format_number(fmed), format_number(quantile(abs_flat, 0.9)),
                                    format_number(flat_ratio.back())});
    }
    for (std::size_t j = 1; j < grid.size(); ++j)
        res.checks.push_back({"sqrt_ratio_decreasing " + format_number(grid[j - 1]) + "->" + format_number(grid[j]),
                              sqrt_ratio[j] < sqrt_ratio[j - 1],
                              format_number(sqrt_ratio[j - 1]) + " -> " + format_number(sqrt_ratio[j])});
    const double flat_mean = std::accumulate(flat_ratio.begin(), flat_ratio.end(), 0.0) / double(flat_ratio.size());
    double worst = 0.0;
    for (double f : flat_ratio) worst = std::max(worst, std::abs(f / flat_mean - 1.0));
    res.checks.push_back({"flat_control_within_20pct", worst <= 0.2,
                          "largest deviation " + format_number(worst) + " from mean " + format_number(flat_mean)});
    const auto [lo, hi] = std::minmax_element(log_ratio.begin(), log_ratio.end());
    res.checks.push_back({"log_ratio_within_10x", *lo > 0.0 && *hi / *lo <= 10.0,
                          "max/min = " + format_number(*lo > 0.0 ? *hi / *lo : kNaN)});
    return res;
}

ExperimentResult run_good_env_scan(const ExperimentConfig& cfg) {
    const auto grid = sorted_grid(cfg.n_grid);
    const auto spec = spec_of(cfg);
    const auto options = good_options(cfg);
    ExperimentResult res;
    res.name = "goodenv";
    res.rows.columns = {"n", "replica", "overall", "basin"};
    for (auto c : kClauseNames) res.rows.columns.emplace_back(c);
    for (auto c : {"m0", "M0", "M0p", "r", "rp"}) res.rows.columns.emplace_back(c);
    res.summary.columns = {"n", "replicas", "estimate", "se", "basin_estimate", "basin_se", "undetermined"};
    for (auto c : kClauseNames) res.summary.columns.push_back("fail_" + std::string(c));

    std::vector<MeanSe> per_n;
    for (double n : grid) {
        const auto est =
            estimate_good_probability(spec, n, cfg.gamma, cfg.kappa, cfg.environments, cfg.seed, options, cfg.threads, true);
        for (std::size_t i = 0; i < est.reports.size(); ++i) {
            const auto& r = est.reports[i];
            std::vector<std::string> row{format_number(n), format_number(static_cast<std::uint64_t>(i)),
                                         format_number(int(r.overall)), format_number(int(r.passes(kBasinClauses)))};
            for (const auto& c : r.clauses) row.emplace_back(to_string(c.status));
            if (r.valley) {
                row.push_back(format_number(r.valley->bottom));
                row.push_back(format_number(r.valley->m_right));
                row.push_back(format_number(r.valley->m_left));
            } else {
                row.insert(row.end(), {"nan", "nan", "nan"});
            }
            row.push_back(r.chain ? format_number(r.chain->right.r) : "nan");
            row.push_back(r.chain ? format_number(r.chain->left.r) : "nan");
            res.rows.rows.push_back(row);
        }
        std::vector<std::string> s{format_number(n),          format_number(est.replicas),
                                   format_number(est.estimate), format_number(est.se),
                                   format_number(est.basin_estimate), format_number(est.basin_se),
                                   format_number(est.undetermined)};
        for (auto c : kClauseNames) s.push_back(format_number(est.failures.at(std::string(c))));
        res.summary.rows.push_back(s);
        per_n.push_back({est.estimate, est.se});
    }
    for (std::size_t k = 1; k < per_n.size(); ++k) {
        const auto& a = per_n[k - 1];
        const auto& b = per_n[k];
        res.checks.push_back({"good_fraction_non_decreasing " + format_number(grid[k - 1]) + "->" + format_number(grid[k]),
                              b.mean >= a.mean - 2.0 * joint_se(a.se, b.se),
                              describe(a.mean, a.se) + " -> " + describe(b.mean, b.se)});
    }
    return res;
}

ExperimentResult run_tail_vs_bound(const ExperimentConfig& cfg) {
    const auto grid = sorted_grid(cfg.n_grid);
    const auto spec = spec_of(cfg);
    std::vector<double> q_grid = cfg.q_grid;
    if (q_grid.empty())
        for (int k = 0; k < 20; ++k) q_grid.push_back(std::round(std::pow(10.0, 5.0 * k / 19.0)));

    ExperimentResult res;
    res.name = "tails";
    res.rows.columns = {"n", "draw", "side", "level", "q", "tail", "se", "bound", "d", "exponent", "hinge", "violation"};
    res.summary.columns = {"n", "environments", "levels", "comparisons", "violations", "largest_tail_over_bound"};

    std::uint64_t all_violations = 0;
    for (std::size_t ni = 0; ni < grid.size(); ++ni) {
        const double n = grid[ni];
        const auto picks = select_environments(cfg, spec, n, true);
        std::uint64_t levels = 0, comparisons = 0, violations = 0, used = 0;
        double worst = 0.0;
        for (const auto& p : picks) {
            if (!p.report.chain) continue;
            ++used;
            const auto& v = *p.report.valley;
            const auto& chain = *p.report.chain;
            const PotentialView pot(p.env.covering({v.m_left - 1, v.m_right + 1}), n);
            for (Side side : {Side::Right, Side::Left}) {
                const int dir = side == Side::Right ? 1 : -1;
                const auto tails = estimate_return_tail(pot.env(), v.bottom, dir, q_grid, cfg.walks,
                                                        walk_seed(cfg.seed, ni, p.draw) ^ (dir > 0 ? 0 : kGolden),
                                                        cfg.threads);
                for (int i = 0; i <= chain.count(side); ++i) {
                    ++levels;
                    const bool hinge = chain.delta(i + 1, i + 1, side) > chain.eta(i, i + 1, side);
                    for (const auto& t : tails) {
                        const auto b = return_tail_bound(pot, chain, i, std::max(t.q, 1e-300), side);
                        const bool bad = t.tail > b.value + 3.0 * t.se;
                        ++comparisons;
                        violations += bad;
                        if (b.value > 0.0) worst = std::max(worst, t.tail / b.value);
                        res.rows.rows.push_back({format_number(n), format_number(p.draw),
                                                 side == Side::Right ? "right" : "left", format_number(i),
                                                 format_number(t.q), format_number(t.tail), format_number(t.se),
                                                 format_number(b.value), format_number(b.d), format_number(b.exponent),
                                                 format_number(int(hinge)), format_number(int(bad))});
                    }
                }
            }
        }
        all_violations += violations;
        res.summary.rows.push_back({format_number(n), format_number(used), format_number(levels),
                                    format_number(comparisons), format_number(violations), format_number(worst)});
        res.checks.push_back({"tail_bounds n=" + format_number(n), violations == 0,
                              format_number(violations) + " violations in " + format_number(comparisons) +
                                  " comparisons"});
    }
    return res;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    ExperimentResult res;
    switch (cfg.experiment) {
    case Experiment::Containment: res = run_containment(cfg); break;
    case Experiment::Localization: res = run_localization(cfg); break;
    case Experiment::Subdiffusivity: res = run_subdiffusivity(cfg); break;
    case Experiment::GoodEnvScan: res = run_good_env_scan(cfg); break;
    case Experiment::TailVsBound: res = run_tail_vs_bound(cfg); break;
    }
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

void write_outputs(const ExperimentResult& result, const ExperimentConfig& cfg, const std::string& dir, bool plot) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto write = [&](const std::string& file, const std::string& text) {
        std::ofstream out(fs::path(dir) / file, std::ios::binary);
        if (!out) throw Error(ErrorKind::InvalidConfig, "cannot write " + file);
        out << text;
    };
    write(result.name + ".csv", result.rows.to_csv());
    write(result.name + "_summary.csv", result.summary.to_csv());

    json meta;
    meta["config"] = json::parse(config_to_json(cfg));
    meta["wall_seconds"] = result.wall_seconds;
    meta["threads"] = resolve_threads(cfg.threads);
    meta["passed"] = result.all_passed();
    for (const auto& c : result.checks) meta["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    write(result.name + ".json", meta.dump(2) + "\n");

    if (plot) {
        std::string dat = "#";
        for (const auto& c : result.summary.columns) dat += " " + c;
        dat += '\n';
        for (const auto& row : result.summary.rows) {
            for (std::size_t k = 0; k < row.size(); ++k) dat += (k ? " " : "") + row[k];
            dat += '\n';
        }
        write(result.name + ".dat", dat);
    }
}

}  // namespace sinai
