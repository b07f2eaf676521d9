#include "sinai/goodenv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sinai/parallel.hpp"
#include "sinai/rng.hpp"

namespace sinai {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class Verdicts {
public:
    Verdicts() {
        for (auto name : kClauseNames) clauses_.push_back({std::string(name), ClauseStatus::FailedByPrerequisite, kNaN, kNaN});
    }
    void set(std::string_view name, bool pass, double witness, double threshold) {
        set_status(name, pass ? ClauseStatus::Pass : ClauseStatus::Fail, witness, threshold);
    }
    void set_status(std::string_view name, ClauseStatus status, double witness, double threshold) {
        for (auto& c : clauses_)
            if (c.name == name) {
                c.status = status;
                c.witness = witness;
                c.threshold = threshold;
                return;
            }
    }
    std::vector<ClauseVerdict> take() { return std::move(clauses_); }

private:
    std::vector<ClauseVerdict> clauses_;
};

// Minimum of f(i) over i in [0, r); vacuous (NaN, passes) when r = 0.
template <class F>
std::pair<bool, double> all_at_least(int r, double bound, F&& f) {
    if (r == 0) return {true, kNaN};
    double lowest = std::numeric_limits<double>::infinity();
    for (int i = 0; i < r; ++i) lowest = std::min(lowest, f(i));
    return {lowest >= bound, lowest};
}

void chain_clauses(Verdicts& v, const RefinementChain& chain, const DerivedScales& s) {
    const double g = s.gamma_n;
    const double r_bound = s.refinement_count_bound();
    for (Side side : {Side::Right, Side::Left}) {
        const bool right = side == Side::Right;
        const int r = chain.count(side);
        v.set(right ? "refinements_right" : "refinements_left", r <= r_bound, r, r_bound);

        auto [eta_ok, eta] = all_at_least(r, g, [&](int i) { return chain.eta(i, i + 1, side); });
        v.set(right ? "eta_right" : "eta_left", eta_ok, eta, g);
        auto [delta_ok, delta] = all_at_least(r, g, [&](int i) { return chain.delta(i + 1, i + 1, side); });
        v.set(right ? "delta_right" : "delta_left", delta_ok, delta, g);
        auto [mu_ok, mu] = all_at_least(r, g, [&](int i) { return chain.mu(i + 1, 0, side); });
        v.set(right ? "mu_right" : "mu_left", mu_ok, mu, g);

        const double first = chain.delta(1, 1, side);
        v.set(right ? "first_drop_right" : "first_drop_left", first <= 1.0 - g, first, 1.0 - g);
        const double last = chain.delta(r, r, side);
        v.set(right ? "last_drop_right" : "last_drop_left", last <= s.last_drop_bound(), last, s.last_drop_bound());
    }
}

void barrier_clause(Verdicts& v, GoodEnvReport& report, PotentialView& pot, const GoodEnvOptions& options) {
    const auto& s = report.scales;
    const std::int64_t m0 = report.valley->bottom;
    const double limit = s.L_n;
    const auto* spec = pot.env().spec();

    // Climbing thr * log n needs at least this many steps.
    if (spec && spec->moments().max_abs_eps > 0.0) {
        const double d_min = std::ceil(s.barrier_threshold() * s.log_n / spec->moments().max_abs_eps);
        if (d_min > limit) {
            v.set("barrier", false, d_min, limit);
            return;
        }
        if (d_min > static_cast<double>(options.barrier_cap)) {
            v.set_status("barrier", ClauseStatus::Undetermined, d_min, limit);
            return;
        }
    }
    const auto search = static_cast<std::int64_t>(std::min(static_cast<double>(options.barrier_cap), std::floor(limit)));
    GrowthPolicy policy = options.growth;
    policy.max_sites = std::max(policy.max_sites, 2 * (std::abs(m0) + search) + 3);
    try {
        report.barrier = inner_barrier(pot, m0, s, search, policy);
        const double reach = static_cast<double>(std::max(m0 - report.barrier->m_less, report.barrier->m_greater - m0));
        v.set("barrier", reach <= limit, reach, limit);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::WindowExhausted) throw;
        if (static_cast<double>(options.barrier_cap) < limit)
            v.set_status("barrier", ClauseStatus::Undetermined, static_cast<double>(search), limit);
        else
            v.set("barrier", false, static_cast<double>(search), limit);
    }
}

}  // namespace

std::string_view to_string(ClauseStatus status) {
    switch (status) {
    case ClauseStatus::Pass: return "pass";
    case ClauseStatus::Fail: return "fail";
    case ClauseStatus::FailedByPrerequisite: return "prerequisite";
    case ClauseStatus::Undetermined: return "undetermined";
    }
    return "unknown";
}

const ClauseVerdict& GoodEnvReport::clause(std::string_view name) const {
    for (const auto& c : clauses)
        if (c.name == name) return c;
    throw Error(ErrorKind::InvalidConfig, "unknown clause " + std::string(name));
}

bool GoodEnvReport::passes(std::span<const std::string_view> names) const {
    return std::all_of(names.begin(), names.end(),
                       [&](std::string_view n) { return clause(n).status == ClauseStatus::Pass; });
}

GoodEnvReport check_good_environment(const Environment& env, double n, double gamma, double kappa,
                                     const GoodEnvOptions& options) {
    double sigma2 = 0.0;
    if (options.sigma2)
        sigma2 = *options.sigma2;
    else if (env.spec())
        sigma2 = env.spec()->sigma2();
    else
        throw Error(ErrorKind::InvalidConfig, "sigma^2 is needed for an environment without a distribution");

    GoodEnvReport report;
    report.scales = derived_scales(n, gamma, kappa, sigma2);
    const auto& s = report.scales;
    PotentialView pot(env, n);
    Verdicts v;

    report.valley = find_basic_valley(pot, s, options.growth);
    if (!report.valley) {
        if (env.extendable()) {
            // Search stopped at the window cap: any valley reaches past it.
            const auto half = static_cast<double>(std::max(-pot.window().lo, pot.window().hi));
            v.set_status("existence", ClauseStatus::Undetermined, half, kNaN);
            if (half >= s.extent_bound()) v.set("extent", false, half, s.extent_bound());
            else v.set_status("extent", ClauseStatus::Undetermined, half, s.extent_bound());
        } else {
            v.set("existence", false, kNaN, kNaN);
        }
        report.clauses = v.take();
        report.determined = std::none_of(report.clauses.begin(), report.clauses.end(), [](const ClauseVerdict& c) {
            return c.status == ClauseStatus::Undetermined;
        });
        return report;
    }
    const Valley& val = *report.valley;
    const std::int64_t m0 = val.bottom;
    v.set("existence", val.m_left <= 0 && 0 <= val.m_right, static_cast<double>(val.width()), kNaN);

    const double d_right = pot.ndiff(val.m_right, m0);
    const double d_left = pot.ndiff(val.m_left, m0);
    v.set("depth", std::min(d_right, d_left) >= s.depth_threshold(), std::min(d_right, d_left), s.depth_threshold());

    if (m0 == 0) {
        v.set("side_dominance", true, kNaN, s.gamma_n);
    } else {
        const std::int64_t flank = m0 > 0 ? val.m_left : val.m_right;
        double highest = -std::numeric_limits<double>::infinity();
        for (std::int64_t k = std::min<std::int64_t>(0, m0); k <= std::max<std::int64_t>(0, m0); ++k)
            highest = std::max(highest, pot.Sn(k));
        const double height = options.strict_normalization ? pot.S(flank) : pot.Sn(flank);
        v.set("side_dominance", height - highest >= s.gamma_n, height - highest, s.gamma_n);
    }

    double inv_alpha = 0.0, inv_beta = 0.0;
    for (std::int64_t l = val.m_left; l <= val.m_right; ++l) {
        inv_alpha = std::max(inv_alpha, 1.0 / pot.env().alpha(l));
        inv_beta = std::max(inv_beta, 1.0 / pot.env().beta(l));
    }
    const double transition = s.transition_bound();
    v.set("max_inv_alpha", inv_alpha <= transition, inv_alpha, transition);
    v.set("max_inv_beta", inv_beta <= transition, inv_beta, transition);

    const double reach = static_cast<double>(std::max(val.m_right, -val.m_left));
    v.set("extent", reach <= s.extent_bound(), reach, s.extent_bound());

    const double width = options.chop_width >= 0.0 ? options.chop_width : std::max(s.chop_width(), 0.0);
    const double room = static_cast<double>(std::min(val.m_right - m0, m0 - val.m_left));
    v.set("chopping", room >= width, room, width);
    if (room >= width) {
        report.chain = ordered_chopping(pot, val, s, ChopOptions{width});
        chain_clauses(v, *report.chain, s);
    }

    barrier_clause(v, report, pot, options);

    report.clauses = v.take();
    report.overall = std::all_of(report.clauses.begin(), report.clauses.end(),
                                 [](const ClauseVerdict& c) { return c.status == ClauseStatus::Pass; });
    report.determined = std::none_of(report.clauses.begin(), report.clauses.end(),
                                     [](const ClauseVerdict& c) { return c.status == ClauseStatus::Undetermined; });
    return report;
}

GoodProbability estimate_good_probability(const DistSpec& spec, double n, double gamma, double kappa,
                                          std::uint64_t replicas, std::uint64_t master_seed,
                                          const GoodEnvOptions& options, int threads, bool keep_reports) {
    if (replicas < 100) throw Error(ErrorKind::InvalidConfig, "at least 100 replicas are required");
    std::vector<GoodEnvReport> reports(replicas);
    const std::int64_t half = options.growth.initial_half_width;
    parallel_for(replicas, threads, [&](std::uint64_t i) {
        const auto env = Environment::sampled(spec, derive_seed(master_seed, Stream::Environment, i), {-half, half});
        reports[i] = check_good_environment(env, n, gamma, kappa, options);
    });

    GoodProbability out;
    out.replicas = replicas;
    for (auto name : kClauseNames) {
        out.failures[std::string(name)] = 0;
        out.prerequisite_failures[std::string(name)] = 0;
    }
    for (const auto& r : reports) {
        if (r.overall) ++out.successes;
        if (r.passes(kBasinClauses)) ++out.basin_successes;
        if (!r.determined) ++out.undetermined;
        for (const auto& c : r.clauses) {
            if (c.status == ClauseStatus::Fail) ++out.failures[c.name];
            if (c.status == ClauseStatus::FailedByPrerequisite) ++out.prerequisite_failures[c.name];
        }
    }
    const double R = static_cast<double>(replicas);
    out.estimate = static_cast<double>(out.successes) / R;
    out.se = std::sqrt(out.estimate * (1.0 - out.estimate) / R);
    out.basin_estimate = static_cast<double>(out.basin_successes) / R;
    out.basin_se = std::sqrt(out.basin_estimate * (1.0 - out.basin_estimate) / R);
    if (keep_reports) out.reports = std::move(reports);
    return out;
}

}  // namespace sinai
