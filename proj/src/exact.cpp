#include "sinai/exact.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sinai/log_scalar.hpp"

namespace sinai {

namespace {

void require_interval(std::int64_t a, std::int64_t x, std::int64_t b) {
    if (!(a < x && x < b))
        throw Error(ErrorKind::BadInterval, "need a < x < b, got a=" + std::to_string(a) + " x=" + std::to_string(x) +
                                                " b=" + std::to_string(b));
}

// s[k - a] = S_k - S_a for k in [a, b - 1], from alpha in extended precision.
std::vector<long double> relative_potential(const Environment& env, std::int64_t a, std::int64_t b) {
    std::vector<long double> s(static_cast<std::size_t>(b - a), 0.0L);
    long double acc = 0.0L;
    for (std::int64_t k = a + 1; k < b; ++k) {
        const long double al = env.alpha(k);
        acc += std::log((1.0L - al) / al);
        s[static_cast<std::size_t>(k - a)] = acc;
    }
    return s;
}

// Closed-form E_l for l in [a, b], with per-entry cancellation.
struct ClosedForm {
    std::vector<double> values;
    std::vector<double> digits;
};

// Entries past `last` are left at zero.
ClosedForm closed_form_exit_times(const Environment& env, std::int64_t a, std::int64_t b, std::int64_t last) {
    const auto s = relative_potential(env, a, b);
    const auto len = static_cast<std::size_t>(b - a);
    auto at = [&](std::int64_t k) { return s[static_cast<std::size_t>(k - a)]; };
    auto inv_alpha = [&](std::int64_t l) { return LogScalar::from_log(-std::log(static_cast<long double>(env.alpha(l)))); };

    // Numerator of the a+1 formula: sum_l (1/alpha_l) e^{-S_l} sum_{j>=l} e^{S_j}.
    std::vector<LogScalar> suffix(len + 1);
    for (std::int64_t j = b - 1; j > a; --j)
        suffix[static_cast<std::size_t>(j - a)] =
            suffix[static_cast<std::size_t>(j - a + 1)] + LogScalar::from_log(at(j));
    LogScalar numerator;
    for (std::int64_t l = a + 1; l < b; ++l)
        numerator += inv_alpha(l) * suffix[static_cast<std::size_t>(l - a)] * LogScalar::from_log(-at(l));
    const LogScalar first = numerator / (suffix[1] + LogScalar::one());

    ClosedForm out;
    out.values.assign(len + 1, 0.0);
    out.digits.assign(len + 1, 0.0);
    LogScalar p = LogScalar::one();  // 1 + sum_{j=a+1}^{x-1} e^{S_j}
    LogScalar q;                      // sum_{a<l<=j<x} e^{S_j - S_l} / alpha_l
    LogScalar inner;                  // sum_{l=a+1}^{x-1} e^{-S_l} / alpha_l
    for (std::int64_t x = a + 1; x <= last; ++x) {
        if (x > a + 1) {
            const LogScalar ej = LogScalar::from_log(at(x - 1));
            inner += inv_alpha(x - 1) * LogScalar::from_log(-at(x - 1));
            p += ej;
            q += ej * inner;
        }
        const auto diff = subtract(first * p, q);
        out.values[static_cast<std::size_t>(x - a)] = diff.value;
        out.digits[static_cast<std::size_t>(x - a)] = diff.digits_cancelled;
    }
    return out;
}

std::vector<double> solver_exit_times(const Environment& env, std::int64_t a, std::int64_t b) {
    const std::vector<long double> ones(static_cast<std::size_t>(b - a - 1), 1.0L);
    const auto u = birth_death_solve(env, a, b, ones, 0.0L, 0.0L);
    return {u.begin(), u.end()};
}

// Reflection k -> -k with alpha and beta swapped, on the sites [lo, hi].
Environment mirrored(const Environment& env, std::int64_t lo, std::int64_t hi) {
    std::vector<double> alphas;
    alphas.reserve(static_cast<std::size_t>(hi - lo + 1));
    for (std::int64_t k = hi; k >= lo; --k) alphas.push_back(env.window().contains(k) ? env.beta(k) : 0.5);
    return Environment::from_alphas(-hi, std::move(alphas));
}

SecondMoment second_moment_right(const Environment& env, std::int64_t a, std::int64_t b) {
    SecondMoment out;
    const auto u = expected_exit_times(env, a, b, &out.used_fallback);
    const auto s = relative_potential(env, a, b);
    auto at = [&](std::int64_t k) { return s[static_cast<std::size_t>(k - a)]; };

    LogScalar suffix, numerator;
    for (std::int64_t l = b - 1; l > a; --l) {
        suffix += LogScalar::from_log(at(l));
        const double weight = (2.0 * u[static_cast<std::size_t>(l - a)] - 1.0) / env.alpha(l);
        numerator += LogScalar::from_value(weight) * suffix * LogScalar::from_log(-at(l));
    }
    out.value = (numerator / (suffix + LogScalar::one())).value();
    return out;
}

}  // namespace

ExitProbabilities exit_prob(const Environment& env, std::int64_t a, std::int64_t x, std::int64_t b) {
    require_interval(a, x, b);
    const auto s = relative_potential(env, a, b);
    auto at = [&](std::int64_t k) { return s[static_cast<std::size_t>(k - a)]; };

    // Anchored at a: weights e^{S_i - S_a}.
    LogScalar below = LogScalar::one(), total_a;
    for (std::int64_t i = a + 1; i < b; ++i) {
        if (i == x) below += total_a;
        total_a += LogScalar::from_log(at(i));
    }
    total_a += LogScalar::one();

    // Anchored at b - 1: weights e^{S_i - S_{b-1}}.
    const long double top = at(b - 1);
    LogScalar above = LogScalar::one(), total_b;
    for (std::int64_t i = b - 2; i >= a; --i) {
        total_b += LogScalar::from_log(at(i) - top);
        if (i == x) above += total_b;
    }
    total_b += LogScalar::one();

    return {(below / total_a).value(), (above / total_b).value()};
}

std::vector<long double> birth_death_solve(const Environment& env, std::int64_t a, std::int64_t b,
                                           const std::vector<long double>& source, long double ua, long double ub) {
    if (b - a < 2) throw Error(ErrorKind::BadInterval, "no interior sites");
    const auto n = static_cast<std::size_t>(b - a - 1);
    if (source.size() != n) throw Error(ErrorKind::BadInterval, "source has the wrong length");

    // Forward sweep: cp_i = alpha_i / den_i, keep s_i = 1 - cp_i directly.
    std::vector<long double> cp(n), dp(n);
    long double s_prev = 1.0L, d_prev = 0.0L;
    for (std::size_t k = 0; k < n; ++k) {
        const std::int64_t i = a + 1 + static_cast<std::int64_t>(k);
        const long double al = env.alpha(i);
        const long double be = 1.0L - al;
        long double rhs = source[k];
        if (k == 0) rhs += be * ua;
        if (k + 1 == n) rhs += al * ub;
        const long double den = al + be * s_prev;
        cp[k] = al / den;
        dp[k] = (rhs + be * d_prev) / den;
        s_prev = be * s_prev / den;
        d_prev = dp[k];
    }
    std::vector<long double> u(n + 2);
    u.front() = ua;
    u.back() = ub;
    u[n] = dp[n - 1];
    for (std::size_t k = n - 1; k-- > 0;) u[k + 1] = dp[k] + cp[k] * u[k + 2];
    return u;
}

ExitTime expected_exit_time(const Environment& env, std::int64_t a, std::int64_t x, std::int64_t b) {
    require_interval(a, x, b);
    const auto cf = closed_form_exit_times(env, a, b, x);
    const auto k = static_cast<std::size_t>(x - a);
    ExitTime out{cf.values[k], cf.digits[k], false};
    if (out.digits_cancelled > kMaxCancelledDigits) {
        out.value = solver_exit_times(env, a, b)[k];
        out.used_fallback = true;
    }
    return out;
}

std::vector<double> expected_exit_times(const Environment& env, std::int64_t a, std::int64_t b, bool* used_fallback) {
    if (b - a < 2) throw Error(ErrorKind::BadInterval, "no interior sites");
    auto cf = closed_form_exit_times(env, a, b, b - 1);
    bool fallback = false;
    std::vector<double> solved;
    for (std::size_t k = 1; k + 1 < cf.values.size(); ++k) {
        if (cf.digits[k] <= kMaxCancelledDigits) continue;
        if (solved.empty()) solved = solver_exit_times(env, a, b);
        cf.values[k] = solved[k];
        fallback = true;
    }
    if (used_fallback) *used_fallback = fallback;
    return cf.values;
}

SecondMoment second_moment_exit_adjacent(const Environment& env, std::int64_t bottom, std::int64_t top, Side side) {
    if (side == Side::Right) {
        if (top < bottom + 1) throw Error(ErrorKind::BadInterval, "top must be at or beyond bottom + 1");
        return second_moment_right(env, bottom, top + 1);
    }
    if (top > bottom - 1) throw Error(ErrorKind::BadInterval, "top must be at or below bottom - 1");
    const Environment m = mirrored(env, top - 1, bottom);
    return second_moment_right(m, -bottom, -top + 1);
}

double tail_bound_d(const Environment& env, const RefinementChain& chain, int level, Side side) {
    if (level < 0 || level > chain.count(side)) throw Error(ErrorKind::LevelOutOfRange, "tail bound level");
    const std::int64_t m0 = chain.bottom;
    const std::int64_t top = chain.get(side).maxima[static_cast<std::size_t>(level)];
    double worst = 0.0;
    for (std::int64_t l = std::min(m0, top); l <= std::max(m0, top); ++l)
        worst = std::max(worst, 1.0 / (side == Side::Right ? env.alpha(l) : env.beta(l)));
    return std::pow(static_cast<double>(std::abs(top - m0)), 5) * worst * worst;
}

TailBound return_tail_bound(const PotentialView& pot, const RefinementChain& chain, int level, double q, Side side) {
    if (!(q > 0.0)) throw Error(ErrorKind::InvalidConfig, "q must be positive");
    TailBound out;
    out.d = tail_bound_d(pot.env(), chain, level, side);
    out.exponent = std::max(chain.delta(level + 1, level + 1, side) - chain.eta(level, level + 1, side), 0.0);
    const double log_n = pot.log_n();
    const double first = out.d > 0.0 ? std::exp(std::log(out.d) + out.exponent * log_n - 2.0 * std::log(q)) : 0.0;
    out.value = first + std::exp(-chain.delta(level, 0, side) * log_n);
    return out;
}

double containment_bound(const DerivedScales& s) {
    if (!(s.gamma > 2.0)) throw Error(ErrorKind::GammaTooSmall, "containment needs gamma > 2");
    return 2.0 * s.log2_n / (s.sigma2 * std::pow(s.log_n, s.gamma - 2.0));
}

double localization_bound(const DerivedScales& s) {
    if (!(s.gamma > s.gamma0))
        throw Error(ErrorKind::GammaTooSmall, "localization needs gamma > gamma0 = " + std::to_string(s.gamma0));
    return 4.0 * std::pow(s.log2_n, 4.5) / (std::pow(s.sigma2, 5.0) * std::pow(s.gamma * s.log_n, s.gamma - s.gamma0));
}

TheoremBounds theorem_bounds(const DerivedScales& s) {
    TheoremBounds out;
    if (s.gamma > 2.0) out.containment = containment_bound(s);
    if (s.gamma > s.gamma0) {
        out.localization = localization_bound(s);
        out.last_return_leading =
            2.0 * std::pow(s.log2_n, 4.5) / (std::sqrt(s.gamma) * std::pow(s.log_n, s.gamma - s.gamma0));
    }
    out.half_width = DerivedScales::kGamma * s.gamma * std::pow(s.log2_n, 4.5) / std::sqrt(s.log_n);
    out.half_width_sites = out.half_width * s.log_n * s.log_n;
    return out;
}

}  // namespace sinai
