#pragma once

#include <cmath>
#include <limits>
#include <span>

namespace sinai {

/// Nonnegative real stored as its natural logarithm. ZERO is log = -inf.
/// The log is kept in long double so that a later subtraction of two sums
/// can lose several digits and still leave double precision behind.
class LogScalar {
public:
    constexpr LogScalar() noexcept = default;

    static constexpr LogScalar zero() noexcept { return LogScalar(); }
    static constexpr LogScalar one() noexcept { return from_log(0.0); }
    static constexpr LogScalar from_log(long double log_value) noexcept {
        LogScalar s;
        s.log_ = log_value;
        return s;
    }
    static LogScalar from_value(double value) noexcept {
        return value > 0.0 ? from_log(std::log(static_cast<long double>(value))) : zero();
    }

    constexpr long double log() const noexcept { return log_; }
    double value() const noexcept { return static_cast<double>(std::exp(log_)); }
    constexpr bool is_zero() const noexcept { return log_ == -std::numeric_limits<long double>::infinity(); }

    friend LogScalar operator+(LogScalar a, LogScalar b) noexcept {
        if (a.is_zero()) return b;
        if (b.is_zero()) return a;
        const long double hi = a.log_ > b.log_ ? a.log_ : b.log_;
        const long double lo = a.log_ > b.log_ ? b.log_ : a.log_;
        return from_log(hi + std::log1p(std::exp(lo - hi)));
    }
    friend LogScalar operator*(LogScalar a, LogScalar b) noexcept {
        if (a.is_zero() || b.is_zero()) return zero();
        return from_log(a.log_ + b.log_);
    }
    friend LogScalar operator/(LogScalar a, LogScalar b) noexcept {
        if (a.is_zero()) return zero();
        return from_log(a.log_ - b.log_);
    }
    LogScalar& operator+=(LogScalar other) noexcept { return *this = *this + other; }
    LogScalar& operator*=(LogScalar other) noexcept { return *this = *this * other; }

    friend constexpr bool operator<(LogScalar a, LogScalar b) noexcept { return a.log_ < b.log_; }

private:
    long double log_ = -std::numeric_limits<long double>::infinity();
};

/// Stable log-sum-exp over a batch of log values (max factored out once).
inline LogScalar log_sum(std::span<const double> logs) noexcept {
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : logs) hi = v > hi ? v : hi;
    if (hi == -std::numeric_limits<double>::infinity()) return LogScalar::zero();
    long double acc = 0.0L;
    for (double v : logs) acc += std::exp(static_cast<long double>(v) - hi);
    return LogScalar::from_log(hi + std::log(acc));
}

/// Result of a - b for a >= b, with the number of decimal digits lost.
struct LogDifference {
    double value = 0.0;
    double digits_cancelled = 0.0;
};

inline LogDifference subtract(LogScalar a, LogScalar b) noexcept {
    if (b.is_zero()) return {a.value(), 0.0};
    const long double gap = a.log() - b.log();
    if (gap <= 0.0L) return {0.0, std::numeric_limits<double>::infinity()};
    // a - b = a (1 - e^{-gap}); digits lost = -log10(1 - e^{-gap}).
    const long double keep = -std::expm1(-gap);
    return {static_cast<double>(std::exp(a.log()) * keep), static_cast<double>(-std::log10(keep))};
}

}  // namespace sinai
