#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sinai/env.hpp"
#include "sinai/valleys.hpp"

namespace sinai {

// The factors n^{S^n_j - S^n_l} only ever appear as e^{S_j - S_l}, so the
// chain formulas below do not depend on n.

struct ExitProbabilities {
    double p_b_first = 0.0;  ///< P_x[T_b < T_a], from the left-anchored sums
    double p_a_first = 0.0;  ///< P_x[T_a < T_b], from the right-anchored sums
};

ExitProbabilities exit_prob(const Environment& env, std::int64_t a, std::int64_t x, std::int64_t b);

struct ExitTime {
    double value = 0.0;
    /// Significant digits lost in the closed-form subtraction.
    double digits_cancelled = 0.0;
    /// True when cancellation exceeded the limit and the elimination solver was used.
    bool used_fallback = false;
};

inline constexpr double kMaxCancelledDigits = 6.0;

/// E_x[T_a ^ T_b].
ExitTime expected_exit_time(const Environment& env, std::int64_t a, std::int64_t x, std::int64_t b);

/// E_l[T_a ^ T_b] for every l in [a, b] (zero at the ends).
std::vector<double> expected_exit_times(const Environment& env, std::int64_t a, std::int64_t b,
                                        bool* used_fallback = nullptr);

struct SecondMoment {
    double value = 0.0;
    bool used_fallback = false;
};

/// E[(T_bottom ^ T_{top+1})^2] from bottom+1 (Right), or the mirror image
/// E[(T_bottom ^ T_{top-1})^2] from bottom-1 (Left).
SecondMoment second_moment_exit_adjacent(const Environment& env, std::int64_t bottom, std::int64_t top, Side side);

/// Solves u(i) = source(i) + alpha_i u(i+1) + beta_i u(i-1) on a < i < b with
/// u(a) = ua, u(b) = ub. source[k] belongs to site a+1+k. The elimination keeps
/// 1 - c_i as its own quantity so nothing is subtracted.
std::vector<long double> birth_death_solve(const Environment& env, std::int64_t a, std::int64_t b,
                                           const std::vector<long double>& source, long double ua, long double ub);

struct TailBound {
    double d = 0.0;         ///< |M_i - m0|^5 (max 1/alpha)^2, or the beta version on the left
    double exponent = 0.0;  ///< (delta_{i+1,i+1} - eta_{i,i+1}) v 0
    double value = 0.0;
};

/// Bound on P_{m0 +- 1}[T_{m0} > q] at refinement level i.
TailBound return_tail_bound(const PotentialView& pot, const RefinementChain& chain, int level, double q, Side side);

/// D_i on its own.
double tail_bound_d(const Environment& env, const RefinementChain& chain, int level, Side side);

struct TheoremBounds {
    std::optional<double> containment;  ///< needs gamma > 2
    std::optional<double> localization;  ///< needs gamma > gamma0
    /// Localization half-width in m0 units, and in lattice sites.
    double half_width = 0.0;
    double half_width_sites = 0.0;
    /// Explicit leading term of the last-return bound (needs gamma > gamma0).
    std::optional<double> last_return_leading;
};

TheoremBounds theorem_bounds(const DerivedScales& scales);
/// Throw GammaTooSmall when the hypothesis fails.
double containment_bound(const DerivedScales& scales);
double localization_bound(const DerivedScales& scales);

}  // namespace sinai
