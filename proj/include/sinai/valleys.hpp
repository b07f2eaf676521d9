#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sinai/env.hpp"

namespace sinai {

enum class Side { Right, Left };
enum class Crossing { Up, Down };

struct Valley {
    std::int64_t m_left = 0;
    std::int64_t bottom = 0;
    std::int64_t m_right = 0;
    /// Smaller flank height above the bottom, normalized units.
    double depth = 0.0;

    std::int64_t width() const noexcept { return m_right - m_left; }
};

/// Maximizer/minimizer of the largest drop in a segment. For a right
/// refinement maximizer <= minimizer; for a left one minimizer <= maximizer.
struct RefinementPair {
    std::int64_t maximizer = 0;
    std::int64_t minimizer = 0;
    double drop = 0.0;
};

/// Steps m > 0 until S^n(from + direction*m) - S^n(from) >= a (Up) or <= -a
/// (Down). nullopt when the window ends first.
std::optional<std::int64_t> stopping_time(const PotentialView& pot, double a, std::int64_t from, int direction,
                                          Crossing crossing = Crossing::Up);

/// Same, growing the window (sampled environments) up to policy.max_sites.
/// Throws WindowExhausted when the cap is hit first.
std::int64_t stopping_time_growing(PotentialView& pot, double a, std::int64_t from, int direction,
                                   Crossing crossing, const GrowthPolicy& policy = {});

/// Largest drop on [lo, hi]. Ties go to the pair nearest the anchored end:
/// for Right, smallest minimizer index then smallest maximizer index; Left is
/// the mirror image (largest indices).
RefinementPair refine(const PotentialView& pot, std::int64_t lo, std::int64_t hi, Side side);

/// Basic valley around 0. Grows `pot` in place when the environment allows it.
std::optional<Valley> find_basic_valley(PotentialView& pot, const DerivedScales& scales,
                                        const GrowthPolicy& policy = {});

/// Flanks {M', M''} that the construction assigns to a candidate bottom m;
/// nullopt when a flank lies outside the window.
std::optional<Valley> valley_for_bottom(const PotentialView& pot, std::int64_t m, const DerivedScales& scales);

struct ChainSide {
    /// maxima[0] is the valley flank, minima[0] the bottom. Entries 1..r are the
    /// refinements kept by the chopping; entry r+1 is one more refinement
    /// used only by bounds that look one level deeper.
    std::vector<std::int64_t> maxima;
    std::vector<std::int64_t> minima;
    /// Raw potential at those sites.
    std::vector<long double> max_heights;
    std::vector<long double> min_heights;
    int r = 0;
};

struct RefinementChain {
    std::int64_t bottom = 0;
    double log_n = 1.0;
    double width = 0.0;
    ChainSide right;
    ChainSide left;

    /// delta_{i,j} = S^n(M_i) - S^n(m_j); primed versions for Side::Left.
    double delta(int i, int j, Side side = Side::Right) const;
    double eta(int i, int j, Side side = Side::Right) const;
    double mu(int i, int j, Side side = Side::Right) const;
    int count(Side side) const noexcept { return side == Side::Right ? right.r : left.r; }
    const ChainSide& get(Side side) const noexcept { return side == Side::Right ? right : left; }
};

struct ChopOptions {
    /// Width that stops the chopping; negative means l_n * b_n (clamped at 0).
    double width = -1.0;
};

RefinementChain ordered_chopping(const PotentialView& pot, const Valley& valley, const DerivedScales& scales,
                                 const ChopOptions& options = {});

struct InnerBarrier {
    std::int64_t m_less = 0;
    std::int64_t m_greater = 0;
};

/// Nearest sites on each side of `bottom` that rise above it by the barrier
/// threshold. Searches at most `max_distance` sites per side.
InnerBarrier inner_barrier(PotentialView& pot, std::int64_t bottom, const DerivedScales& scales,
                           std::int64_t max_distance, const GrowthPolicy& policy = {});

}  // namespace sinai
