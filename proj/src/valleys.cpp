#include "sinai/valleys.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

namespace sinai {

namespace {

double normalized(const PotentialView& pot, long double diff) { return static_cast<double>(diff) / pot.log_n(); }

// Symmetric window around 0, doubled until it holds `site`.
bool grow_to(PotentialView& pot, std::int64_t site, const GrowthPolicy& policy) {
    if (pot.contains(site)) return true;
    if (!pot.env().extendable()) return false;
    const Window w = pot.window();
    std::int64_t half = std::max({-w.lo, w.hi, policy.initial_half_width});
    while (-half > site || site > half) half *= 2;
    if (2 * half + 1 > policy.max_sites) {
        half = (policy.max_sites - 1) / 2;
        if (-half > site || site > half) return false;
    }
    pot = pot.grown({-half, half});
    return true;
}

bool crossed(double d, double a, Crossing crossing) { return crossing == Crossing::Up ? d >= a : d <= -a; }

// First site at distance 1..max_distance from `from` rising `thr` above it.
std::optional<std::int64_t> first_rise(PotentialView& pot, std::int64_t from, int dir, double thr,
                                       std::int64_t max_distance, const GrowthPolicy& policy) {
    const long double base = pot.raw(from);
    for (std::int64_t m = 1; m <= max_distance; ++m) {
        const std::int64_t k = from + dir * m;
        if (!pot.contains(k) && !grow_to(pot, k, policy)) return std::nullopt;
        if (normalized(pot, pot.raw(k) - base) >= thr) return k;
    }
    return std::nullopt;
}

RefinementPair zero_pair(std::int64_t at) { return {at, at, 0.0}; }

RefinementPair refine_unchecked(const PotentialView& pot, std::int64_t lo, std::int64_t hi, Side side) {
    if (side == Side::Right) {
        RefinementPair best = zero_pair(lo);
        long double best_drop = 0.0L;
        long double run_max = pot.raw(lo);
        std::int64_t run_arg = lo;
        for (std::int64_t t = lo + 1; t <= hi; ++t) {
            const long double v = pot.raw(t);
            if (v > run_max) {
                run_max = v;
                run_arg = t;
            } else if (run_max - v > best_drop) {
                best_drop = run_max - v;
                best = {run_arg, t, 0.0};
            }
        }
        best.drop = normalized(pot, best_drop);
        return best;
    }
    RefinementPair best = zero_pair(hi);
    long double best_drop = 0.0L;
    long double run_max = pot.raw(hi);
    std::int64_t run_arg = hi;
    for (std::int64_t t = hi - 1; t >= lo; --t) {
        const long double v = pot.raw(t);
        if (v > run_max) {
            run_max = v;
            run_arg = t;
        } else if (run_max - v > best_drop) {
            best_drop = run_max - v;
            best = {run_arg, t, 0.0};
        }
    }
    best.drop = normalized(pot, best_drop);
    return best;
}

}  // namespace

std::optional<std::int64_t> stopping_time(const PotentialView& pot, double a, std::int64_t from, int direction,
                                          Crossing crossing) {
    if (direction != 1 && direction != -1) throw Error(ErrorKind::InvalidConfig, "direction must be +1 or -1");
    const long double base = pot.raw(from);
    for (std::int64_t m = 1;; ++m) {
        const std::int64_t k = from + direction * m;
        if (!pot.contains(k)) return std::nullopt;
        if (crossed(normalized(pot, pot.raw(k) - base), a, crossing)) return m;
    }
}

std::int64_t stopping_time_growing(PotentialView& pot, double a, std::int64_t from, int direction, Crossing crossing,
                                   const GrowthPolicy& policy) {
    if (direction != 1 && direction != -1) throw Error(ErrorKind::InvalidConfig, "direction must be +1 or -1");
    const long double base = pot.raw(from);
    for (std::int64_t m = 1;; ++m) {
        const std::int64_t k = from + direction * m;
        if (!pot.contains(k) && !grow_to(pot, k, policy))
            throw Error(ErrorKind::WindowExhausted, "no crossing within the window cap");
        if (crossed(normalized(pot, pot.raw(k) - base), a, crossing)) return m;
    }
}

RefinementPair refine(const PotentialView& pot, std::int64_t lo, std::int64_t hi, Side side) {
    if (lo >= hi) throw Error(ErrorKind::EmptySegment, "refinement needs lo < hi");
    if (!pot.contains(lo) || !pot.contains(hi)) throw Error(ErrorKind::OutOfWindow, "segment outside the window");
    return refine_unchecked(pot, lo, hi, side);
}

namespace {

// 64-fold block maxima and minima over the window, rounded outward to double.
// They only decide which blocks can be skipped; hits are read from the exact sums.
class BlockScan {
public:
    explicit BlockScan(const PotentialView& pot) : pot_(pot), lo_(pot.window().lo) {
        const auto n = static_cast<std::size_t>(pot.window().size());
        std::vector<double> mx, mn;
        for (std::size_t b = 0; b * kFan < n; ++b) {
            long double hi = pot.raw(lo_ + static_cast<std::int64_t>(b * kFan)), low = hi;
            for (std::size_t i = b * kFan; i < std::min(n, (b + 1) * kFan); ++i) {
                const long double v = pot.raw(lo_ + static_cast<std::int64_t>(i));
                hi = std::max(hi, v);
                low = std::min(low, v);
            }
            mx.push_back(up(hi));
            mn.push_back(down(low));
        }
        while (true) {
            max_.push_back(std::move(mx));
            min_.push_back(std::move(mn));
            const auto& top = max_.back();
            if (top.size() <= kFan) break;
            mx.clear();
            mn.clear();
            for (std::size_t b = 0; b * kFan < top.size(); ++b) {
                const auto e = std::min(top.size(), (b + 1) * kFan);
                mx.push_back(*std::max_element(top.begin() + b * kFan, top.begin() + e));
                mn.push_back(*std::min_element(min_.back().begin() + b * kFan, min_.back().begin() + e));
            }
        }
    }

    // First site in [from, to] (forward) or [to, from] (backward) where `hit`
    // holds. `hit` must be monotone in S: increasing when `rising`, else decreasing.
    template <class Hit>
    std::optional<std::int64_t> find(std::int64_t from, std::int64_t to, bool rising, Hit&& hit) const {
        const bool fwd = from <= to;
        const auto a = static_cast<std::size_t>(std::min(from, to) - lo_);
        const auto b = static_cast<std::size_t>(std::max(from, to) - lo_) + 1;
        const auto r = climb(0, a, b, fwd, rising, hit);
        if (!r) return std::nullopt;
        return lo_ + static_cast<std::int64_t>(*r);
    }

private:
    static constexpr std::size_t kFan = 64;

    static double up(long double v) {
        double d = static_cast<double>(v);
        return d < v ? std::nextafter(d, INFINITY) : d;
    }
    static double down(long double v) {
        double d = static_cast<double>(v);
        return d > v ? std::nextafter(d, -INFINITY) : d;
    }

    std::size_t size(std::size_t level) const {
        return level == 0 ? static_cast<std::size_t>(pot_.window().size()) : max_[level - 1].size();
    }

    template <class Hit>
    bool may_hit(std::size_t level, std::size_t node, bool rising, Hit& hit) const {
        if (level == 0) return hit(pot_.raw(lo_ + static_cast<std::int64_t>(node)));
        const auto& agg = rising ? max_[level - 1] : min_[level - 1];
        return hit(static_cast<long double>(agg[node]));
    }

    // Whole subtree of `node` at `level`.
    template <class Hit>
    std::optional<std::size_t> descend(std::size_t level, std::size_t node, bool fwd, bool rising, Hit& hit) const {
        if (!may_hit(level, node, rising, hit)) return std::nullopt;
        if (level == 0) return node;
        return over(level - 1, node * kFan, std::min(size(level - 1), (node + 1) * kFan), fwd, rising, hit);
    }

    template <class Hit>
    std::optional<std::size_t> over(std::size_t level, std::size_t x, std::size_t y, bool fwd, bool rising,
                                    Hit& hit) const {
        for (std::size_t k = 0; k < y - x; ++k) {
            const std::size_t node = fwd ? x + k : y - 1 - k;
            if (auto r = descend(level, node, fwd, rising, hit)) return r;
        }
        return std::nullopt;
    }

    // Nodes [x, y) at `level`: ragged ends here, aligned middle one level up.
    template <class Hit>
    std::optional<std::size_t> climb(std::size_t level, std::size_t x, std::size_t y, bool fwd, bool rising,
                                     Hit& hit) const {
        if (x >= y) return std::nullopt;
        const std::size_t hx = (x + kFan - 1) / kFan * kFan, ty = y / kFan * kFan;
        if (level == max_.size() || hx >= ty) return over(level, x, y, fwd, rising, hit);
        const std::pair<std::size_t, std::size_t> head{x, hx}, tail{ty, y};
        const auto& first = fwd ? head : tail;
        const auto& last = fwd ? tail : head;
        if (auto r = over(level, first.first, first.second, fwd, rising, hit)) return r;
        if (auto r = climb(level + 1, hx / kFan, ty / kFan, fwd, rising, hit)) return r;
        return over(level, last.first, last.second, fwd, rising, hit);
    }

    const PotentialView& pot_;
    std::int64_t lo_;
    std::vector<std::vector<double>> max_, min_;
};

// `between` is the highest sum between 0 and m.
std::optional<Valley> flanks(const PotentialView& pot, const BlockScan& scan, std::int64_t m, long double between,
                             const DerivedScales& scales) {
    const double h = scales.depth_threshold();
    const double g = scales.gamma_n;
    const Window w = pot.window();
    const long double sm = pot.raw(m);
    const auto deep = [&](long double s) { return normalized(pot, s - sm) >= h; };
    const auto deep_and_above = [&](long double s) { return deep(s) && normalized(pot, s - between) >= g; };

    const auto right = m < 0 ? scan.find(0, w.hi, true, deep_and_above)
                             : (m < w.hi ? scan.find(m + 1, w.hi, true, deep) : std::nullopt);
    if (!right) return std::nullopt;
    const auto left = m > 0 ? scan.find(0, w.lo, true, deep_and_above)
                            : (m > w.lo ? scan.find(m - 1, w.lo, true, deep) : std::nullopt);
    if (!left) return std::nullopt;

    Valley v{*left, m, *right, 0.0};
    v.depth = std::min(normalized(pot, pot.raw(*left) - sm), normalized(pot, pot.raw(*right) - sm));
    return v;
}

// True when m is the bottom of v under the tie rule: nothing lower inside, and
// no equal sum nearer 0 (m is a strict record on its own side, so only the
// other side can tie; at equal distance the negative site wins).
bool is_bottom(const PotentialView& pot, const BlockScan& scan, const Valley& v) {
    const std::int64_t m = v.bottom;
    const long double sm = pot.raw(m);
    if (scan.find(v.m_left, v.m_right, false, [&](long double s) { return s < sm; })) return false;
    if (m == 0) return true;
    const std::int64_t reach = m > 0 ? std::min(m, -v.m_left) : std::min(-m - 1, v.m_right);
    const std::int64_t dir = m > 0 ? -1 : 1;
    return reach == 0 || !scan.find(dir, dir * reach, false, [&](long double s) { return s <= sm; });
}

}  // namespace

std::optional<Valley> valley_for_bottom(const PotentialView& pot, std::int64_t m, const DerivedScales& scales) {
    long double between = pot.raw(m);
    for (std::int64_t k = std::min<std::int64_t>(0, m); k <= std::max<std::int64_t>(0, m); ++k)
        between = std::max(between, pot.raw(k));
    return flanks(pot, BlockScan(pot), m, between, scales);
}

std::optional<Valley> find_basic_valley(PotentialView& pot, const DerivedScales& scales, const GrowthPolicy& policy) {
    if (std::abs(pot.log_n() - scales.log_n) > 1e-12 * scales.log_n)
        throw Error(ErrorKind::InvalidConfig, "potential and scales use different horizons");
    if (pot.env().extendable()) {
        const std::int64_t half = std::min(policy.initial_half_width, (policy.max_sites - 1) / 2);
        if (!pot.window().contains(Window{-half, half})) pot = pot.grown({-half, half});
    }

    for (;;) {
        const Window w = pot.window();
        const BlockScan scan(pot);
        // A bottom must be a strict running minimum walking out from 0,
        // otherwise a site nearer 0 would tie or beat it. Each record also
        // carries the highest sum between 0 and itself.
        struct Record {
            std::int64_t site;
            long double between;
        };
        std::vector<Record> right_records, left_records;
        for (int dir : {1, -1}) {
            auto& out = dir > 0 ? right_records : left_records;
            long double low = pot.raw(0), high = pot.raw(0);
            for (std::int64_t k = dir; dir > 0 ? k <= w.hi : k >= w.lo; k += dir) {
                const long double s = pot.raw(k);
                high = std::max(high, s);
                if (s < low) {
                    low = s;
                    out.push_back({k, high});
                }
            }
        }
        std::vector<Record> candidates{{0, pot.raw(0)}};
        std::size_t i = 0, j = 0;
        while (i < left_records.size() || j < right_records.size()) {
            if (j == right_records.size() ||
                (i < left_records.size() && -left_records[i].site <= right_records[j].site))
                candidates.push_back(left_records[i++]);
            else
                candidates.push_back(right_records[j++]);
        }

        std::optional<Valley> best;
        for (const auto& c : candidates) {
            if (best && best->width() <= std::abs(c.site)) break;
            const auto v = flanks(pot, scan, c.site, c.between, scales);
            if (!v || (best && v->width() >= best->width())) continue;
            if (is_bottom(pot, scan, *v)) best = v;
        }

        if (!pot.env().extendable()) return best;
        if (best && w.contains(Window{-best->width(), best->width()})) return best;
        const std::int64_t half = std::max(-w.lo, w.hi);
        if (2 * half + 1 >= policy.max_sites) return best;
        if (!grow_to(pot, 2 * half, policy)) return best;
    }
}

double RefinementChain::delta(int i, int j, Side side) const {
    const auto& c = get(side);
    if (i < 0 || j < 0 || i >= static_cast<int>(c.maxima.size()) || j >= static_cast<int>(c.minima.size()))
        throw Error(ErrorKind::LevelOutOfRange, "delta level out of range");
    return static_cast<double>(c.max_heights[i] - c.min_heights[j]) / log_n;
}

double RefinementChain::eta(int i, int j, Side side) const {
    const auto& c = get(side);
    const int size = static_cast<int>(c.maxima.size());
    if (i < 0 || j < 0 || i >= size || j >= size) throw Error(ErrorKind::LevelOutOfRange, "eta level out of range");
    return static_cast<double>(c.max_heights[i] - c.max_heights[j]) / log_n;
}

double RefinementChain::mu(int i, int j, Side side) const {
    const auto& c = get(side);
    const int size = static_cast<int>(c.minima.size());
    if (i < 0 || j < 0 || i >= size || j >= size) throw Error(ErrorKind::LevelOutOfRange, "mu level out of range");
    return static_cast<double>(c.min_heights[i] - c.min_heights[j]) / log_n;
}

RefinementChain ordered_chopping(const PotentialView& pot, const Valley& valley, const DerivedScales& scales,
                                 const ChopOptions& options) {
    const double width = options.width >= 0.0 ? options.width : std::max(scales.chop_width(), 0.0);
    const std::int64_t m0 = valley.bottom;
    if (static_cast<double>(valley.m_right - m0) < width || static_cast<double>(m0 - valley.m_left) < width)
        throw Error(ErrorKind::ValleyTooNarrow, "valley narrower than the chopping width " + std::to_string(width));

    RefinementChain chain;
    chain.bottom = m0;
    chain.log_n = pot.log_n();
    chain.width = width;

    auto push = [&](ChainSide& c, std::int64_t maximizer, std::int64_t minimizer) {
        c.maxima.push_back(maximizer);
        c.minima.push_back(minimizer);
        c.max_heights.push_back(pot.raw(maximizer));
        c.min_heights.push_back(pot.raw(minimizer));
    };

    push(chain.right, valley.m_right, m0);
    while (static_cast<double>(chain.right.maxima.back() - m0) > width) {
        const auto p = refine_unchecked(pot, m0, chain.right.maxima.back(), Side::Right);
        push(chain.right, p.maximizer, p.minimizer);
    }
    chain.right.r = static_cast<int>(chain.right.maxima.size()) - 1;
    {
        const std::int64_t top = chain.right.maxima.back();
        const auto p = top > m0 ? refine_unchecked(pot, m0, top, Side::Right) : zero_pair(m0);
        push(chain.right, p.maximizer, p.minimizer);
    }

    push(chain.left, valley.m_left, m0);
    while (static_cast<double>(m0 - chain.left.maxima.back()) > width) {
        const auto p = refine_unchecked(pot, chain.left.maxima.back(), m0, Side::Left);
        push(chain.left, p.maximizer, p.minimizer);
    }
    chain.left.r = static_cast<int>(chain.left.maxima.size()) - 1;
    {
        const std::int64_t top = chain.left.maxima.back();
        const auto p = top < m0 ? refine_unchecked(pot, top, m0, Side::Left) : zero_pair(m0);
        push(chain.left, p.maximizer, p.minimizer);
    }
    return chain;
}

InnerBarrier inner_barrier(PotentialView& pot, std::int64_t bottom, const DerivedScales& scales,
                           std::int64_t max_distance, const GrowthPolicy& policy) {
    const double thr = scales.barrier_threshold();
    const auto less = first_rise(pot, bottom, -1, thr, max_distance, policy);
    if (!less) throw Error(ErrorKind::WindowExhausted, "left barrier not found within " + std::to_string(max_distance));
    const auto greater = first_rise(pot, bottom, +1, thr, max_distance, policy);
    if (!greater)
        throw Error(ErrorKind::WindowExhausted, "right barrier not found within " + std::to_string(max_distance));
    return {*less, *greater};
}

}  // namespace sinai
