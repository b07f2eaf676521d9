#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sinai/errors.hpp"

namespace sinai {

/// Closed integer interval [lo, hi].
struct Window {
    std::int64_t lo = 0;
    std::int64_t hi = 0;

    constexpr std::int64_t size() const noexcept { return hi - lo + 1; }
    constexpr bool contains(std::int64_t k) const noexcept { return lo <= k && k <= hi; }
    constexpr bool contains(const Window& w) const noexcept { return lo <= w.lo && w.hi <= hi; }
    friend constexpr bool operator==(const Window&, const Window&) = default;
};

struct TwoPoint {
    double p = 0.3;
};
struct SymmetricUniform {
    double c = 0.1;
};
struct DiscreteTable {
    std::vector<double> alphas;
    std::vector<double> weights;
};

/// Moments of eps_0 = log((1 - alpha_0) / alpha_0).
struct MomentReport {
    double mean = 0.0;
    double sigma2 = 0.0;
    double abs_third = 0.0;
    double fourth = 0.0;
    /// Largest |eps_0| in the support; every built-in family is bounded.
    double max_abs_eps = 0.0;
};

/// Law of alpha_0 on (0, 1), validated so that E eps_0 = 0 and sigma^2 > 0.
class DistSpec {
public:
    static DistSpec two_point(double p);
    static DistSpec symmetric_uniform(double c);
    static DistSpec discrete_table(std::vector<double> alphas, std::vector<double> weights);
    /// "twopoint:0.3", "uniform:0.1", "table:0.2/0.5,0.8/0.5".
    static DistSpec parse(const std::string& text);

    const std::variant<TwoPoint, SymmetricUniform, DiscreteTable>& law() const noexcept { return law_; }
    const MomentReport& moments() const noexcept { return moments_; }
    double sigma2() const noexcept { return moments_.sigma2; }
    /// C(kappa) = max(E e^{kappa eps_0}, E e^{-kappa eps_0}).
    double exp_moment(double kappa) const;
    std::string to_string() const;
    /// c when eps_0 takes values in {-c, +c}; lets potentials be stored as integer multiples of c.
    std::optional<double> lattice_step() const noexcept;

    /// alpha drawn from 64 uniform bits.
    double sample_alpha(std::uint64_t bits) const noexcept;
    /// eps drawn from the same bits; avoids a log for lattice laws.
    double sample_epsilon(std::uint64_t bits) const noexcept;

private:
    explicit DistSpec(std::variant<TwoPoint, SymmetricUniform, DiscreteTable> law);

    std::variant<TwoPoint, SymmetricUniform, DiscreteTable> law_;
    MomentReport moments_;
    std::vector<double> cumulative_;
    std::vector<double> table_eps_;
    double lattice_eps_ = 0.0;
};

/// Two-sided environment (alpha_i, i in Z), realized on a window.
///
/// Sampled environments derive alpha_i from (seed, i) alone, so they can be
/// extended in either direction and stay bit-identical on the overlap.
/// Explicit environments carry a fixed table and cannot grow.
class Environment {
public:
    static Environment sampled(const DistSpec& spec, std::uint64_t seed, Window window);
    /// alphas[k] is alpha at site lo + k.
    static Environment from_alphas(std::int64_t lo, std::vector<double> alphas);
    /// alpha_i = value for every i (flat control when value = 1/2).
    static Environment constant(double value, Window window);

    const Window& window() const noexcept { return window_; }
    bool extendable() const noexcept { return !table_; }
    const DistSpec* spec() const noexcept { return spec_ ? &*spec_ : nullptr; }
    std::uint64_t seed() const noexcept { return seed_; }

    double alpha(std::int64_t i) const;
    double beta(std::int64_t i) const { return 1.0 - alpha(i); }
    double epsilon(std::int64_t i) const;

    /// Copy realized on `window`; throws OutOfWindow for fixed tables.
    Environment extended(Window window) const;
    /// Copy whose window is this one grown to contain `window`.
    Environment covering(Window window) const;

private:
    Environment() = default;
    void require(std::int64_t i) const;
    double alpha_unchecked(std::int64_t i) const noexcept;
    double epsilon_unchecked(std::int64_t i) const noexcept;

    std::optional<DistSpec> spec_;
    std::uint64_t seed_ = 0;
    Window window_;
    std::optional<double> constant_;
    std::shared_ptr<const std::vector<double>> table_;
    std::int64_t table_lo_ = 0;
};

/// Horizon-dependent scales. log2/log3 are iterated logarithms.
struct DerivedScales {
    double n = 0.0;
    double gamma = 0.0;
    double kappa = 0.0;
    double sigma2 = 0.0;

    double log_n = 0.0;
    double log2_n = 0.0;
    double log3_n = 0.0;

    double gamma_n = 0.0;
    double b_n = 0.0;
    double k_n = 0.0;
    double l_n = 0.0;
    /// q_n overflows a double for realistic n, so only its log is kept.
    double log_q_n = 0.0;
    double L_n = 0.0;
    double gamma0 = 0.0;

    static constexpr double kD = 1000.0;
    static constexpr double kGamma = 1600.0 * 1600.0;

    double depth_threshold() const noexcept { return 1.0 + gamma_n; }
    double chop_width() const noexcept { return l_n * b_n; }
    double extent_bound() const noexcept;
    double refinement_count_bound() const noexcept;
    double transition_bound() const noexcept;
    double barrier_threshold() const noexcept;
    double last_drop_bound() const noexcept { return log_q_n / log_n; }
};

DerivedScales derived_scales(double n, double gamma, double kappa, double sigma2);

/// Random potential over a window, for horizon n. S_0 = 0 and
/// S_k - S_{k-1} = eps_k for every k in the window.
class PotentialView {
public:
    PotentialView(Environment env, double n);

    const Environment& env() const noexcept { return env_; }
    const Window& window() const noexcept { return env_.window(); }
    double n() const noexcept { return n_; }
    double log_n() const noexcept { return log_n_; }

    bool contains(std::int64_t k) const noexcept { return window().contains(k); }
    double S(std::int64_t k) const;
    /// Stored sum; comparisons between sites should go through this.
    long double raw(std::int64_t k) const;
    double Sn(std::int64_t k) const { return S(k) / log_n_; }
    /// S_i - S_j from the stored sums; exact for lattice laws.
    double diff(std::int64_t i, std::int64_t j) const;
    double ndiff(std::int64_t i, std::int64_t j) const { return diff(i, j) / log_n_; }

    /// Same environment over a larger window (sampled environments only).
    PotentialView grown(Window window) const;

private:
    long double at(std::int64_t k) const { return sums_[static_cast<std::size_t>(k - window().lo)]; }

    Environment env_;
    double n_;
    double log_n_;
    std::vector<long double> sums_;
};

/// Doubles the window around 0 until `covers` holds or `cap` sites are used.
struct GrowthPolicy {
    std::int64_t initial_half_width = 1024;
    std::int64_t max_sites = std::int64_t{1} << 22;
};

}  // namespace sinai
