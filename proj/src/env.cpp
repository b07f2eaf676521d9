#include "sinai/env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "sinai/rng.hpp"

namespace sinai {

namespace {

constexpr double kTableMeanTolerance = 1e-12;

double logit_eps(double alpha) { return std::log((1.0 - alpha) / alpha); }

template <class F>
double uniform_average(double c, F&& f) {
    using boost::math::quadrature::gauss_kronrod;
    // eps is symmetric about alpha = 1/2; integrate one half and double it.
    const double half = gauss_kronrod<double, 61>::integrate(f, c, 0.5, 15, 1e-14);
    return 2.0 * half / (1.0 - 2.0 * c);
}

double parse_double(const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw Error(ErrorKind::InvalidSpec, "not a number: '" + s + "'");
    }
    if (used != s.size()) throw Error(ErrorKind::InvalidSpec, "not a number: '" + s + "'");
    return v;
}

}  // namespace

DistSpec::DistSpec(std::variant<TwoPoint, SymmetricUniform, DiscreteTable> law) : law_(std::move(law)) {}

DistSpec DistSpec::two_point(double p) {
    if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::InvalidSpec, "two-point p must lie in (0,1)");
    DistSpec spec(TwoPoint{p});
    const double c = logit_eps(p);
    spec.lattice_eps_ = c;
    auto& m = spec.moments_;
    m.mean = 0.0;
    m.sigma2 = c * c;
    m.abs_third = std::abs(c * c * c);
    m.fourth = c * c * c * c;
    m.max_abs_eps = std::abs(c);
    if (!(m.sigma2 > 0.0)) throw Error(ErrorKind::InvalidSpec, "sigma^2 = 0 (p = 1/2 is the simple random walk)");
    return spec;
}

DistSpec DistSpec::symmetric_uniform(double c) {
    if (!(c > 0.0 && c < 0.5)) throw Error(ErrorKind::InvalidSpec, "uniform c must lie in (0,1/2)");
    DistSpec spec(SymmetricUniform{c});
    auto& m = spec.moments_;
    m.mean = 0.0;
    m.sigma2 = uniform_average(c, [](double a) { const double e = logit_eps(a); return e * e; });
    m.abs_third = uniform_average(c, [](double a) { return std::pow(std::abs(logit_eps(a)), 3); });
    m.fourth = uniform_average(c, [](double a) { return std::pow(logit_eps(a), 4); });
    m.max_abs_eps = logit_eps(c);
    return spec;
}

DistSpec DistSpec::discrete_table(std::vector<double> alphas, std::vector<double> weights) {
    if (alphas.empty() || alphas.size() != weights.size())
        throw Error(ErrorKind::InvalidSpec, "table needs matching, non-empty alpha and weight lists");
    for (double a : alphas)
        if (!(a > 0.0 && a < 1.0)) throw Error(ErrorKind::InvalidSpec, "table alpha outside (0,1)");
    for (double w : weights)
        if (!(w > 0.0 && std::isfinite(w))) throw Error(ErrorKind::InvalidSpec, "table weights must be positive");
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (double& w : weights) w /= total;

    DistSpec spec(DiscreteTable{alphas, weights});
    auto& m = spec.moments_;
    double acc = 0.0;
    for (std::size_t j = 0; j < alphas.size(); ++j) {
        const double e = logit_eps(alphas[j]);
        spec.table_eps_.push_back(e);
        acc += weights[j];
        spec.cumulative_.push_back(acc);
        m.mean += weights[j] * e;
        m.sigma2 += weights[j] * e * e;
        m.abs_third += weights[j] * std::abs(e * e * e);
        m.fourth += weights[j] * e * e * e * e;
        m.max_abs_eps = std::max(m.max_abs_eps, std::abs(e));
    }
    spec.cumulative_.back() = 1.0;
    if (std::abs(m.mean) > kTableMeanTolerance)
        throw Error(ErrorKind::InvalidSpec, "table violates E eps_0 = 0 (|mean| > 1e-12)");
    if (!(m.sigma2 > 0.0)) throw Error(ErrorKind::InvalidSpec, "table has sigma^2 = 0");
    return spec;
}

DistSpec DistSpec::parse(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw Error(ErrorKind::InvalidSpec, "expected family:params, got '" + text + "'");
    const std::string family = text.substr(0, colon);
    const std::string params = text.substr(colon + 1);
    if (family == "twopoint") return two_point(parse_double(params));
    if (family == "uniform") return symmetric_uniform(parse_double(params));
    if (family == "table") {
        std::vector<double> alphas, weights;
        std::stringstream ss(params);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto slash = item.find('/');
            if (slash == std::string::npos) throw Error(ErrorKind::InvalidSpec, "table entries are alpha/weight");
            alphas.push_back(parse_double(item.substr(0, slash)));
            weights.push_back(parse_double(item.substr(slash + 1)));
        }
        return discrete_table(std::move(alphas), std::move(weights));
    }
    throw Error(ErrorKind::InvalidSpec, "unknown family '" + family + "'");
}

std::string DistSpec::to_string() const {
    std::ostringstream out;
    out.precision(17);
    if (const auto* t = std::get_if<TwoPoint>(&law_)) {
        out << "twopoint:" << t->p;
    } else if (const auto* u = std::get_if<SymmetricUniform>(&law_)) {
        out << "uniform:" << u->c;
    } else {
        const auto& d = std::get<DiscreteTable>(law_);
        out << "table:";
        for (std::size_t j = 0; j < d.alphas.size(); ++j)
            out << (j ? "," : "") << d.alphas[j] << '/' << d.weights[j];
    }
    return out.str();
}

double DistSpec::exp_moment(double kappa) const {
    if (const auto* t = std::get_if<TwoPoint>(&law_)) return std::cosh(kappa * logit_eps(t->p));
    if (const auto* u = std::get_if<SymmetricUniform>(&law_))
        return uniform_average(u->c, [kappa](double a) { return std::cosh(kappa * logit_eps(a)); });
    const auto& d = std::get<DiscreteTable>(law_);
    double plus = 0.0, minus = 0.0;
    for (std::size_t j = 0; j < d.alphas.size(); ++j) {
        plus += d.weights[j] * std::exp(kappa * table_eps_[j]);
        minus += d.weights[j] * std::exp(-kappa * table_eps_[j]);
    }
    return std::max(plus, minus);
}

std::optional<double> DistSpec::lattice_step() const noexcept {
    if (std::holds_alternative<TwoPoint>(law_)) return lattice_eps_;
    return std::nullopt;
}

double DistSpec::sample_alpha(std::uint64_t bits) const noexcept {
    if (const auto* t = std::get_if<TwoPoint>(&law_)) return (bits >> 63) ? t->p : 1.0 - t->p;
    if (const auto* u = std::get_if<SymmetricUniform>(&law_)) return u->c + (1.0 - 2.0 * u->c) * to_open_unit(bits);
    const auto& d = std::get<DiscreteTable>(law_);
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), to_open_unit(bits));
    const auto j = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), d.alphas.size() - 1);
    return d.alphas[j];
}

double DistSpec::sample_epsilon(std::uint64_t bits) const noexcept {
    if (std::holds_alternative<TwoPoint>(law_)) return (bits >> 63) ? lattice_eps_ : -lattice_eps_;
    if (std::holds_alternative<SymmetricUniform>(law_)) return logit_eps(sample_alpha(bits));
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), to_open_unit(bits));
    const auto j = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), table_eps_.size() - 1);
    return table_eps_[j];
}

// ---------------------------------------------------------------------------

Environment Environment::sampled(const DistSpec& spec, std::uint64_t seed, Window window) {
    if (window.lo > window.hi) throw Error(ErrorKind::InvalidSpec, "empty window");
    Environment env;
    env.spec_ = spec;
    env.seed_ = seed;
    env.window_ = window;
    return env;
}

Environment Environment::from_alphas(std::int64_t lo, std::vector<double> alphas) {
    if (alphas.empty()) throw Error(ErrorKind::InvalidSpec, "empty alpha table");
    for (double a : alphas)
        if (!(a > 0.0 && a < 1.0)) throw Error(ErrorKind::InvalidSpec, "alpha outside (0,1)");
    Environment env;
    env.window_ = {lo, lo + static_cast<std::int64_t>(alphas.size()) - 1};
    env.table_lo_ = lo;
    env.table_ = std::make_shared<const std::vector<double>>(std::move(alphas));
    return env;
}

Environment Environment::constant(double value, Window window) {
    if (!(value > 0.0 && value < 1.0)) throw Error(ErrorKind::InvalidSpec, "alpha outside (0,1)");
    Environment env;
    env.window_ = window;
    env.constant_ = value;
    return env;
}

void Environment::require(std::int64_t i) const {
    if (!window_.contains(i))
        throw Error(ErrorKind::OutOfWindow, "site " + std::to_string(i) + " outside [" + std::to_string(window_.lo) +
                                                ", " + std::to_string(window_.hi) + "]");
}

double Environment::alpha_unchecked(std::int64_t i) const noexcept {
    if (table_) return (*table_)[static_cast<std::size_t>(i - table_lo_)];
    if (constant_) return *constant_;
    return spec_->sample_alpha(counter_hash(seed_ ^ static_cast<std::uint64_t>(Stream::Environment),
                                            static_cast<std::uint64_t>(i)));
}

double Environment::epsilon_unchecked(std::int64_t i) const noexcept {
    if (spec_)
        return spec_->sample_epsilon(counter_hash(seed_ ^ static_cast<std::uint64_t>(Stream::Environment),
                                                  static_cast<std::uint64_t>(i)));
    return logit_eps(alpha_unchecked(i));
}

double Environment::alpha(std::int64_t i) const {
    require(i);
    return alpha_unchecked(i);
}

double Environment::epsilon(std::int64_t i) const {
    require(i);
    return epsilon_unchecked(i);
}

Environment Environment::extended(Window window) const {
    if (!extendable() && !window_.contains(window))
        throw Error(ErrorKind::OutOfWindow, "explicit environment cannot be extended");
    Environment copy = *this;
    if (extendable()) copy.window_ = window;
    return copy;
}

Environment Environment::covering(Window window) const {
    return extended({std::min(window.lo, window_.lo), std::max(window.hi, window_.hi)});
}

// ---------------------------------------------------------------------------

double DerivedScales::extent_bound() const noexcept { return log_n * log_n / sigma2 * log2_n; }

double DerivedScales::refinement_count_bound() const noexcept {
    return 2.0 * std::sqrt(log_n) / std::sqrt(gamma * log2_n);
}

double DerivedScales::transition_bound() const noexcept { return std::exp(6.0 / kappa * log2_n); }

double DerivedScales::barrier_threshold() const noexcept { return (log_q_n + gamma * log2_n) / log_n; }

DerivedScales derived_scales(double n, double gamma, double kappa, double sigma2) {
    if (!(gamma > 0.0) || !(kappa > 0.0) || !(sigma2 > 0.0))
        throw Error(ErrorKind::InvalidSpec, "gamma, kappa and sigma^2 must be positive");
    DerivedScales s;
    s.n = n;
    s.gamma = gamma;
    s.kappa = kappa;
    s.sigma2 = sigma2;
    s.log_n = std::log(n);
    s.log2_n = s.log_n > 0.0 ? std::log(s.log_n) : -1.0;
    if (!(s.log2_n > 1.0)) throw Error(ErrorKind::HorizonTooSmall, "need n > e^e so that log log log n > 0");
    s.log3_n = std::log(s.log2_n);

    const double sigma = std::sqrt(sigma2);
    s.gamma_n = gamma * s.log2_n / s.log_n;
    s.b_n = std::floor(std::sqrt(gamma) * std::pow(s.log_n * s.log2_n, 1.5));
    if (s.b_n < 1.0) throw Error(ErrorKind::HorizonTooSmall, "b_n = 0 for this (n, gamma)");
    s.k_n = s.log_n * s.log_n / sigma2 * s.log2_n / s.b_n;
    s.l_n = DerivedScales::kD * sigma2 * std::log(s.k_n);
    s.log_q_n = 200.0 * sigma * std::sqrt(gamma) * std::pow(s.log2_n, 1.75) * std::pow(s.log_n, 0.75);
    const double barrier = 8.0 * (gamma * s.log2_n + s.log_q_n) / sigma;
    s.L_n = barrier * barrier * s.log2_n;
    s.gamma0 = 12.0 / kappa + 21.0 / 2.0;
    return s;
}

// ---------------------------------------------------------------------------

PotentialView::PotentialView(Environment env, double n) : env_(std::move(env)), n_(n), log_n_(std::log(n)) {
    if (!(log_n_ > 0.0)) throw Error(ErrorKind::HorizonTooSmall, "potential needs n > 1");
    const Window w = env_.window();
    if (!w.contains(0)) throw Error(ErrorKind::OutOfWindow, "window must contain 0");
    sums_.assign(static_cast<std::size_t>(w.size()), 0.0L);
    const auto origin = static_cast<std::size_t>(-w.lo);

    // Lattice laws: keep integer step counts so equal heights compare equal.
    const auto step = env_.spec() ? env_.spec()->lattice_step() : std::nullopt;
    if (step) {
        const long double c = *step;
        std::int64_t count = 0;
        for (std::int64_t k = 1; k <= w.hi; ++k) {
            count += env_.epsilon(k) > 0.0 ? 1 : -1;
            sums_[origin + static_cast<std::size_t>(k)] = c * static_cast<long double>(count);
        }
        count = 0;
        for (std::int64_t k = 0; k > w.lo; --k) {
            count -= env_.epsilon(k) > 0.0 ? 1 : -1;
            sums_[static_cast<std::size_t>(k - 1 - w.lo)] = c * static_cast<long double>(count);
        }
        return;
    }
    for (std::int64_t k = 1; k <= w.hi; ++k)
        sums_[origin + static_cast<std::size_t>(k)] =
            sums_[origin + static_cast<std::size_t>(k - 1)] + static_cast<long double>(env_.epsilon(k));
    for (std::int64_t k = 0; k > w.lo; --k)
        sums_[static_cast<std::size_t>(k - 1 - w.lo)] =
            sums_[static_cast<std::size_t>(k - w.lo)] - static_cast<long double>(env_.epsilon(k));
}

double PotentialView::S(std::int64_t k) const {
    if (!contains(k)) throw Error(ErrorKind::OutOfWindow, "potential at " + std::to_string(k));
    return static_cast<double>(at(k));
}

long double PotentialView::raw(std::int64_t k) const {
    if (!contains(k)) throw Error(ErrorKind::OutOfWindow, "potential at " + std::to_string(k));
    return at(k);
}

double PotentialView::diff(std::int64_t i, std::int64_t j) const {
    if (!contains(i) || !contains(j))
        throw Error(ErrorKind::OutOfWindow, "potential at " + std::to_string(contains(i) ? j : i));
    return static_cast<double>(at(i) - at(j));
}

PotentialView PotentialView::grown(Window window) const { return PotentialView(env_.covering(window), n_); }

}  // namespace sinai
