#include "sinai/io.hpp"

#include <cmath>
#include <limits>

#include <json.hpp>

namespace sinai {

namespace {

using nlohmann::json;

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json side_json(const RefinementChain& chain, Side side) {
    const auto& s = chain.get(side);
    json j;
    j["r"] = s.r;
    j["maxima"] = s.maxima;
    j["minima"] = s.minima;
    json delta = json::array(), eta = json::array(), mu = json::array();
    for (int i = 0; i <= s.r; ++i) {
        delta.push_back(chain.delta(i, i, side));
        mu.push_back(chain.mu(i, 0, side));
        if (i < s.r) eta.push_back(chain.eta(i, i + 1, side));
    }
    j["delta"] = delta;  // delta_{i,i}
    j["eta"] = eta;      // eta_{i,i+1}
    j["mu"] = mu;        // mu_{i,0}
    return j;
}

}  // namespace

std::string environment_to_json(const Environment& env) {
    json j;
    const Window w = env.window();
    j["window"] = {w.lo, w.hi};
    j["seed"] = env.seed();
    if (const auto* spec = env.spec()) {
        std::visit(
            [&](const auto& law) {
                using T = std::decay_t<decltype(law)>;
                if constexpr (std::is_same_v<T, TwoPoint>) {
                    j["family"] = "twopoint";
                    j["params"] = {{"p", law.p}};
                } else if constexpr (std::is_same_v<T, SymmetricUniform>) {
                    j["family"] = "uniform";
                    j["params"] = {{"c", law.c}};
                } else {
                    j["family"] = "table";
                    j["params"] = {{"alphas", law.alphas}, {"weights", law.weights}};
                }
            },
            spec->law());
    } else {
        std::vector<double> alphas;
        for (std::int64_t i = w.lo; i <= w.hi; ++i) alphas.push_back(env.alpha(i));
        j["family"] = "explicit";
        j["params"] = {{"alphas", alphas}};
    }
    return j.dump(2);
}

Environment environment_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
        const auto family = j.at("family").get<std::string>();
        const auto& p = j.at("params");
        const Window w{j.at("window").at(0).get<std::int64_t>(), j.at("window").at(1).get<std::int64_t>()};
        if (w.lo > w.hi) throw Error(ErrorKind::InvalidSpec, "empty window");
        const auto seed = j.value("seed", std::uint64_t{0});
        if (family == "twopoint") return Environment::sampled(DistSpec::two_point(p.at("p")), seed, w);
        if (family == "uniform") return Environment::sampled(DistSpec::symmetric_uniform(p.at("c")), seed, w);
        if (family == "table")
            return Environment::sampled(
                DistSpec::discrete_table(p.at("alphas").get<std::vector<double>>(), p.at("weights").get<std::vector<double>>()),
                seed, w);
        if (family == "constant") return Environment::constant(p.at("value"), w);
        if (family == "explicit") {
            auto alphas = p.at("alphas").get<std::vector<double>>();
            if (static_cast<std::int64_t>(alphas.size()) != w.size())
                throw Error(ErrorKind::InvalidSpec, "explicit alphas do not match the window");
            return Environment::from_alphas(w.lo, std::move(alphas));
        }
        throw Error(ErrorKind::InvalidSpec, "unknown family '" + family + "'");
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidSpec, std::string("bad environment JSON: ") + e.what());
    }
}

std::string report_to_json(const GoodEnvReport& report) {
    json j;
    const auto& s = report.scales;
    j["scales"] = {{"n", s.n},           {"gamma", s.gamma},       {"kappa", s.kappa},  {"sigma2", s.sigma2},
                   {"log_n", s.log_n},   {"gamma_n", s.gamma_n},   {"b_n", s.b_n},      {"k_n", s.k_n},
                   {"l_n", s.l_n},       {"log_q_n", s.log_q_n},   {"L_n", s.L_n}};
    j["overall"] = report.overall;
    j["determined"] = report.determined;
    if (report.valley) {
        const auto& v = *report.valley;
        j["valley"] = {{"M0p", v.m_left}, {"m0", v.bottom}, {"M0", v.m_right}, {"depth", v.depth}};
    } else {
        j["valley"] = nullptr;
    }
    if (report.chain) {
        j["chain"] = {{"bottom", report.chain->bottom},
                      {"width", report.chain->width},
                      {"right", side_json(*report.chain, Side::Right)},
                      {"left", side_json(*report.chain, Side::Left)}};
    } else {
        j["chain"] = nullptr;
    }
    if (report.barrier)
        j["barrier"] = {{"M_less", report.barrier->m_less}, {"M_greater", report.barrier->m_greater}};
    else
        j["barrier"] = nullptr;
    json clauses = json::array();
    for (const auto& c : report.clauses)
        clauses.push_back({{"name", c.name},
                           {"status", std::string(to_string(c.status))},
                           {"witness", nullable(c.witness)},
                           {"threshold", nullable(c.threshold)}});
    j["clauses"] = clauses;
    return j.dump(2);
}

Window parse_window(const std::string& text) {
    const auto colon = text.find(':', 1);
    if (colon == std::string::npos) throw Error(ErrorKind::InvalidConfig, "window must look like lo:hi");
    const Window w{static_cast<std::int64_t>(parse_number(text.substr(0, colon))),
                   static_cast<std::int64_t>(parse_number(text.substr(colon + 1)))};
    if (w.lo > w.hi) throw Error(ErrorKind::InvalidConfig, "window lo > hi");
    return w;
}

double parse_number(const std::string& text) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size()) throw Error(ErrorKind::InvalidConfig, "not a number: '" + text + "'");
    return v;
}

}  // namespace sinai
