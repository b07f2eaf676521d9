#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sinai/exact.hpp"
#include "sinai/goodenv.hpp"
#include "sinai/harness.hpp"
#include "sinai/io.hpp"
#include "sinai/valleys.hpp"
#include "sinai/walk.hpp"

namespace py = pybind11;
using namespace sinai;

namespace {

Window window_of(std::pair<std::int64_t, std::int64_t> w) { return {w.first, w.second}; }

Side side_of(const std::string& s) {
    if (s == "right") return Side::Right;
    if (s == "left") return Side::Left;
    throw Error(ErrorKind::InvalidConfig, "side must be 'right' or 'left'");
}

py::object loads(const std::string& text) { return py::module_::import("json").attr("loads")(text); }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Random walk in a one-dimensional random environment";

    py::register_exception<Error>(m, "SinaiError", PyExc_ValueError);

    py::class_<DistSpec>(m, "DistSpec")
        .def_static("parse", &DistSpec::parse)
        .def_static("two_point", &DistSpec::two_point)
        .def_static("symmetric_uniform", &DistSpec::symmetric_uniform)
        .def_static("discrete_table", &DistSpec::discrete_table)
        .def_property_readonly("sigma2", &DistSpec::sigma2)
        .def_property_readonly("mean", [](const DistSpec& d) { return d.moments().mean; })
        .def("exp_moment", &DistSpec::exp_moment)
        .def("__str__", &DistSpec::to_string);

    py::class_<Environment>(m, "Environment")
        .def_static("sampled", [](const DistSpec& spec, std::uint64_t seed,
                                  std::pair<std::int64_t, std::int64_t> w) { return Environment::sampled(spec, seed, window_of(w)); })
        .def_static("from_alphas", &Environment::from_alphas)
        .def_static("constant", [](double v, std::pair<std::int64_t, std::int64_t> w) {
            return Environment::constant(v, window_of(w));
        })
        .def_static("from_json", &environment_from_json)
        .def("to_json", &environment_to_json)
        .def_property_readonly("window", [](const Environment& e) { return std::pair{e.window().lo, e.window().hi}; })
        .def_property_readonly("extendable", &Environment::extendable)
        .def("alpha", &Environment::alpha)
        .def("epsilon", &Environment::epsilon)
        .def("alphas", [](const Environment& e) {
            std::vector<double> out;
            for (std::int64_t k = e.window().lo; k <= e.window().hi; ++k) out.push_back(e.alpha(k));
            return out;
        })
        .def("potential", [](const Environment& e) {
            const PotentialView pot(e, 3.0);
            std::vector<double> out;
            for (std::int64_t k = e.window().lo; k <= e.window().hi; ++k) out.push_back(pot.S(k));
            return out;
        }, "S_k over the window, S_0 = 0");

    py::class_<DerivedScales>(m, "DerivedScales")
        .def_readonly("n", &DerivedScales::n)
        .def_readonly("gamma", &DerivedScales::gamma)
        .def_readonly("log_n", &DerivedScales::log_n)
        .def_readonly("log2_n", &DerivedScales::log2_n)
        .def_readonly("log3_n", &DerivedScales::log3_n)
        .def_readonly("gamma_n", &DerivedScales::gamma_n)
        .def_readonly("b_n", &DerivedScales::b_n)
        .def_readonly("k_n", &DerivedScales::k_n)
        .def_readonly("l_n", &DerivedScales::l_n)
        .def_readonly("log_q_n", &DerivedScales::log_q_n)
        .def_readonly("L_n", &DerivedScales::L_n)
        .def_readonly("gamma0", &DerivedScales::gamma0)
        .def("depth_threshold", &DerivedScales::depth_threshold)
        .def("chop_width", &DerivedScales::chop_width)
        .def("extent_bound", &DerivedScales::extent_bound)
        .def("barrier_threshold", &DerivedScales::barrier_threshold);
    m.def("derived_scales", &derived_scales, py::arg("n"), py::arg("gamma") = 3.0, py::arg("kappa") = 1.0,
          py::arg("sigma2"));

    py::class_<Valley>(m, "Valley")
        .def_readonly("m_left", &Valley::m_left)
        .def_readonly("bottom", &Valley::bottom)
        .def_readonly("m_right", &Valley::m_right)
        .def_readonly("depth", &Valley::depth)
        .def("__repr__", [](const Valley& v) {
            return "Valley(" + std::to_string(v.m_left) + ", " + std::to_string(v.bottom) + ", " +
                   std::to_string(v.m_right) + ")";
        });

    m.def("basic_valley", [](const Environment& env, double n, double gamma, double kappa) -> std::optional<Valley> {
        if (!env.spec()) throw Error(ErrorKind::InvalidConfig, "basic_valley needs a sampled environment");
        PotentialView pot(env, n);
        return find_basic_valley(pot, derived_scales(n, gamma, kappa, env.spec()->sigma2()));
    }, py::arg("env"), py::arg("n"), py::arg("gamma") = 3.0, py::arg("kappa") = 1.0);

    m.def("refine", [](const Environment& env, double n, std::int64_t lo, std::int64_t hi, const std::string& side) {
        const auto p = refine(PotentialView(env, n), lo, hi, side_of(side));
        return py::make_tuple(p.maximizer, p.minimizer, p.drop);
    }, py::arg("env"), py::arg("n"), py::arg("lo"), py::arg("hi"), py::arg("side") = "right",
       "(maximizer, minimizer, normalized drop)");

    m.def("check_good_environment",
          [](const Environment& env, double n, double gamma, double kappa, double chop_width,
             std::int64_t barrier_cap, std::optional<double> sigma2) {
              GoodEnvOptions o;
              o.chop_width = chop_width;
              o.barrier_cap = barrier_cap;
              o.sigma2 = sigma2;
              return loads(report_to_json(check_good_environment(env, n, gamma, kappa, o)));
          },
          py::arg("env"), py::arg("n"), py::arg("gamma") = 3.0, py::arg("kappa") = 1.0, py::arg("chop_width") = -1.0,
          py::arg("barrier_cap") = std::int64_t{1} << 16, py::arg("sigma2") = py::none(),
          "report as a dict");

    m.def("exit_prob", [](const Environment& env, std::int64_t a, std::int64_t x, std::int64_t b) {
        const auto p = exit_prob(env, a, x, b);
        return py::make_tuple(p.p_b_first, p.p_a_first);
    }, "(P[T_b < T_a], P[T_a < T_b]) from x");
    m.def("expected_exit_time",
          [](const Environment& env, std::int64_t a, std::int64_t x, std::int64_t b) {
              return expected_exit_time(env, a, x, b).value;
          });
    m.def("expected_exit_times", [](const Environment& env, std::int64_t a, std::int64_t b) {
        return expected_exit_times(env, a, b);
    });
    m.def("second_moment_exit_adjacent",
          [](const Environment& env, std::int64_t bottom, std::int64_t top, const std::string& side) {
              return second_moment_exit_adjacent(env, bottom, top, side_of(side)).value;
          },
          py::arg("env"), py::arg("bottom"), py::arg("top"), py::arg("side") = "right");

    m.def("simulate",
          [](const Environment& env, std::int64_t start, std::uint64_t steps, std::uint64_t replicas,
             std::uint64_t seed, std::optional<std::pair<std::int64_t, std::int64_t>> stop, int threads) {
              WalkerConfig cfg;
              cfg.start = start;
              cfg.max_steps = steps;
              if (stop) cfg.stop_outside = window_of(*stop);
              const Window w = env.extendable() ? Window{std::min(env.window().lo, start - 64),
                                                         std::max(env.window().hi, start + 64)}
                                                : env.window();
              std::vector<WalkResult> res;
              {
                  py::gil_scoped_release release;
                  res = simulate_replicas(StepTable(env, w), cfg, replicas, seed, threads);
              }
              std::vector<std::int64_t> endpoints;
              std::vector<std::uint64_t> times;
              for (const auto& r : res) {
                  endpoints.push_back(r.endpoint);
                  times.push_back(r.steps);
              }
              return py::make_tuple(endpoints, times);
          },
          py::arg("env"), py::arg("start") = 0, py::arg("steps") = 1000, py::arg("replicas") = 1000,
          py::arg("seed") = 1, py::arg("stop") = py::none(), py::arg("threads") = 1,
          "(endpoints, steps taken) per replica");

    m.def("run_experiment", [](const std::string& config_json, int threads) {
        auto cfg = config_from_json(config_json);
        if (threads > 0) cfg.threads = threads;
        ExperimentResult r;
        {
            py::gil_scoped_release release;
            r = run_experiment(cfg);
        }
        py::list checks;
        for (const auto& c : r.checks) checks.append(py::make_tuple(c.name, c.passed, c.detail));
        py::dict out;
        out["name"] = r.name;
        out["rows"] = r.rows.to_csv();
        out["summary"] = r.summary.to_csv();
        out["checks"] = checks;
        out["passed"] = r.all_passed();
        return out;
    }, py::arg("config_json"), py::arg("threads") = 0, "CSV text of rows and summary plus the checks");
}
