#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sinai/env.hpp"
#include "sinai/valleys.hpp"

namespace sinai {

enum class Experiment { Containment, Localization, Subdiffusivity, GoodEnvScan, TailVsBound };

std::string to_string(Experiment e);
Experiment parse_experiment(const std::string& name);

enum class GoodFilter { Basin, Full };

struct ExperimentConfig {
    Experiment experiment = Experiment::Containment;
    std::string dist = "twopoint:0.3";
    std::vector<double> n_grid;
    double gamma = 3.0;
    double kappa = 1.0;
    std::uint64_t environments = 100;
    std::uint64_t walks = 100;
    std::uint64_t seed = 1;
    int threads = 0;
    /// Use every drawn environment, not only the good ones.
    bool all_envs = false;
    GoodFilter good_filter = GoodFilter::Basin;
    /// Negative: literal l_n * b_n.
    double chop_width = -1.0;
    std::int64_t barrier_cap = std::int64_t{1} << 16;
    bool strict_normalization = false;
    std::uint64_t max_env_draws = 10000;
    /// Return-time grid for the tail experiment; empty means 20 log-spaced points.
    std::vector<double> q_grid;
    /// Walks for the flat control of the subdiffusivity run.
    std::uint64_t control_walks = 1000;
};

ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);

/// Rows of already formatted cells; doubles use 17 significant digits so a
/// re-parse gives back the same value.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::string to_csv() const;
    static Table from_csv(const std::string& text);
    std::size_t column(const std::string& name) const;
    double number(std::size_t row, const std::string& name) const;
};

std::string format_number(double v);
std::string format_number(std::int64_t v);
std::string format_number(std::uint64_t v);
std::string format_number(int v);

struct Check {
    std::string name;
    bool passed = true;
    std::string detail;
};

struct ExperimentResult {
    std::string name;
    Table rows;
    Table summary;
    std::vector<Check> checks;
    double wall_seconds = 0.0;

    bool all_passed() const;
};

struct EscapeCounts {
    std::uint64_t walks = 0;
    /// Walks that left [M'_0, M_0] within n steps.
    std::uint64_t valley = 0;
    /// Walks that left [-B, B], B = extent bound.
    std::uint64_t fixed = 0;
};

/// Walks from 0 for n steps in one environment; walk i uses
/// derive_seed(seed, Replica, i).
EscapeCounts containment_escapes(const Environment& env, const Valley& valley, double n, double extent_bound,
                                 std::uint64_t walks, std::uint64_t seed, int threads);

ExperimentResult run_experiment(const ExperimentConfig& cfg);
ExperimentResult run_containment(const ExperimentConfig& cfg);
ExperimentResult run_localization(const ExperimentConfig& cfg);
ExperimentResult run_subdiffusivity(const ExperimentConfig& cfg);
ExperimentResult run_good_env_scan(const ExperimentConfig& cfg);
ExperimentResult run_tail_vs_bound(const ExperimentConfig& cfg);

/// Writes <name>.csv, <name>_summary.csv and <name>.json (config, checks,
/// timing) into `dir`; with `plot`, also <name>.dat for gnuplot.
void write_outputs(const ExperimentResult& result, const ExperimentConfig& cfg, const std::string& dir, bool plot);

/// Median and other order statistics used by the reports.
double quantile(std::vector<double> values, double p);

}  // namespace sinai
