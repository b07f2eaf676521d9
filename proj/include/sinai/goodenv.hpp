#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sinai/env.hpp"
#include "sinai/valleys.hpp"

namespace sinai {

enum class ClauseStatus { Pass, Fail, FailedByPrerequisite, Undetermined };

std::string_view to_string(ClauseStatus status);

struct ClauseVerdict {
    std::string name;
    ClauseStatus status = ClauseStatus::FailedByPrerequisite;
    /// Measured quantity and the bound it is compared with (NaN when vacuous).
    double witness = 0.0;
    double threshold = 0.0;
};

/// Clause names in report order.
inline constexpr std::string_view kClauseNames[] = {
    "existence",      "depth",          "side_dominance", "max_inv_alpha",    "max_inv_beta",
    "extent",         "chopping",       "barrier",        "refinements_right", "refinements_left",
    "eta_right",      "delta_right",    "mu_right",       "eta_left",         "delta_left",
    "mu_left",        "first_drop_right", "first_drop_left", "last_drop_right", "last_drop_left",
};

/// Clauses that only concern the basic valley itself (no chopping, no barrier).
inline constexpr std::string_view kBasinClauses[] = {"existence", "depth", "side_dominance",
                                                      "max_inv_alpha", "max_inv_beta", "extent"};

struct GoodEnvOptions {
    /// Required for environments without a distribution (explicit tables).
    std::optional<double> sigma2;
    /// Chopping width; negative means l_n * b_n.
    double chop_width = -1.0;
    /// Sites searched on each side for the inner barrier before giving up.
    std::int64_t barrier_cap = std::int64_t{1} << 16;
    /// Read the side-dominance clause with the flank height unnormalized.
    bool strict_normalization = false;
    GrowthPolicy growth;
};

struct GoodEnvReport {
    DerivedScales scales;
    std::vector<ClauseVerdict> clauses;
    bool overall = false;
    /// False when some clause could not be decided within the search caps.
    bool determined = true;
    std::optional<Valley> valley;
    std::optional<RefinementChain> chain;
    std::optional<InnerBarrier> barrier;

    const ClauseVerdict& clause(std::string_view name) const;
    /// True when every named clause passes.
    bool passes(std::span<const std::string_view> names) const;
};

GoodEnvReport check_good_environment(const Environment& env, double n, double gamma, double kappa,
                                     const GoodEnvOptions& options = {});

struct GoodProbability {
    std::uint64_t replicas = 0;
    std::uint64_t successes = 0;
    std::uint64_t basin_successes = 0;
    std::uint64_t undetermined = 0;
    double estimate = 0.0;
    double se = 0.0;
    double basin_estimate = 0.0;
    double basin_se = 0.0;
    std::map<std::string, std::uint64_t> failures;
    std::map<std::string, std::uint64_t> prerequisite_failures;
    std::vector<GoodEnvReport> reports;
};

/// Environment i uses seed derive_seed(master, Environment, i).
GoodProbability estimate_good_probability(const DistSpec& spec, double n, double gamma, double kappa,
                                          std::uint64_t replicas, std::uint64_t master_seed,
                                          const GoodEnvOptions& options = {}, int threads = 0,
                                          bool keep_reports = false);

}  // namespace sinai
