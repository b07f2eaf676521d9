#pragma once

#include <string>

#include "sinai/env.hpp"
#include "sinai/goodenv.hpp"

namespace sinai {

/// {family, params, seed, window}. Families: twopoint {p}, uniform {c},
/// table {alphas, weights}, explicit {alphas} (alpha per window site), constant {value}.
std::string environment_to_json(const Environment& env);
Environment environment_from_json(const std::string& text);

/// Valley, chain (index lists and delta/eta/mu arrays), barrier and clause verdicts.
std::string report_to_json(const GoodEnvReport& report);

/// "-1000:1000" -> {-1000, 1000}.
Window parse_window(const std::string& text);

/// Accepts "1e6" as well as "1000000".
double parse_number(const std::string& text);

}  // namespace sinai
