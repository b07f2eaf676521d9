#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "sinai/env.hpp"

namespace testing_support {

// Explicit environment whose potential takes the values `s` on lo..lo+s.size()-1
// (shifted so that S_0 = 0). The first site gets alpha = 1/2.
inline sinai::Environment from_potential(std::int64_t lo, const std::vector<double>& s) {
    std::vector<double> alphas;
    alphas.push_back(0.5);
    for (std::size_t k = 1; k < s.size(); ++k) alphas.push_back(1.0 / (1.0 + std::exp(s[k] - s[k - 1])));
    return sinai::Environment::from_alphas(lo, alphas);
}

// Potential with the given increments eps on lo..hi.
inline sinai::Environment from_increments(std::int64_t lo, const std::vector<double>& eps) {
    std::vector<double> alphas;
    for (double e : eps) alphas.push_back(1.0 / (1.0 + std::exp(e)));
    return sinai::Environment::from_alphas(lo, alphas);
}

// Piecewise linear potential through (site, value) knots, sampled on integers.
inline std::vector<double> polyline(const std::vector<std::pair<std::int64_t, double>>& knots) {
    std::vector<double> s;
    for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
        const auto [x0, y0] = knots[k];
        const auto [x1, y1] = knots[k + 1];
        for (std::int64_t x = x0; x < x1; ++x) s.push_back(y0 + (y1 - y0) * double(x - x0) / double(x1 - x0));
    }
    s.push_back(knots.back().second);
    return s;
}

}  // namespace testing_support
