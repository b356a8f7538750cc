#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "carleman/errors.hpp"

namespace carleman {

/// Evaluates f^(k)(x); k = 0 is the function itself.
using DerivativeFn = std::function<double(double, int)>;

/// a sin(w x + phi): derivatives cycle with a phase shift of pi/2 each.
inline DerivativeFn sinusoid(double amplitude, double omega, double phase) {
    return [=](double x, int k) {
        return amplitude * std::pow(omega, k) *
               std::sin(omega * x + phase + 0.5 * std::numbers::pi_v<double> * k);
    };
}

inline DerivativeFn constant_fn(double c) {
    return [c](double, int k) { return k == 0 ? c : 0.0; };
}

/// Named triples of analytic functions for the equalizer demonstration.
struct AnalyticTriple {
    std::string name;
    DerivativeFn f1, f2, f3;
    std::string describe;
};

inline AnalyticTriple analytic_triple(const std::string& name) {
    if (name == "sinusoids")
        return {name, sinusoid(1, 1, 0), sinusoid(1, 1, 0.5 * std::numbers::pi_v<double>),
                sinusoid(1, 1, -1.0), "sin(x), cos(x), sin(x - 1)"};
    if (name == "harmonics")
        return {name, sinusoid(1, 1, 0), sinusoid(0.5, 2, 0), sinusoid(0.25, 3, 0.3),
                "sin(x), 0.5 sin(2x), 0.25 sin(3x + 0.3)"};
    if (name == "degenerate")
        return {name, sinusoid(1, 1, 0), sinusoid(1, 1, 0), sinusoid(1, 1, 1.0),
                "sin(x), sin(x), sin(x + 1)"};
    throw Error("unknown analytic triple: " + name);
}

} // namespace carleman
