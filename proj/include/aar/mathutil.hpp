#pragma once

#include <cmath>

namespace aar {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

inline double normal_pdf(double x, double mean, double stddev) {
    double t = (x - mean) / stddev;
    return std::exp(-0.5 * t * t) / (stddev * std::sqrt(kTwoPi));
}

inline double normal_log_pdf(double x, double mean, double stddev) {
    double t = (x - mean) / stddev;
    return -0.5 * t * t - std::log(stddev) - 0.5 * std::log(kTwoPi);
}

// Standard normal CDF via erfc; accurate in both tails.
inline double normal_cdf(double x, double mean = 0.0, double stddev = 1.0) {
    double t = (x - mean) / stddev;
    return 0.5 * std::erfc(-t / std::sqrt(2.0));
}

} // namespace aar
