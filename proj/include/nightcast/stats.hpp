#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

namespace nightcast::stats {

inline double mean(std::span<const double> v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double median(std::span<const double> v) {
    if (v.empty()) return 0.0;
    std::vector<double> s(v.begin(), v.end());
    std::sort(s.begin(), s.end());
    const std::size_t n = s.size();
    return n % 2 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

// Sample standard deviation (n - 1); zero for fewer than two values.
inline double stdev(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    // Welford; identical samples give exactly zero
    double m = 0.0, ss = 0.0;
    std::size_t n = 0;
    for (double x : v) {
        ++n;
        const double d = x - m;
        m += d / static_cast<double>(n);
        ss += d * (x - m);
    }
    return std::sqrt(ss / static_cast<double>(n - 1));
}

inline double min(std::span<const double> v) {
    return v.empty() ? 0.0 : *std::min_element(v.begin(), v.end());
}

inline double max(std::span<const double> v) {
    return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

struct Summary {
    double min = 0.0;
    double median = 0.0;
    double mean = 0.0;
    double max = 0.0;
    double sd = 0.0;
};

inline Summary summarize(std::span<const double> v) {
    return Summary{stats::min(v), stats::median(v), stats::mean(v), stats::max(v), stats::stdev(v)};
}

}  // namespace nightcast::stats
