#include "dualstate/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace dualstate::stats {

double mean(std::span<const double> x) {
    if (x.empty()) return 0.0;
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    const double m = mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return ss / static_cast<double>(x.size() - 1);
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) return std::nullopt;
    const double mx = mean(x), my = mean(y);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> ranks(std::span<const double> x) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> r(x.size());
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) return std::nullopt;
    const auto rx = ranks(x), ry = ranks(y);
    return pearson(rx, ry);
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

double student_t_quantile(double p, double dof) {
    boost::math::students_t dist(dof);
    return boost::math::quantile(dist, p);
}

double student_half_width(std::span<const double> runs, double alpha) {
    if (runs.size() < 2) return 0.0;
    const double n = static_cast<double>(runs.size());
    const double t = student_t_quantile(1.0 - alpha / 2.0, n - 1.0);
    return t * std::sqrt(sample_variance(runs)) / std::sqrt(n);
}

std::optional<double> fisher_z_p(double r1, std::size_t n1, double r2, std::size_t n2) {
    if (n1 <= 3 || n2 <= 3 || !std::isfinite(r1) || !std::isfinite(r2)) return std::nullopt;
    constexpr double lim = 1.0 - 1e-12;
    const double z1 = std::atanh(std::clamp(r1, -lim, lim));
    const double z2 = std::atanh(std::clamp(r2, -lim, lim));
    const double se = std::sqrt(1.0 / static_cast<double>(n1 - 3) + 1.0 / static_cast<double>(n2 - 3));
    return std::min(1.0, 2.0 * normal_sf(std::abs(z1 - z2) / se));
}

namespace {

std::vector<double> unit_ranks(const std::vector<double>& x) {
    auto r = ranks(x);
    const double n = static_cast<double>(x.size());
    for (double& v : r) v = (v - 0.5) / n;
    return r;
}

std::optional<double> spearman_of(const std::vector<double>& x, const std::vector<double>& y,
                                  const std::vector<std::size_t>& pick) {
    std::vector<double> a, b;
    a.reserve(pick.size());
    b.reserve(pick.size());
    for (std::size_t i : pick) {
        a.push_back(x[i]);
        b.push_back(y[i]);
    }
    return spearman(a, b);
}

}  // namespace

std::optional<double> spearman_permutation_p(const PairSample& a, const PairSample& b, int draws,
                                             std::uint64_t seed) {
    const auto ra = spearman(a.x, a.y);
    const auto rb = spearman(b.x, b.y);
    if (!ra || !rb || draws < 1) return std::nullopt;
    const double observed = std::abs(*ra - *rb);

    std::vector<double> px = unit_ranks(a.x), py = a.y;
    const auto ubx = unit_ranks(b.x);
    px.insert(px.end(), ubx.begin(), ubx.end());
    py.insert(py.end(), b.y.begin(), b.y.end());

    const std::size_t n = px.size(), na = a.x.size();
    std::vector<std::size_t> order(n);
    std::mt19937_64 rng(seed);
    int extreme = 0;
    for (int d = 0; d < draws; ++d) {
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<std::size_t> ga(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(na));
        std::vector<std::size_t> gb(order.begin() + static_cast<std::ptrdiff_t>(na), order.end());
        const auto sa = spearman_of(px, py, ga);
        const auto sb = spearman_of(px, py, gb);
        // A degenerate split cannot be more extreme than a defined one.
        if (sa && sb && std::abs(*sa - *sb) >= observed - 1e-12) ++extreme;
    }
    return (1.0 + extreme) / (1.0 + draws);
}

}  // namespace dualstate::stats
