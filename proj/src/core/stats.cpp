#include "ecx/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ecx::stats {

double mean(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_sd(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

std::vector<double> tied_rank(std::span<const double> xs) {
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(xs.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
    const double mx = mean(xs), my = mean(ys);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
    const auto rx = tied_rank(xs);
    const auto ry = tied_rank(ys);
    return pearson(rx, ry);
}

namespace {

// Regularized incomplete beta via continued fraction (Numerical Recipes betacf).
double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double lbeta = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
    const double front = std::exp(lbeta + a * std::log(x) + b * std::log1p(-x));
    auto cf = [](double aa, double bb, double xx) {
        constexpr double tiny = 1e-300;
        double c = 1.0, d = 1.0 - (aa + bb) * xx / (aa + 1.0);
        if (std::fabs(d) < tiny) d = tiny;
        d = 1.0 / d;
        double h = d;
        for (int m = 1; m <= 300; ++m) {
            const double m2 = 2.0 * m;
            double num = m * (bb - m) * xx / ((aa + m2 - 1.0) * (aa + m2));
            d = 1.0 + num * d;
            if (std::fabs(d) < tiny) d = tiny;
            c = 1.0 + num / c;
            if (std::fabs(c) < tiny) c = tiny;
            d = 1.0 / d;
            h *= d * c;
            num = -(aa + m) * (aa + bb + m) * xx / ((aa + m2) * (aa + m2 + 1.0));
            d = 1.0 + num * d;
            if (std::fabs(d) < tiny) d = tiny;
            c = 1.0 + num / c;
            if (std::fabs(c) < tiny) c = tiny;
            d = 1.0 / d;
            const double del = d * c;
            h *= del;
            if (std::fabs(del - 1.0) < 1e-15) break;
        }
        return h;
    };
    if (x < (a + 1.0) / (a + b + 2.0)) return front * cf(a, b, x) / a;
    return 1.0 - front * cf(b, a, 1.0 - x) / b;
}

}  // namespace

double spearman_negative_p_value(std::span<const double> xs, std::span<const double> ys) {
    const std::size_t n = xs.size();
    if (n < 3) return 1.0;
    const double observed = spearman(xs, ys);
    if (n <= 9) {
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::vector<double> permuted(n);
        std::size_t hits = 0, total = 0;
        do {
            for (std::size_t i = 0; i < n; ++i) permuted[i] = ys[perm[i]];
            if (spearman(xs, permuted) <= observed + 1e-12) ++hits;
            ++total;
        } while (std::next_permutation(perm.begin(), perm.end()));
        return static_cast<double>(hits) / static_cast<double>(total);
    }
    const double r = std::clamp(observed, -0.999999999, 0.999999999);
    const double df = static_cast<double>(n - 2);
    const double t = r * std::sqrt(df / (1.0 - r * r));
    // Lower tail of Student-t with df degrees of freedom.
    const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
    return t < 0 ? tail : 1.0 - tail;
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p outside (0,1)");
    double lo = -40.0, hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double cdf = 0.5 * std::erfc(-mid / std::sqrt(2.0));
        (cdf < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double silverman_bandwidth(std::span<const double> xs) {
    if (xs.size() < 2) return 1.0;
    const double sd = sample_sd(xs);
    const double h = 1.06 * sd * std::pow(static_cast<double>(xs.size()), -0.2);
    return h > 0.0 ? h : 1.0;
}

}  // namespace ecx::stats
