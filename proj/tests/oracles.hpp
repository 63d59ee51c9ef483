#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "trustdyn/classifier.hpp"
#include "trustdyn/clustering.hpp"

// Test-side reference computations, kept independent of the library's
// implementation routes: quadrature instead of closed forms, power series
// instead of continued fractions, exhaustive search instead of greedy
// algorithms.

namespace oracle {

// Integral of f over (0, 1) via the substitution t = sin^2(u), which removes
// integrable endpoint singularities, then composite Simpson on [0, pi/2].
template <typename F>
double integral_unit_interval(F&& f, int intervals = 8192) {
    const double a = 0.0, b = M_PI / 2.0;
    const double h = (b - a) / intervals;
    auto g = [&](double u) {
        const double s = std::sin(u);
        const double t = s * s;
        if (t <= 0.0 || t >= 1.0) return 0.0;
        return f(t) * std::sin(2.0 * u);
    };
    double sum = g(a) + g(b);
    for (int i = 1; i < intervals; ++i) sum += g(a + i * h) * ((i % 2) ? 4.0 : 2.0);
    return sum * h / 3.0;
}

// Regularized incomplete beta via the hypergeometric power series
// I_x(a,b) = x^a (1-x)^b / (a B(a,b)) * sum_n [(a+b)_n / (a+1)_n] x^n,
// using the symmetry I_x(a,b) = 1 - I_{1-x}(b,a) to stay in the
// fast-converging region.
inline double inc_beta_series(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    if (x > (a + 1.0) / (a + b + 2.0)) return 1.0 - inc_beta_series(b, a, 1.0 - x);
    const double log_front = a * std::log(x) + b * std::log1p(-x) -
                             (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
    double term = 1.0;
    double sum = term;
    for (int n = 1; n < 10000; ++n) {
        term *= (a + b + n - 1.0) / (a + n) * x;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
    }
    return std::exp(log_front) * sum / a;
}

// Lower regularized incomplete gamma by its power series (valid for all
// x > 0, slow only for x >> a which the fixtures avoid).
inline double inc_gamma_lower_series(double a, double x) {
    if (x <= 0.0) return 0.0;
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int n = 0; n < 100000; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-17) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

struct AnovaOracle {
    double f = 0.0;
    int df1 = 0, df2 = 0;
    double p = 1.0;
};

inline AnovaOracle anova_direct(const std::vector<std::vector<double>>& groups) {
    int n_total = 0;
    double grand = 0.0;
    for (const auto& g : groups)
        for (double v : g) { grand += v; ++n_total; }
    grand /= n_total;
    double ssb = 0.0, ssw = 0.0;
    for (const auto& g : groups) {
        double m = 0.0;
        for (double v : g) m += v;
        m /= static_cast<double>(g.size());
        ssb += static_cast<double>(g.size()) * (m - grand) * (m - grand);
        for (double v : g) ssw += (v - m) * (v - m);
    }
    AnovaOracle out;
    out.df1 = static_cast<int>(groups.size()) - 1;
    out.df2 = n_total - static_cast<int>(groups.size());
    out.f = (ssb / out.df1) / (ssw / out.df2);
    out.p = inc_beta_series(out.df2 / 2.0, out.df1 / 2.0,
                            out.df2 / (out.df2 + out.df1 * out.f));
    return out;
}

struct TTestOracle {
    double t = 0.0;
    int df = 0;
    double p = 1.0;
};

inline TTestOracle pooled_t_direct(const std::vector<double>& a,
                                   const std::vector<double>& b) {
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    double ma = 0.0, mb = 0.0;
    for (double v : a) ma += v;
    for (double v : b) mb += v;
    ma /= na;
    mb /= nb;
    double ssa = 0.0, ssb = 0.0;
    for (double v : a) ssa += (v - ma) * (v - ma);
    for (double v : b) ssb += (v - mb) * (v - mb);
    TTestOracle out;
    out.df = static_cast<int>(na + nb) - 2;
    const double sp2 = (ssa + ssb) / out.df;
    out.t = (ma - mb) / std::sqrt(sp2 * (1.0 / na + 1.0 / nb));
    out.p = inc_beta_series(out.df / 2.0, 0.5, out.df / (out.df + out.t * out.t));
    return out;
}

struct Chi2Oracle {
    double chi2 = 0.0;
    int df = 0;
    double p = 1.0;
};

inline Chi2Oracle chi2_direct(const std::vector<std::vector<int>>& table) {
    const std::size_t rows = table.size(), cols = table.front().size();
    std::vector<double> rs(rows, 0.0), csum(cols, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            rs[i] += table[i][j];
            csum[j] += table[i][j];
            total += table[i][j];
        }
    Chi2Oracle out;
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            const double e = rs[i] * csum[j] / total;
            out.chi2 += (table[i][j] - e) * (table[i][j] - e) / e;
        }
    out.df = static_cast<int>((rows - 1) * (cols - 1));
    out.p = 1.0 - inc_gamma_lower_series(out.df / 2.0, out.chi2 / 2.0);
    return out;
}

// Exhaustive information-gain search over every feature and midpoint
// threshold; returns the set of (feature, threshold) within 1e-12 of the
// maximum gain.
struct SplitCandidate {
    int feature;
    double threshold;
    double gain;
};

inline std::vector<SplitCandidate> brute_force_best_splits(
    const trustdyn::LabeledDataset& data, int n_features) {
    auto entropy = [](const std::array<int, 3>& c) {
        int tot = c[0] + c[1] + c[2];
        double h = 0.0;
        for (int v : c) {
            if (v == 0) continue;
            const double p = static_cast<double>(v) / tot;
            h -= p * std::log2(p);
        }
        return h;
    };
    const int n = static_cast<int>(data.size());
    std::array<int, 3> all{0, 0, 0};
    for (int l : data.labels) ++all[l];
    const double h0 = entropy(all);

    std::vector<SplitCandidate> cands;
    for (int f = 0; f < n_features; ++f) {
        std::vector<double> vals;
        for (const auto& x : data.features) vals.push_back(x[f]);
        std::vector<double> uniq = vals;
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        for (std::size_t u = 0; u + 1 < uniq.size(); ++u) {
            const double thr = 0.5 * (uniq[u] + uniq[u + 1]);
            std::array<int, 3> left{0, 0, 0}, right{0, 0, 0};
            int nl = 0;
            for (int i = 0; i < n; ++i) {
                if (data.features[i][f] <= thr) { ++left[data.labels[i]]; ++nl; }
                else ++right[data.labels[i]];
            }
            const int nr = n - nl;
            if (nl == 0 || nr == 0) continue;
            const double gain = h0 - (static_cast<double>(nl) / n) * entropy(left) -
                                (static_cast<double>(nr) / n) * entropy(right);
            cands.push_back({f, thr, gain});
        }
    }
    double best = -1.0;
    for (const auto& c : cands) best = std::max(best, c.gain);
    std::vector<SplitCandidate> argmax;
    for (const auto& c : cands)
        if (c.gain >= best - 1e-12) argmax.push_back(c);
    return argmax;
}

// Minimal-wcss partition of points into exactly k non-empty groups by
// exhaustive assignment enumeration (tiny n only).
inline std::pair<double, std::vector<int>> brute_force_min_wcss(
    const std::vector<trustdyn::TrajectoryFeatures>& pts, int k) {
    const int n = static_cast<int>(pts.size());
    std::vector<int> assign(n, 0), best_assign;
    double best = -1.0;
    std::vector<int> stack(n, 0);
    const long total = static_cast<long>(std::pow(k, n));
    for (long code = 0; code < total; ++code) {
        long c = code;
        bool used[8] = {};
        for (int i = 0; i < n; ++i) {
            assign[i] = static_cast<int>(c % k);
            used[assign[i]] = true;
            c /= k;
        }
        bool all_used = true;
        for (int g = 0; g < k; ++g) all_used &= used[g];
        if (!all_used) continue;
        double wcss = 0.0;
        for (int g = 0; g < k; ++g) {
            double mx = 0.0, my = 0.0;
            int cnt = 0;
            for (int i = 0; i < n; ++i) {
                if (assign[i] != g) continue;
                mx += pts[i].avg_log_trust;
                my += pts[i].rmse;
                ++cnt;
            }
            mx /= cnt;
            my /= cnt;
            for (int i = 0; i < n; ++i) {
                if (assign[i] != g) continue;
                const double dx = pts[i].avg_log_trust - mx, dy = pts[i].rmse - my;
                wcss += dx * dx + dy * dy;
            }
        }
        if (best < 0.0 || wcss < best) {
            best = wcss;
            best_assign = assign;
        }
    }
    return {best, best_assign};
}

}  // namespace oracle
