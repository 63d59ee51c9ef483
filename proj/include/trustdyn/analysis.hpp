#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "trustdyn/special.hpp"

// Group-comparison statistics: one-way ANOVA with Bonferroni-corrected
// pairwise post-hoc tests, chi-squared independence, and per-cluster
// summary tables.

namespace trustdyn {

struct DegenerateMargins : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct AnovaResult {
    double f_stat = 0.0;
    int df_between = 0;
    int df_within = 0;
    double p_value = 1.0;
    bool zero_within_variance = false;  // flagged instead of crashing
};

inline AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2)
        throw std::invalid_argument("one_way_anova: need at least 2 groups");
    int n_total = 0;
    double grand = 0.0;
    for (const auto& g : groups) {
        if (g.size() < 2)
            throw std::invalid_argument("one_way_anova: each group needs >= 2 observations");
        for (double v : g) { grand += v; ++n_total; }
    }
    grand /= n_total;

    double ss_between = 0.0, ss_within = 0.0;
    for (const auto& g : groups) {
        double mean = 0.0;
        for (double v : g) mean += v;
        mean /= static_cast<double>(g.size());
        ss_between += static_cast<double>(g.size()) * (mean - grand) * (mean - grand);
        for (double v : g) ss_within += (v - mean) * (v - mean);
    }
    AnovaResult res;
    res.df_between = static_cast<int>(groups.size()) - 1;
    res.df_within = n_total - static_cast<int>(groups.size());
    const double ms_between = ss_between / res.df_between;
    const double ms_within = ss_within / res.df_within;
    if (ms_within <= 0.0) {
        res.zero_within_variance = true;
        res.f_stat = (ms_between > 0.0) ? std::numeric_limits<double>::infinity() : 0.0;
        res.p_value = (ms_between > 0.0) ? 0.0 : 1.0;
        return res;
    }
    res.f_stat = ms_between / ms_within;
    res.p_value = f_sf(res.f_stat, res.df_between, res.df_within);
    return res;
}

struct PairwiseTest {
    int group_a = 0, group_b = 0;
    double t_stat = 0.0;
    int df = 0;
    double raw_p = 1.0;
    double adjusted_p = 1.0;
    bool zero_within_variance = false;
};

// Pooled-variance two-sample t per pair; each raw p is multiplied by the
// number of pairs and capped at 1.
inline std::vector<PairwiseTest> pairwise_bonferroni(
    const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2)
        throw std::invalid_argument("pairwise_bonferroni: need at least 2 groups");
    const int k = static_cast<int>(groups.size());
    const int n_pairs = k * (k - 1) / 2;
    std::vector<PairwiseTest> out;
    for (int a = 0; a < k; ++a) {
        for (int b = a + 1; b < k; ++b) {
            const auto& ga = groups[a];
            const auto& gb = groups[b];
            if (ga.size() < 2 || gb.size() < 2)
                throw std::invalid_argument("pairwise_bonferroni: each group needs >= 2");
            const double na = static_cast<double>(ga.size());
            const double nb = static_cast<double>(gb.size());
            double ma = 0.0, mb = 0.0;
            for (double v : ga) ma += v;
            for (double v : gb) mb += v;
            ma /= na;
            mb /= nb;
            double ssa = 0.0, ssb = 0.0;
            for (double v : ga) ssa += (v - ma) * (v - ma);
            for (double v : gb) ssb += (v - mb) * (v - mb);
            PairwiseTest test;
            test.group_a = a;
            test.group_b = b;
            test.df = static_cast<int>(na + nb) - 2;
            const double sp2 = (ssa + ssb) / test.df;
            if (sp2 <= 0.0) {
                test.zero_within_variance = true;
                const bool differ = (ma != mb);
                test.t_stat = differ ? std::numeric_limits<double>::infinity() : 0.0;
                test.raw_p = differ ? 0.0 : 1.0;
            } else {
                test.t_stat = (ma - mb) / std::sqrt(sp2 * (1.0 / na + 1.0 / nb));
                test.raw_p = t_two_sided_p(test.t_stat, test.df);
            }
            test.adjusted_p = std::min(1.0, test.raw_p * n_pairs);
            out.push_back(test);
        }
    }
    return out;
}

struct ContingencyResult {
    double chi2 = 0.0;
    int df = 0;
    double p_value = 1.0;
};

inline ContingencyResult chi_squared_independence(
    const std::vector<std::vector<int>>& table) {
    const std::size_t rows = table.size();
    if (rows < 2) throw DegenerateMargins("chi_squared: need at least 2 rows");
    const std::size_t cols = table.front().size();
    if (cols < 2) throw DegenerateMargins("chi_squared: need at least 2 columns");
    for (const auto& r : table)
        if (r.size() != cols)
            throw std::invalid_argument("chi_squared: ragged table");

    std::vector<double> row_sum(rows, 0.0), col_sum(cols, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            if (table[i][j] < 0)
                throw std::invalid_argument("chi_squared: negative cell");
            row_sum[i] += table[i][j];
            col_sum[j] += table[i][j];
            total += table[i][j];
        }
    }
    for (double s : row_sum)
        if (s <= 0.0) throw DegenerateMargins("chi_squared: zero row margin");
    for (double s : col_sum)
        if (s <= 0.0) throw DegenerateMargins("chi_squared: zero column margin");

    ContingencyResult res;
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            const double expected = row_sum[i] * col_sum[j] / total;
            const double d = table[i][j] - expected;
            res.chi2 += d * d / expected;
        }
    }
    res.df = static_cast<int>((rows - 1) * (cols - 1));
    res.p_value = chi2_sf(res.chi2, res.df);
    return res;
}

// Sample mean and SD (n-1 denominator); SD is missing for singleton groups.
struct SummaryCell {
    double mean = 0.0;
    std::optional<double> sd;
    int n = 0;
};

inline SummaryCell summarize(const std::vector<double>& values) {
    SummaryCell cell;
    cell.n = static_cast<int>(values.size());
    if (values.empty()) return cell;
    for (double v : values) cell.mean += v;
    cell.mean /= static_cast<double>(values.size());
    if (values.size() >= 2) {
        double ss = 0.0;
        for (double v : values) ss += (v - cell.mean) * (v - cell.mean);
        cell.sd = std::sqrt(ss / (static_cast<double>(values.size()) - 1.0));
    }
    return cell;
}

// Per-cluster (mean, SD) over a dimension matrix: values[agent][dimension],
// one label per agent, cluster count fixed by the caller.
struct SummaryTable {
    std::vector<std::string> dimension_names;
    std::vector<std::vector<SummaryCell>> cells;  // [dimension][cluster]
};

inline SummaryTable summary_table(const std::vector<std::vector<double>>& values,
                                  const std::vector<int>& labels, int n_clusters,
                                  const std::vector<std::string>& dimension_names) {
    if (values.size() != labels.size())
        throw std::invalid_argument("summary_table: values/labels length mismatch");
    const std::size_t n_dims = dimension_names.size();
    for (const auto& row : values)
        if (row.size() != n_dims)
            throw std::invalid_argument("summary_table: ragged value rows");

    SummaryTable table;
    table.dimension_names = dimension_names;
    table.cells.assign(n_dims, std::vector<SummaryCell>(n_clusters));
    for (std::size_t d = 0; d < n_dims; ++d) {
        for (int c = 0; c < n_clusters; ++c) {
            std::vector<double> vals;
            for (std::size_t i = 0; i < values.size(); ++i)
                if (labels[i] == c) vals.push_back(values[i][d]);
            table.cells[d][c] = summarize(vals);
        }
    }
    return table;
}

}  // namespace trustdyn
