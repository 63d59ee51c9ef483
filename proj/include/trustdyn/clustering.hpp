#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "trustdyn/rng.hpp"
#include "trustdyn/trust_model.hpp"

// Trajectory features and the k-means machinery that turns them into the
// three trust-dynamics archetypes.

namespace trustdyn {

struct LengthMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct TooFewPoints : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct AmbiguousLabeling : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Archetype : std::uint8_t { BDM = 0, Disbeliever = 1, Oscillator = 2 };

inline const char* archetype_name(Archetype a) {
    switch (a) {
        case Archetype::BDM: return "BDM";
        case Archetype::Disbeliever: return "disbeliever";
        case Archetype::Oscillator: return "oscillator";
    }
    return "?";
}

inline Archetype archetype_from_name(const std::string& s) {
    if (s == "BDM") return Archetype::BDM;
    if (s == "disbeliever") return Archetype::Disbeliever;
    if (s == "oscillator") return Archetype::Oscillator;
    throw std::invalid_argument("unknown archetype: " + s);
}

// The two clustering variables: how much the agent trusted on average, and
// how far the reports strayed from the model's predictions.
struct TrajectoryFeatures {
    double avg_log_trust = 0.0;
    double rmse = 0.0;
};

inline TrajectoryFeatures compute_features(const TrustTrajectory& traj,
                                           const std::vector<double>& predictions) {
    if (traj.reports.size() != predictions.size())
        throw LengthMismatch("compute_features: reports/predictions length mismatch");
    if (traj.reports.empty())
        throw LengthMismatch("compute_features: empty trajectory");
    const double n = static_cast<double>(traj.reports.size());
    double sum_log = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < traj.reports.size(); ++i) {
        sum_log += std::log(traj.reports[i]);
        const double d = traj.reports[i] - predictions[i];
        sum_sq += d * d;
    }
    return TrajectoryFeatures{sum_log / n, std::sqrt(sum_sq / n)};
}

struct ClusterAssignment {
    int agent_id = 0;
    Archetype label = Archetype::BDM;
    TrajectoryFeatures features;
    double centroid_distance = 0.0;
};

struct KMeansModel {
    int k = 1;
    std::vector<TrajectoryFeatures> centroids;  // standardized space
    double wcss = 0.0;
    int iterations_run = 0;
    std::uint64_t seed = 0;
};

// Per-feature z-scoring. avg_log_trust spans a few log units while rmse
// lives in [0, ~0.3]; unscaled Euclidean distance would let one coordinate
// swamp the other.
struct FeatureScaler {
    double mean_log = 0.0, sd_log = 1.0;
    double mean_rmse = 0.0, sd_rmse = 1.0;

    static FeatureScaler fit(const std::vector<TrajectoryFeatures>& pts) {
        FeatureScaler s;
        const double n = static_cast<double>(pts.size());
        for (const auto& p : pts) { s.mean_log += p.avg_log_trust; s.mean_rmse += p.rmse; }
        s.mean_log /= n;
        s.mean_rmse /= n;
        double v1 = 0.0, v2 = 0.0;
        for (const auto& p : pts) {
            v1 += (p.avg_log_trust - s.mean_log) * (p.avg_log_trust - s.mean_log);
            v2 += (p.rmse - s.mean_rmse) * (p.rmse - s.mean_rmse);
        }
        s.sd_log = std::sqrt(v1 / n);
        s.sd_rmse = std::sqrt(v2 / n);
        if (s.sd_log < 1e-12) s.sd_log = 1.0;
        if (s.sd_rmse < 1e-12) s.sd_rmse = 1.0;
        return s;
    }

    TrajectoryFeatures transform(const TrajectoryFeatures& p) const {
        return {(p.avg_log_trust - mean_log) / sd_log, (p.rmse - mean_rmse) / sd_rmse};
    }
    TrajectoryFeatures inverse(const TrajectoryFeatures& z) const {
        return {z.avg_log_trust * sd_log + mean_log, z.rmse * sd_rmse + mean_rmse};
    }
};

namespace detail {

inline double sqdist(const TrajectoryFeatures& a, const TrajectoryFeatures& b) {
    const double d1 = a.avg_log_trust - b.avg_log_trust;
    const double d2 = a.rmse - b.rmse;
    return d1 * d1 + d2 * d2;
}

}  // namespace detail

struct KMeansRun {
    KMeansModel model;
    std::vector<int> assignments;
};

// Lloyd's algorithm with k-means++ seeding on standardized points.
// Ties in nearest-centroid go to the lowest centroid index; an emptied
// cluster is reseeded at the point farthest from its assigned centroid.
inline KMeansRun kmeans(const std::vector<TrajectoryFeatures>& points, int k,
                        std::uint64_t seed) {
    const std::size_t n = points.size();
    if (k < 1 || n < static_cast<std::size_t>(k))
        throw TooFewPoints("kmeans: need at least k points");
    Rng rng(seed);

    // k-means++ seeding
    std::vector<TrajectoryFeatures> centroids;
    centroids.push_back(points[rng.below(n)]);
    std::vector<double> d2(n);
    while (centroids.size() < static_cast<std::size_t>(k)) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = detail::sqdist(points[i], centroids[0]);
            for (std::size_t c = 1; c < centroids.size(); ++c)
                best = std::min(best, detail::sqdist(points[i], centroids[c]));
            d2[i] = best;
            total += best;
        }
        if (total <= 0.0) {
            centroids.push_back(points[rng.below(n)]);
            continue;
        }
        const double u = rng.uniform01() * total;
        double acc = 0.0;
        std::size_t pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
            acc += d2[i];
            if (u < acc) { pick = i; break; }
        }
        centroids.push_back(points[pick]);
    }

    std::vector<int> assign(n, -1);
    auto assign_all = [&]() {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double bd = detail::sqdist(points[i], centroids[0]);
            for (int c = 1; c < k; ++c) {
                const double d = detail::sqdist(points[i], centroids[c]);
                if (d < bd) { bd = d; best = c; }
            }
            if (assign[i] != best) { assign[i] = best; changed = true; }
        }
        return changed;
    };

    auto wcss_now = [&]() {
        double w = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            w += detail::sqdist(points[i], centroids[assign[i]]);
        return w;
    };

    int iterations = 0;
    assign_all();
    std::vector<TrajectoryFeatures> best_centroids = centroids;
    std::vector<int> best_assign = assign;
    double best_wcss = wcss_now();
    // Strict-progress guard: with duplicate points the mean update can drift
    // by an ulp and assignments ping-pong between equal-cost centroids.
    double prev_wcss = std::numeric_limits<double>::infinity();
    for (; iterations < 300; ++iterations) {
        // repair empty clusters before the mean update
        for (int c = 0; c < k; ++c) {
            if (std::count(assign.begin(), assign.end(), c) > 0) continue;
            std::size_t far = 0;
            double fd = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = detail::sqdist(points[i], centroids[assign[i]]);
                if (d > fd) { fd = d; far = i; }
            }
            if (fd <= 0.0) continue;  // all points sit on centroids; leave empty
            centroids[c] = points[far];
            assign[far] = c;
        }
        std::vector<TrajectoryFeatures> next(k, TrajectoryFeatures{0.0, 0.0});
        std::vector<int> cnt(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            next[assign[i]].avg_log_trust += points[i].avg_log_trust;
            next[assign[i]].rmse += points[i].rmse;
            ++cnt[assign[i]];
        }
        for (int c = 0; c < k; ++c) {
            if (cnt[c] == 0) continue;
            next[c].avg_log_trust /= cnt[c];
            next[c].rmse /= cnt[c];
            centroids[c] = next[c];
        }
        const bool changed = assign_all();
        const double w = wcss_now();
        if (w < best_wcss) {
            best_wcss = w;
            best_centroids = centroids;
            best_assign = assign;
        }
        if (!changed) break;
        if (w >= prev_wcss) break;
        prev_wcss = w;
    }

    KMeansRun run;
    run.model = KMeansModel{k, std::move(best_centroids), best_wcss, iterations, seed};
    run.assignments = std::move(best_assign);
    return run;
}

// Best of several seeded restarts (derived seeds), lowest wcss wins.
inline KMeansRun kmeans_best_of(const std::vector<TrajectoryFeatures>& points, int k,
                                std::uint64_t seed, int restarts = 8) {
    KMeansRun best;
    bool have = false;
    for (int r = 0; r < restarts; ++r) {
        KMeansRun run = kmeans(points, k, derive_seed(seed, static_cast<std::uint64_t>(k) * 97 + r));
        if (!have || run.model.wcss < best.model.wcss) {
            best = std::move(run);
            have = true;
        }
    }
    return best;
}

// Elbow rule: the interior k with the largest perpendicular distance to the
// chord from (1, wcss_1) to (K, wcss_K). Ties break toward smaller k.
inline int elbow_select(const std::vector<double>& wcss_by_k) {
    const std::size_t kmax = wcss_by_k.size();
    if (kmax < 3) throw std::invalid_argument("elbow_select: need wcss for k = 1..K, K >= 3");
    for (std::size_t i = 1; i < kmax; ++i) {
        if (wcss_by_k[i] > wcss_by_k[i - 1] + 1e-9)
            throw std::invalid_argument("elbow_select: wcss sequence not non-increasing");
    }
    const double x1 = 1.0, y1 = wcss_by_k.front();
    const double x2 = static_cast<double>(kmax), y2 = wcss_by_k.back();
    const double norm = std::hypot(y2 - y1, x2 - x1);
    int best_k = 2;
    double best_d = -1.0;
    for (std::size_t k = 2; k < kmax; ++k) {
        const double x0 = static_cast<double>(k), y0 = wcss_by_k[k - 1];
        const double d = std::fabs((y2 - y1) * x0 - (x2 - x1) * y0 + x2 * y1 - y2 * x1) / norm;
        if (d > best_d + 1e-15) {
            best_d = d;
            best_k = static_cast<int>(k);
        }
    }
    return best_k;
}

// Archetype labels from centroid geometry: the high-RMSE centroid holds the
// oscillators; of the other two, the low-trust one holds the disbelievers.
inline std::array<Archetype, 3> label_clusters(const KMeansModel& model) {
    if (model.k != 3) throw std::invalid_argument("label_clusters: requires k = 3");
    constexpr double kTieTol = 1e-12;
    const auto& c = model.centroids;
    int osc = 0;
    for (int i = 1; i < 3; ++i)
        if (c[i].rmse > c[osc].rmse) osc = i;
    for (int i = 0; i < 3; ++i)
        if (i != osc && std::fabs(c[i].rmse - c[osc].rmse) <= kTieTol)
            throw AmbiguousLabeling("label_clusters: tied rmse centroids");
    int rest[2], r = 0;
    for (int i = 0; i < 3; ++i)
        if (i != osc) rest[r++] = i;
    if (std::fabs(c[rest[0]].avg_log_trust - c[rest[1]].avg_log_trust) <= kTieTol)
        throw AmbiguousLabeling("label_clusters: tied avg_log_trust centroids");
    const int dis = (c[rest[0]].avg_log_trust < c[rest[1]].avg_log_trust) ? rest[0] : rest[1];
    const int bdm = (dis == rest[0]) ? rest[1] : rest[0];
    std::array<Archetype, 3> labels{};
    labels[static_cast<std::size_t>(osc)] = Archetype::Oscillator;
    labels[static_cast<std::size_t>(dis)] = Archetype::Disbeliever;
    labels[static_cast<std::size_t>(bdm)] = Archetype::BDM;
    return labels;
}

// Scree curve for k = 1..kmax with best-of restarts per k; monotonicity is
// repaired by reseeding an offending k before giving up.
inline std::vector<double> scan_wcss(const std::vector<TrajectoryFeatures>& points,
                                     int kmax, std::uint64_t seed, int restarts = 8) {
    kmax = std::min<int>(kmax, static_cast<int>(points.size()));
    std::vector<double> wcss;
    for (int k = 1; k <= kmax; ++k) {
        KMeansRun run = kmeans_best_of(points, k, seed, restarts);
        double w = run.model.wcss;
        int attempt = 0;
        while (!wcss.empty() && w > wcss.back() + 1e-9 && attempt < 16) {
            KMeansRun retry =
                kmeans(points, k, derive_seed(seed, 7919ULL * k + 131ULL * attempt));
            w = std::min(w, retry.model.wcss);
            ++attempt;
        }
        wcss.push_back(w);
    }
    return wcss;
}

}  // namespace trustdyn
