#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "trustdyn/special.hpp"
#include "trustdyn/trust_model.hpp"

// Per-agent parameter fitting. MLE for agents with a full trust history,
// MAP against a cohort prior for a new agent observed mid-task. All searches
// run in log-parameter space: positivity for free, and the bounded simplex
// never needs a constraint handler.

namespace trustdyn {

struct InsufficientCohort : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Search box in log space. Brackets every plausible parameter with two
// orders of magnitude of margin.
struct ParamBounds {
    static constexpr double kLoAlpha = 1e-2, kHiAlpha = 1e4;
    static constexpr double kLoGain = 1e-3, kHiGain = 1e2;

    static std::array<double, 4> log_lo() {
        return {std::log(kLoAlpha), std::log(kLoAlpha), std::log(kLoGain), std::log(kLoGain)};
    }
    static std::array<double, 4> log_hi() {
        return {std::log(kHiAlpha), std::log(kHiAlpha), std::log(kHiGain), std::log(kHiGain)};
    }
};

struct FitResult {
    TrustParams params;
    double objective_value = 0.0;  // log-likelihood (MLE) or log-posterior (MAP)
    int n_restarts_used = 0;
    bool converged = false;
    bool degenerate = false;  // one-sided outcome history
};

// Independent Gaussians on ln(theta), summarized from a cohort of fitted
// parameter sets.
struct CohortPrior {
    std::array<double, 4> log_mean{};
    std::array<double, 4> log_sd{};
    int cohort_size = 0;

    TrustParams mode() const {
        return TrustParams{std::exp(log_mean[0]), std::exp(log_mean[1]),
                           std::exp(log_mean[2]), std::exp(log_mean[3])};
    }

    double log_density(const std::array<double, 4>& log_theta) const {
        double lp = 0.0;
        for (int j = 0; j < 4; ++j) {
            const double z = (log_theta[j] - log_mean[j]) / log_sd[j];
            lp += -std::log(log_sd[j]) - 0.5 * std::log(2.0 * M_PI) - 0.5 * z * z;
        }
        return lp;
    }
};

inline CohortPrior fit_prior(const std::vector<TrustParams>& cohort) {
    if (cohort.size() < 2)
        throw InsufficientCohort("fit_prior: need at least 2 cohort members");
    constexpr double kSdFloor = 1e-3;
    CohortPrior prior;
    prior.cohort_size = static_cast<int>(cohort.size());
    const double n = static_cast<double>(cohort.size());
    for (int j = 0; j < 4; ++j) {
        double mean = 0.0;
        for (const auto& p : cohort) {
            const double v = (j == 0) ? p.alpha0 : (j == 1) ? p.beta0
                             : (j == 2) ? p.gain_success : p.gain_failure;
            mean += std::log(v);
        }
        mean /= n;
        double var = 0.0;
        for (const auto& p : cohort) {
            const double v = (j == 0) ? p.alpha0 : (j == 1) ? p.beta0
                             : (j == 2) ? p.gain_success : p.gain_failure;
            const double d = std::log(v) - mean;
            var += d * d;
        }
        var /= n;  // population convention
        prior.log_mean[j] = mean;
        prior.log_sd[j] = std::max(std::sqrt(var), kSdFloor);
    }
    return prior;
}

namespace detail {

// Precomputed sufficient structure for the trajectory log-likelihood.
// alpha_i = alpha0 + s_i * ws depends on the trial only through the prefix
// success count, so the lgamma(alpha_i) sum collapses to one term per
// distinct count; same for beta. Only the lgamma(alpha_i + beta_i) sum
// stays per-trial.
class TrajectoryLikelihood {
public:
    TrajectoryLikelihood(const std::vector<double>& reports,
                         const std::vector<Outcome>& outcomes) {
        n_ = reports.size();
        scount_.resize(n_);
        fcount_.resize(n_);
        int s = 0, f = 0;
        sum_lt_ = sum_l1t_ = sum_s_lt_ = sum_f_l1t_ = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            if (outcomes[i] == Outcome::Success) ++s; else ++f;
            scount_[i] = s;
            fcount_[i] = f;
            const double t = reports[i];
            const double lt = std::log(t);
            const double l1t = std::log1p(-t);
            sum_lt_ += lt;
            sum_l1t_ += l1t;
            sum_s_lt_ += s * lt;
            sum_f_l1t_ += f * l1t;
        }
        n_success_ = s;
        n_failure_ = f;
        cs_.assign(s + 1, 0);
        cf_.assign(f + 1, 0);
        for (std::size_t i = 0; i < n_; ++i) {
            ++cs_[scount_[i]];
            ++cf_[fcount_[i]];
        }
    }

    std::size_t size() const { return n_; }
    int n_success() const { return n_success_; }
    int n_failure() const { return n_failure_; }

    double operator()(const std::array<double, 4>& theta) const {
        const double a0 = theta[0], b0 = theta[1], ws = theta[2], wf = theta[3];
        double ll = (a0 - 1.0) * sum_lt_ + ws * sum_s_lt_ +
                    (b0 - 1.0) * sum_l1t_ + wf * sum_f_l1t_;
        for (int s = 0; s <= n_success_; ++s)
            if (cs_[s] != 0) ll -= cs_[s] * log_gamma(a0 + s * ws);
        for (int f = 0; f <= n_failure_; ++f)
            if (cf_[f] != 0) ll -= cf_[f] * log_gamma(b0 + f * wf);
        for (std::size_t i = 0; i < n_; ++i)
            ll += log_gamma(a0 + scount_[i] * ws + b0 + fcount_[i] * wf);
        return ll;
    }

private:
    std::size_t n_ = 0;
    int n_success_ = 0, n_failure_ = 0;
    std::vector<int> scount_, fcount_, cs_, cf_;
    double sum_lt_ = 0, sum_l1t_ = 0, sum_s_lt_ = 0, sum_f_l1t_ = 0;
};

struct NmResult {
    std::vector<double> x;
    double fval = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Bounded Nelder-Mead (minimization). Proposals are clamped into the box.
// Stable sorting keeps the whole search deterministic.
template <typename F>
NmResult nelder_mead(F&& f, const std::vector<double>& x0,
                     const std::vector<double>& lo, const std::vector<double>& hi,
                     double tol = 1e-6, int max_iter = 2000, double step = 0.25) {
    const std::size_t n = x0.size();
    auto clamp = [&](std::vector<double> x) {
        for (std::size_t i = 0; i < n; ++i) x[i] = std::min(std::max(x[i], lo[i]), hi[i]);
        return x;
    };

    std::vector<std::vector<double>> xs;
    xs.push_back(clamp(x0));
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> x = xs[0];
        x[i] = (x[i] + step <= hi[i]) ? x[i] + step : x[i] - step;
        xs.push_back(clamp(std::move(x)));
    }
    std::vector<double> fs(n + 1);
    for (std::size_t i = 0; i <= n; ++i) fs[i] = f(xs[i]);

    std::vector<std::size_t> order(n + 1);
    NmResult res;
    int it = 0;
    for (; it < max_iter; ++it) {
        for (std::size_t i = 0; i <= n; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
        const std::size_t best = order[0], worst = order[n], second = order[n - 1];
        if (fs[worst] - fs[best] <= tol) {
            res.converged = true;
            break;
        }
        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (std::size_t j = 0; j < n; ++j) centroid[j] += xs[i][j];
        }
        for (std::size_t j = 0; j < n; ++j) centroid[j] /= static_cast<double>(n);

        auto blend = [&](double coef) {
            std::vector<double> x(n);
            for (std::size_t j = 0; j < n; ++j)
                x[j] = centroid[j] + coef * (centroid[j] - xs[worst][j]);
            return clamp(std::move(x));
        };
        const std::vector<double> xr = blend(1.0);
        const double fr = f(xr);
        if (fr < fs[best]) {
            const std::vector<double> xe = blend(2.0);
            const double fe = f(xe);
            if (fe < fr) { xs[worst] = xe; fs[worst] = fe; }
            else         { xs[worst] = xr; fs[worst] = fr; }
        } else if (fr < fs[second]) {
            xs[worst] = xr;
            fs[worst] = fr;
        } else {
            const std::vector<double> xc = blend(-0.5);
            const double fc = f(xc);
            if (fc < fs[worst]) {
                xs[worst] = xc;
                fs[worst] = fc;
            } else {
                for (std::size_t i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    for (std::size_t j = 0; j < n; ++j)
                        xs[i][j] = xs[best][j] + 0.5 * (xs[i][j] - xs[best][j]);
                    xs[i] = clamp(std::move(xs[i]));
                    fs[i] = f(xs[i]);
                }
            }
        }
    }
    res.iterations = it;
    std::size_t best = 0;
    for (std::size_t i = 1; i <= n; ++i)
        if (fs[i] < fs[best]) best = i;
    res.x = xs[best];
    res.fval = fs[best];
    return res;
}

// Shared multistart driver. `objective` maximizes over the full 4-d log
// space; pinned dimensions are held at their fixed value. Starts are a
// 3^d lattice at the quartile points of the box, optionally plus extras.
inline FitResult maximize_over_box(
    const std::function<double(const std::array<double, 4>&)>& objective,
    const std::array<bool, 4>& active, const std::array<double, 4>& pinned_log,
    const std::vector<std::array<double, 4>>& extra_starts) {
    const auto lo4 = ParamBounds::log_lo();
    const auto hi4 = ParamBounds::log_hi();

    std::vector<int> dims;
    for (int j = 0; j < 4; ++j)
        if (active[j]) dims.push_back(j);
    const std::size_t d = dims.size();

    std::vector<double> lo(d), hi(d);
    for (std::size_t k = 0; k < d; ++k) { lo[k] = lo4[dims[k]]; hi[k] = hi4[dims[k]]; }

    auto expand = [&](const std::vector<double>& x) {
        std::array<double, 4> full = pinned_log;
        for (std::size_t k = 0; k < d; ++k) full[dims[k]] = x[k];
        return full;
    };
    auto neg = [&](const std::vector<double>& x) {
        std::array<double, 4> th;
        const auto lg = expand(x);
        for (int j = 0; j < 4; ++j) th[j] = std::exp(lg[j]);
        return -objective(th);
    };

    // quartile lattice
    std::vector<std::vector<double>> starts;
    static constexpr double kFrac[3] = {0.25, 0.5, 0.75};
    std::vector<std::size_t> idx(d, 0);
    for (;;) {
        std::vector<double> x(d);
        for (std::size_t k = 0; k < d; ++k) x[k] = lo[k] + kFrac[idx[k]] * (hi[k] - lo[k]);
        starts.push_back(std::move(x));
        std::size_t k = 0;
        while (k < d && ++idx[k] == 3) idx[k++] = 0;
        if (k == d) break;
    }
    for (const auto& full : extra_starts) {
        std::vector<double> x(d);
        for (std::size_t k = 0; k < d; ++k)
            x[k] = std::min(std::max(full[dims[k]], lo[k]), hi[k]);
        starts.push_back(std::move(x));
    }

    FitResult result;
    result.n_restarts_used = static_cast<int>(starts.size());
    bool have = false, any_converged = false;
    detail::NmResult best;
    for (const auto& s : starts) {
        detail::NmResult r = detail::nelder_mead(neg, s, lo, hi);
        any_converged |= r.converged;
        if (!have || r.fval < best.fval) {
            best = std::move(r);
            have = true;
        }
    }
    const auto lg = expand(best.x);
    result.params = TrustParams{std::exp(lg[0]), std::exp(lg[1]), std::exp(lg[2]),
                                std::exp(lg[3])};
    result.objective_value = -best.fval;
    result.converged = any_converged;
    return result;
}

}  // namespace detail

// Maximum likelihood fit of theta to a full trajectory. A one-sided outcome
// history leaves the corresponding gain out of the likelihood entirely; it
// is pinned at its lower bound and the result flagged.
inline FitResult fit_mle(const TrustTrajectory& traj) {
    traj.validate();
    if (traj.size() == 0)
        throw std::invalid_argument("fit_mle: empty trajectory");
    const detail::TrajectoryLikelihood lik(traj.reports, traj.outcomes);

    std::array<bool, 4> active = {true, true, true, true};
    std::array<double, 4> pinned = {0, 0, std::log(ParamBounds::kLoGain),
                                    std::log(ParamBounds::kLoGain)};
    const bool degenerate = (lik.n_success() == 0 || lik.n_failure() == 0);
    if (lik.n_success() == 0) active[2] = false;
    if (lik.n_failure() == 0) active[3] = false;

    FitResult r = detail::maximize_over_box(
        [&](const std::array<double, 4>& th) { return lik(th); }, active, pinned, {});
    r.degenerate = degenerate;
    return r;
}

// MAP fit for a partially observed agent: reports t_1..t_{m-1} plus the
// detector history. Trailing outcomes beyond the last report only matter
// for prediction, not for the fit, so outcomes may be longer than reports.
// With no reports the posterior is the prior and its mode is returned
// directly.
inline FitResult fit_map(const std::vector<double>& reports,
                         const std::vector<Outcome>& outcomes,
                         const CohortPrior& prior) {
    if (reports.size() > outcomes.size())
        throw std::invalid_argument("fit_map: more reports than outcomes");
    std::array<double, 4> prior_log = prior.log_mean;

    if (reports.empty()) {
        FitResult r;
        r.params = prior.mode();
        r.objective_value = prior.log_density(prior_log);
        r.n_restarts_used = 0;
        r.converged = true;
        return r;
    }

    const std::vector<Outcome> window(outcomes.begin(),
                                      outcomes.begin() + static_cast<long>(reports.size()));
    const detail::TrajectoryLikelihood lik(reports, window);
    auto posterior = [&](const std::array<double, 4>& th) {
        const std::array<double, 4> lg = {std::log(th[0]), std::log(th[1]),
                                          std::log(th[2]), std::log(th[3])};
        return lik(th) + prior.log_density(lg);
    };
    // The prior keeps unobserved gains identified, so nothing is pinned here.
    FitResult r = detail::maximize_over_box(posterior, {true, true, true, true},
                                            {0, 0, 0, 0}, {prior_log});
    r.degenerate = (lik.n_success() == 0 || lik.n_failure() == 0);
    return r;
}

// MAP refit with caller-supplied warm starts instead of the full lattice.
// Used by the trial-by-trial replay where consecutive fits differ by one
// observation and the previous optimum is an excellent start.
inline FitResult fit_map_warm(const std::vector<double>& reports,
                              const std::vector<Outcome>& outcomes,
                              const CohortPrior& prior,
                              const std::vector<TrustParams>& warm_starts) {
    if (reports.empty()) return fit_map(reports, outcomes, prior);
    const std::vector<Outcome> window(outcomes.begin(),
                                      outcomes.begin() + static_cast<long>(reports.size()));
    const detail::TrajectoryLikelihood lik(reports, window);
    auto posterior = [&](const std::array<double, 4>& th) {
        const std::array<double, 4> lg = {std::log(th[0]), std::log(th[1]),
                                          std::log(th[2]), std::log(th[3])};
        return lik(th) + prior.log_density(lg);
    };
    std::vector<std::array<double, 4>> starts;
    starts.push_back(prior.log_mean);
    for (const auto& p : warm_starts)
        starts.push_back({std::log(p.alpha0), std::log(p.beta0),
                          std::log(p.gain_success), std::log(p.gain_failure)});

    // Only the supplied starts: degenerate lattice of none.
    const auto lo4 = ParamBounds::log_lo();
    const auto hi4 = ParamBounds::log_hi();
    std::vector<double> lo(lo4.begin(), lo4.end()), hi(hi4.begin(), hi4.end());
    auto neg = [&](const std::vector<double>& x) {
        std::array<double, 4> th;
        for (int j = 0; j < 4; ++j) th[j] = std::exp(x[j]);
        return -posterior(th);
    };
    FitResult result;
    result.n_restarts_used = static_cast<int>(starts.size());
    bool have = false, any_converged = false;
    detail::NmResult best;
    for (const auto& s : starts) {
        std::vector<double> x(4);
        for (int j = 0; j < 4; ++j) x[j] = std::min(std::max(s[j], lo[j]), hi[j]);
        detail::NmResult r = detail::nelder_mead(neg, x, lo, hi);
        any_converged |= r.converged;
        if (!have || r.fval < best.fval) {
            best = std::move(r);
            have = true;
        }
    }
    result.params = TrustParams{std::exp(best.x[0]), std::exp(best.x[1]),
                                std::exp(best.x[2]), std::exp(best.x[3])};
    result.objective_value = -best.fval;
    result.converged = any_converged;
    result.degenerate = (lik.n_success() == 0 || lik.n_failure() == 0);
    return result;
}

// Log-likelihood of a trajectory under fixed theta (no fitting). Handy for
// comparing objectives across routes.
inline double trajectory_log_likelihood(const TrustTrajectory& traj,
                                        const TrustParams& params) {
    const detail::TrajectoryLikelihood lik(traj.reports, traj.outcomes);
    return lik({params.alpha0, params.beta0, params.gain_success, params.gain_failure});
}

}  // namespace trustdyn
