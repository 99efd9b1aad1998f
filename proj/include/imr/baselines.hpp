#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "imr/engine.hpp"
#include "imr/errors.hpp"
#include "imr/estimation.hpp"
#include "imr/series.hpp"

namespace imr {

/// Parameters for the smoothing baselines.
struct SmootherConfig {
    double alpha = 0.3;     ///< EWMA weight, in (0, 1]
    std::size_t window = 5; ///< SMA window, >= 1

    void validate() const {
        if (!(alpha > 0.0) || !(alpha <= 1.0)) {
            throw InputError("EWMA weight must lie in (0, 1], got " +
                             std::to_string(alpha));
        }
        if (window < 1) {
            throw InputError("SMA window must be >= 1");
        }
    }
};

namespace detail {

/// OLS over raw sequence values: predict w_t from its p predecessors,
/// rows t = p+1..n, no intercept. Used by the AR baseline, which models the
/// values themselves rather than displacements.
inline ModelParams ols_raw(const std::vector<double>& w, std::size_t p) {
    const std::size_t n = w.size();
    NormalEquations ne;
    ne.p = p;
    ne.n = n;
    ne.a.assign(p * p, 0.0);
    ne.b.assign(p, 0.0);
    for (std::size_t t = p + 1; t <= n; ++t) {
        for (std::size_t i = 1; i <= p; ++i) {
            for (std::size_t j = i; j <= p; ++j) {
                ne.a[(i - 1) * p + (j - 1)] += w[t - 1 - i] * w[t - 1 - j];
            }
            ne.b[i - 1] += w[t - 1 - i] * w[t - 1];
        }
    }
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i + 1; j < p; ++j) {
            ne.a[j * p + i] = ne.a[i * p + j];
        }
    }
    return solve_normal(ne);
}

} // namespace detail

/**
 * @brief One-pass AR(p) repair: substitute labels, learn phi from the raw
 * values by OLS, then sweep left to right accepting predictions that deviate
 * from the observation by more than tau. Repairs feed forward within the
 * sweep.
 */
inline std::vector<double> ar_repair(const TimeSeries& x, const LabeledSeries& labels,
                                     std::size_t p, double tau) {
    validate_order(p);
    const std::size_t n = x.size();
    if (n <= p) {
        throw InputError("need n > p, got n = " + std::to_string(n) +
                         ", p = " + std::to_string(p));
    }
    RepairState state = init_repair_state(x, labels);

    ModelParams params;
    try {
        params = detail::ols_raw(state.values(), p);
    } catch (const SingularSystem&) {
        params.phi.assign(p, 0.0);
    }

    std::vector<double> y = state.values();
    for (std::size_t t = p + 1; t <= n; ++t) {
        if (state.labeled(t)) {
            continue;
        }
        double pred = 0.0;
        for (std::size_t i = 1; i <= p; ++i) {
            pred += params.phi[i - 1] * y[t - 1 - i];
        }
        // Unlabeled positions still hold the raw observation when visited.
        if (std::fabs(pred - x.values()[t - 1]) > tau) {
            y[t - 1] = pred;
        }
    }
    return y;
}

/**
 * @brief One-pass ARX(p) repair: phi learned from the displacements (or
 * supplied), then a left-to-right sweep of the displacement model with the
 * same significance gate against the original observation.
 */
inline std::vector<double> arx_repair(const TimeSeries& x, const LabeledSeries& labels,
                                      std::size_t p, double tau,
                                      const std::optional<ModelParams>& phi = std::nullopt) {
    validate_order(p);
    const std::size_t n = x.size();
    if (n <= p) {
        throw InputError("need n > p, got n = " + std::to_string(n) +
                         ", p = " + std::to_string(p));
    }
    RepairState state = init_repair_state(x, labels);

    ModelParams params;
    if (phi.has_value()) {
        if (phi->order() != p) {
            throw InputError("supplied phi has order " + std::to_string(phi->order()) +
                             ", expected " + std::to_string(p));
        }
        params = *phi;
    } else {
        try {
            params = solve_normal(normal_from_design(
                build_design_matrices(diff(state, x), p, /*prune=*/true)));
        } catch (const SingularSystem&) {
            params.phi.assign(p, 0.0);
        }
    }

    std::vector<double> y = state.values();
    for (std::size_t t = p + 1; t <= n; ++t) {
        if (state.labeled(t)) {
            continue;
        }
        const double pred = detail::arx_predict(x.values(), y, params.phi, t);
        if (std::fabs(pred - x.values()[t - 1]) > tau) {
            y[t - 1] = pred;
        }
    }
    return y;
}

/// Exponentially weighted moving average, s_1 = x_1,
/// s_t = alpha x_t + (1 - alpha) s_{t-1}. Ignores labels entirely.
inline std::vector<double> ewma(const TimeSeries& x, double alpha) {
    if (!(alpha > 0.0) || !(alpha <= 1.0)) {
        throw InputError("EWMA weight must lie in (0, 1], got " + std::to_string(alpha));
    }
    std::vector<double> s(x.size());
    s[0] = x.values()[0];
    for (std::size_t i = 1; i < x.size(); ++i) {
        s[i] = alpha * x.values()[i] + (1.0 - alpha) * s[i - 1];
    }
    return s;
}

/// Simple moving average of the trailing window (shorter at the start).
inline std::vector<double> sma(const TimeSeries& x, std::size_t window) {
    if (window < 1) {
        throw InputError("SMA window must be >= 1");
    }
    std::vector<double> s(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const std::size_t first = (i + 1 > window) ? i + 1 - window : 0;
        double acc = 0.0;
        for (std::size_t k = first; k <= i; ++k) {
            acc += x.values()[k];
        }
        s[i] = acc / static_cast<double>(i - first + 1);
    }
    return s;
}

inline std::vector<double> ewma(const TimeSeries& x, const SmootherConfig& cfg) {
    cfg.validate();
    return ewma(x, cfg.alpha);
}

inline std::vector<double> sma(const TimeSeries& x, const SmootherConfig& cfg) {
    cfg.validate();
    return sma(x, cfg.window);
}

} // namespace imr
