#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "imr/errors.hpp"
#include "imr/series.hpp"

namespace imr {

/// Orders beyond this are rejected: the repair model is only meaningful for
/// small p, and the dense p-by-p solve assumes it.
inline constexpr std::size_t kMaxOrder = 8;

/// Absolute pivot tolerance for the normal-equation solve.
inline constexpr double kPivotTolerance = 1e-12;

/// ARX(p) coefficients phi_1..phi_p (the constant term is fixed to zero).
struct ModelParams {
    std::vector<double> phi;

    std::size_t order() const { return phi.size(); }
};

/**
 * @brief OLS design matrices over a diff sequence.
 *
 * Row r (1-based, unpruned) carries the lag window
 * (z_{p+r-1}, z_{p+r-2}, ..., z_r) with response z_{p+r}; there are n-p rows
 * before pruning. Pruning drops every row whose p lag entries are all exactly
 * zero, together with its response; row_origin keeps each surviving row's
 * original r so the provenance of a pruned fit stays inspectable.
 */
struct DesignMatrices {
    std::size_t p = 0;
    std::size_t n = 0;
    std::vector<double> lags;        ///< row-major, rows() x p
    std::vector<double> response;    ///< rows() x 1
    std::vector<std::size_t> row_origin;

    std::size_t rows() const { return response.size(); }
};

/**
 * @brief The cached quadratic forms A = Z'Z (p x p, symmetric) and B = Z'V.
 *
 * Entries are stored dense row-major; n is carried because the incremental
 * update's range cases depend on the series length.
 */
struct NormalEquations {
    std::size_t p = 0;
    std::size_t n = 0;
    std::vector<double> a; ///< p*p, row-major, a[(i-1)*p + (j-1)] = a_ij
    std::vector<double> b; ///< p

    double at(std::size_t i, std::size_t j) const { return a[(i - 1) * p + (j - 1)]; }
};

/// Instrumentation for the O(1) claim: how many diff-sequence elements one
/// incremental update read (old value, new value, and lag neighbors).
struct UpdateStats {
    std::size_t touched = 0;
};

inline void validate_order(std::size_t p) {
    if (p < 1 || p > kMaxOrder) {
        throw InputError("order p must be in [1, " + std::to_string(kMaxOrder) +
                         "], got " + std::to_string(p));
    }
}

inline DesignMatrices build_design_matrices(const DiffSeries& z, std::size_t p,
                                            bool prune) {
    validate_order(p);
    const std::size_t n = z.size();
    if (n <= p) {
        throw InputError("need n > p lag rows, got n = " + std::to_string(n) +
                         ", p = " + std::to_string(p));
    }

    DesignMatrices d;
    d.p = p;
    d.n = n;
    const std::size_t total_rows = n - p;
    d.lags.reserve(total_rows * p);
    d.response.reserve(total_rows);
    d.row_origin.reserve(total_rows);

    const std::vector<double>& zs = z.diffs;
    for (std::size_t r = 1; r <= total_rows; ++r) {
        // Lag window (z_{p+r-1}, ..., z_r); 0-based start is p+r-2.
        bool all_zero = true;
        for (std::size_t i = 0; i < p; ++i) {
            if (zs[p + r - 2 - i] != 0.0) {
                all_zero = false;
                break;
            }
        }
        if (prune && all_zero) {
            continue;
        }
        for (std::size_t i = 0; i < p; ++i) {
            d.lags.push_back(zs[p + r - 2 - i]);
        }
        d.response.push_back(zs[p + r - 1]);
        d.row_origin.push_back(r);
    }
    return d;
}

inline NormalEquations normal_from_design(const DesignMatrices& d) {
    NormalEquations ne;
    ne.p = d.p;
    ne.n = d.n;
    ne.a.assign(d.p * d.p, 0.0);
    ne.b.assign(d.p, 0.0);

    const std::size_t rows = d.rows();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = &d.lags[r * d.p];
        for (std::size_t i = 0; i < d.p; ++i) {
            for (std::size_t j = i; j < d.p; ++j) {
                ne.a[i * d.p + j] += row[i] * row[j];
            }
            ne.b[i] += row[i] * d.response[r];
        }
    }
    // Mirror the upper triangle; a_ij and a_ji share one defining sum.
    for (std::size_t i = 0; i < d.p; ++i) {
        for (std::size_t j = i + 1; j < d.p; ++j) {
            ne.a[j * d.p + i] = ne.a[i * d.p + j];
        }
    }
    return ne;
}

/**
 * @brief Solve A phi = B by Gaussian elimination with partial pivoting.
 *
 * Throws SingularSystem when the best available pivot falls below
 * kPivotTolerance. p is tiny (<= 8) so a dense direct solve is exact enough
 * and allocation-light.
 */
inline ModelParams solve_normal(const NormalEquations& ne) {
    const std::size_t p = ne.p;
    std::vector<double> m(ne.a);
    std::vector<double> rhs(ne.b);

    for (std::size_t col = 0; col < p; ++col) {
        std::size_t pivot = col;
        double best = std::fabs(m[col * p + col]);
        for (std::size_t row = col + 1; row < p; ++row) {
            const double cand = std::fabs(m[row * p + col]);
            if (cand > best) {
                best = cand;
                pivot = row;
            }
        }
        if (best < kPivotTolerance) {
            throw SingularSystem("normal equations are singular (pivot " +
                                 std::to_string(best) + " below tolerance)");
        }
        if (pivot != col) {
            for (std::size_t j = 0; j < p; ++j) {
                std::swap(m[col * p + j], m[pivot * p + j]);
            }
            std::swap(rhs[col], rhs[pivot]);
        }
        for (std::size_t row = col + 1; row < p; ++row) {
            const double factor = m[row * p + col] / m[col * p + col];
            if (factor == 0.0) {
                continue;
            }
            for (std::size_t j = col; j < p; ++j) {
                m[row * p + j] -= factor * m[col * p + j];
            }
            rhs[row] -= factor * rhs[col];
        }
    }

    ModelParams params;
    params.phi.assign(p, 0.0);
    for (std::size_t row = p; row-- > 0;) {
        double acc = rhs[row];
        for (std::size_t j = row + 1; j < p; ++j) {
            acc -= m[row * p + j] * params.phi[j];
        }
        params.phi[row] = acc / m[row * p + row];
    }
    return params;
}

/**
 * @brief Recompute A, B after a single diff change in constant time.
 *
 * @param ne        normal equations matching z_before
 * @param z_before  the diff sequence BEFORE the change is committed
 * @param r         1-based changed position
 * @param z_r_new   the new diff value at r
 *
 * Every entry sums products of at most two diff values, and a single change
 * at r perturbs at most two terms per entry. Writing [c] for "c holds", the
 * per-entry adjustments are
 *
 *   a_ii += [p+1-i <= r <= n-i] (z_r_new^2 - z_r_old^2)
 *   a_ij += dz * ( [p+1-i <= r <= n-i] z_{r-(j-i)} + [p+1-j <= r <= n-j] z_{r+(j-i)} )
 *   b_i  += dz * ( [p+1   <= r <= n  ] z_{r-i}     + [p+1-i <= r <= n-i] z_{r+i}     )
 *
 * with dz = z_r_new - z_r_old and all neighbor values taken pre-change (they
 * are unchanged by the commit). The two indicator terms reproduce the four
 * range cases of the off-diagonal and B recursions, and remain correct when
 * the case boundaries collapse for small n. Cost is independent of n: only
 * z_r and its p neighbors on each side are read.
 */
inline NormalEquations incremental_update(const NormalEquations& ne,
                                          const DiffSeries& z_before,
                                          std::size_t r, double z_r_new,
                                          UpdateStats* stats = nullptr) {
    const std::size_t p = ne.p;
    const std::size_t n = ne.n;
    validate_order(p);
    if (z_before.size() != n) {
        throw InputError("diff sequence length " + std::to_string(z_before.size()) +
                         " does not match cached n = " + std::to_string(n));
    }
    if (r < 1 || r > n) {
        throw InputError("changed index " + std::to_string(r) + " outside [1, " +
                         std::to_string(n) + "]");
    }
    if (!std::isfinite(z_r_new)) {
        throw InputError("new diff value at position " + std::to_string(r) +
                         " is not finite");
    }

    NormalEquations out = ne;

    // Load z_{r-p}..z_{r+p} once; every adjustment below reads from this
    // window, so the touched-element count is at most 2p+2 regardless of n.
    std::array<double, 2 * kMaxOrder + 1> window{};
    std::size_t touched = 1; // z_r_new itself
    for (std::size_t off = 0; off <= 2 * p; ++off) {
        const std::size_t t = r + off; // t = r + (off - p), guarded below
        if (t >= p + 1 && t <= n + p) {
            window[off] = z_before.diffs[t - p - 1];
            ++touched;
        }
    }
    const auto zv = [&](std::size_t t) { return window[t + p - r]; };

    const double z_old = zv(r);
    const double dz = z_r_new - z_old;

    if (dz != 0.0) {
        // Term with r as the lagged factor exists iff p+1-i <= r <= n-i
        // (equivalently r+i lies in the response range); the term with r as
        // the response factor exists iff p+1 <= r.
        for (std::size_t i = 1; i <= p; ++i) {
            const bool lag_in_range = (r + i >= p + 1) && (r + i <= n);
            const bool resp_in_range = (r >= p + 1);

            if (lag_in_range) {
                out.a[(i - 1) * p + (i - 1)] += z_r_new * z_r_new - z_old * z_old;
            }

            for (std::size_t j = i + 1; j <= p; ++j) {
                const std::size_t gap = j - i;
                double adj = 0.0;
                // r in the lag-j slot, paired with z_{r+gap}:
                // needs p+1-j <= r <= n-j.
                if (r + j >= p + 1 && r + j <= n) {
                    adj += zv(r + gap);
                }
                // r in the lag-i slot, paired with z_{r-gap}:
                // needs p+1-i <= r <= n-i.
                if (r + i >= p + 1 && r + i <= n) {
                    adj += zv(r - gap);
                }
                const double delta = dz * adj;
                out.a[(i - 1) * p + (j - 1)] += delta;
                out.a[(j - 1) * p + (i - 1)] = out.a[(i - 1) * p + (j - 1)];
            }

            double b_adj = 0.0;
            if (resp_in_range) {
                b_adj += zv(r - i); // r-i >= p+1-i >= 1
            }
            if (lag_in_range) {
                b_adj += zv(r + i);
            }
            out.b[i - 1] += dz * b_adj;
        }
    }

    if (stats != nullptr) {
        stats->touched = touched;
    }
    return out;
}

/// Estimation backend for the repair loop.
enum class Backend {
    full,        ///< rebuild unpruned design matrices every iteration
    pruned,      ///< rebuild with all-zero lag rows removed
    incremental, ///< cache A, B and apply the constant-time recursion
};

inline const char* to_string(Backend b) {
    switch (b) {
    case Backend::full: return "full";
    case Backend::pruned: return "pruned";
    case Backend::incremental: return "incremental";
    }
    return "?";
}

/// Normal-equation cache owned by one repair job. The contract with the
/// engine is: call incremental_update against the pre-commit diff sequence,
/// store the result here, then commit the repaired value.
struct EstimationCache {
    std::optional<NormalEquations> ne;
};

/**
 * @brief Estimate phi for the current repair state with the chosen backend.
 *
 * All backends produce the same parameters (the pruned route exactly, the
 * incremental route to rounding). The incremental backend needs @p cache and
 * populates it from pruned matrices the first time around.
 */
inline ModelParams estimate(const TimeSeries& x, const RepairState& state,
                            std::size_t p, Backend backend,
                            EstimationCache* cache = nullptr) {
    validate_order(p);
    switch (backend) {
    case Backend::full:
        return solve_normal(normal_from_design(
            build_design_matrices(diff(state, x), p, /*prune=*/false)));
    case Backend::pruned:
        return solve_normal(normal_from_design(
            build_design_matrices(diff(state, x), p, /*prune=*/true)));
    case Backend::incremental:
        if (cache == nullptr) {
            throw InputError("incremental backend requires an estimation cache");
        }
        if (!cache->ne.has_value()) {
            cache->ne = normal_from_design(
                build_design_matrices(diff(state, x), p, /*prune=*/true));
        }
        return solve_normal(*cache->ne);
    }
    throw InputError("unknown estimation backend");
}

} // namespace imr
