#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "imr/errors.hpp"
#include "imr/series.hpp"

namespace imr {

/**
 * @brief Seeded Gaussian sampler: mt19937_64 bits mapped to uniforms by hand
 * and fed through Box-Muller.
 *
 * std::normal_distribution is implementation-defined, so it cannot back a
 * byte-reproducibility guarantee; this generator produces the same stream on
 * every platform. Identity string: "mt19937_64/box-muller".
 */
class GaussianSampler {
public:
    explicit GaussianSampler(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double next(double mean, double stddev) { return mean + stddev * standard(); }

    double standard() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // u1 in (0, 1] keeps the log finite.
        const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = uniform01();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * 3.14159265358979323846 * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    static const char* identity() { return "mt19937_64/box-muller"; }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Root-mean-square distance between the ground truth and a repair.
inline double rms(const TimeSeries& truth, std::span<const double> repair) {
    if (truth.size() != repair.size()) {
        throw InputError("truth and repair differ in length: " +
                         std::to_string(truth.size()) + " vs " +
                         std::to_string(repair.size()));
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < repair.size(); ++i) {
        const double d = truth.values()[i] - repair[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(truth.size()));
}

enum class ErrorKind { shift, innovational, spike };

inline const char* to_string(ErrorKind k) {
    switch (k) {
    case ErrorKind::shift: return "shift";
    case ErrorKind::innovational: return "innovational";
    case ErrorKind::spike: return "spike";
    }
    return "?";
}

/**
 * @brief One synthetic error window.
 *
 * shift adds N(amount, variance) per point; innovational adds
 * amount * decay^(i - start) plus N(0, variance); spike is a shift of
 * length 1. Everything outside [start, start+length-1] stays bit-identical.
 */
struct ErrorSpec {
    ErrorKind kind = ErrorKind::shift;
    std::size_t start = 1;   ///< 1-based window start
    std::size_t length = 1;  ///< consecutive error count
    double amount = 3.0;     ///< mean magnitude
    double variance = 0.1;   ///< Gaussian variance
    double decay = 0.8;      ///< geometric factor for innovational, in (0, 1)
    std::uint64_t seed = 0;
};

struct Injection {
    TimeSeries dirty;
    std::vector<std::size_t> error_indices; ///< 1-based, ascending
};

inline Injection inject_errors(const TimeSeries& truth, const ErrorSpec& spec) {
    const std::size_t n = truth.size();
    if (spec.length < 1) {
        throw InputError("error window length must be >= 1");
    }
    if (spec.kind == ErrorKind::spike && spec.length != 1) {
        throw InputError("spike errors have length exactly 1");
    }
    if (spec.start < 1 || spec.start > n || spec.length > n - spec.start + 1) {
        throw InputError("error window starting at " + std::to_string(spec.start) +
                         " of length " + std::to_string(spec.length) +
                         " falls outside [1, " + std::to_string(n) + "]");
    }
    if (!(spec.variance >= 0.0)) {
        throw InputError("variance must be >= 0");
    }
    if (spec.kind == ErrorKind::innovational &&
        !(spec.decay > 0.0 && spec.decay < 1.0)) {
        throw InputError("innovational decay must lie in (0, 1)");
    }

    GaussianSampler rng(spec.seed);
    const double sigma = std::sqrt(spec.variance);

    std::vector<double> dirty = truth.values();
    std::vector<std::size_t> mask;
    mask.reserve(spec.length);
    for (std::size_t k = 0; k < spec.length; ++k) {
        const std::size_t t = spec.start + k;
        double offset = 0.0;
        switch (spec.kind) {
        case ErrorKind::shift:
        case ErrorKind::spike:
            offset = rng.next(spec.amount, sigma);
            break;
        case ErrorKind::innovational:
            offset = spec.amount * std::pow(spec.decay, static_cast<double>(k)) +
                     rng.next(0.0, sigma);
            break;
        }
        dirty[t - 1] += offset;
        mask.push_back(t);
    }
    return Injection{TimeSeries(std::move(dirty)), std::move(mask)};
}

enum class LabelingMode { uniform, prefix };

inline const char* to_string(LabelingMode m) {
    return m == LabelingMode::uniform ? "uniform" : "prefix";
}

struct LabelingPolicy {
    double rate = 0.1;
    std::uint64_t seed = 0;
    LabelingMode mode = LabelingMode::uniform;
};

/**
 * @brief Draw labels carrying the truth value. Uniform mode labels each
 * position independently with probability rate; prefix mode labels the first
 * ceil(rate * n) positions. Error positions are not treated specially.
 */
inline LabeledSeries sample_labels(const TimeSeries& truth,
                                   const std::vector<std::size_t>& error_mask,
                                   const LabelingPolicy& policy) {
    (void)error_mask; // sampling is rate-based, independent of error location
    if (!(policy.rate >= 0.0 && policy.rate <= 1.0)) {
        throw InputError("labeling rate must lie in [0, 1]");
    }
    const std::size_t n = truth.size();
    LabeledSeries labels;
    if (policy.mode == LabelingMode::prefix) {
        const std::size_t ell =
            static_cast<std::size_t>(std::ceil(policy.rate * static_cast<double>(n)));
        for (std::size_t t = 1; t <= ell; ++t) {
            labels.set(t, truth.at(t));
        }
        return labels;
    }
    GaussianSampler rng(policy.seed);
    for (std::size_t t = 1; t <= n; ++t) {
        if (rng.uniform01() < policy.rate) {
            labels.set(t, truth.at(t));
        }
    }
    return labels;
}

/**
 * @brief Synthetic clean series standing in for the sensor datasets: a level
 * with two superimposed cycles and mild Gaussian jitter.
 */
inline TimeSeries generate_truth(std::size_t n, std::uint64_t seed) {
    if (n < 1) {
        throw InputError("series length must be >= 1");
    }
    GaussianSampler rng(seed);
    std::vector<double> values(n);
    constexpr double kTwoPi = 2.0 * 3.14159265358979323846;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i + 1);
        values[i] = 10.0 + 2.0 * std::sin(kTwoPi * t / 200.0) +
                    0.5 * std::sin(kTwoPi * t / 37.0) + rng.next(0.0, 0.05);
    }
    return TimeSeries(std::move(values));
}

} // namespace imr
