#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "imr/baselines.hpp"
#include "imr/evalkit.hpp"
#include "test_support.hpp"

using namespace imr;

namespace {

const std::vector<double> kX = {6, 10, 9.6, 8.3, 7.7, 5.4, 5.6, 5.9, 6.3, 6.8, 7.5, 8.5};
const std::map<std::size_t, double> kLabels = {
    {1, 6.0}, {2, 5.6}, {3, 5.4}, {6, 5.4}, {12, 8.5}};
const std::vector<double> kTruth = {6, 5.6, 5.4, 5.2, 5.4, 5.4, 5.6, 5.9, 6.3, 6.8, 7.5, 8.5};

} // namespace

TEST_CASE("AR(1) repair on the worked example", "[baselines]") {
    const TimeSeries x(kX);
    const LabeledSeries labels(kLabels);

    const std::vector<double> y = ar_repair(x, labels, 1, 0.1);

    // The published one-pass AR result, displayed to two decimals.
    const std::vector<double> published = {6, 5.6, 5.4, 5.52, 5.64, 5.4,
                                           5.6, 5.72, 5.84, 5.97, 6.10, 8.5};
    REQUIRE(y.size() == published.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        CHECK(y[i] == Catch::Approx(published[i]).margin(0.05));
    }
    CHECK(rms(TimeSeries(kTruth), y) == Catch::Approx(0.51).margin(0.05));
}

TEST_CASE("AR edge behavior", "[baselines]") {
    const TimeSeries x(kX);
    const LabeledSeries labels(kLabels);

    SECTION("infinite threshold accepts nothing") {
        const std::vector<double> y =
            ar_repair(x, labels, 1, std::numeric_limits<double>::max());
        const RepairState substituted = init_repair_state(x, labels);
        CHECK(y == substituted.values());
    }

    SECTION("all points labeled returns the labels") {
        LabeledSeries all;
        for (std::size_t t = 1; t <= x.size(); ++t) {
            all.set(t, x.at(t) - 0.5);
        }
        const std::vector<double> y = ar_repair(x, all, 1, 0.1);
        const RepairState substituted = init_repair_state(x, all);
        CHECK(y == substituted.values());
    }
}

TEST_CASE("ARX(1) repair on the worked example", "[baselines]") {
    const TimeSeries x(kX);
    const LabeledSeries labels(kLabels);

    SECTION("learned parameter") {
        // OLS over the displacements: num = (-4.4)(-4.2), den = 4.4^2 + 4.2^2.
        const double phi = (4.4 * 4.2) / (4.4 * 4.4 + 4.2 * 4.2);
        const double y4 = 8.3 + phi * (5.4 - 9.6);
        const double y5 = 7.7 + phi * (y4 - 8.3);

        const std::vector<double> y = arx_repair(x, labels, 1, 0.1);
        CHECK(y[3] == Catch::Approx(y4).margin(1e-9));
        CHECK(y[4] == Catch::Approx(y5).margin(1e-9));
        CHECK(y[3] == Catch::Approx(6.2).margin(0.01));
        CHECK(y[4] == Catch::Approx(6.65).margin(0.01));
        for (std::size_t i : {0, 1, 2, 5, 6, 7, 8, 9, 10, 11}) {
            CHECK(y[i] == init_repair_state(x, labels).values()[i]);
        }
    }

    SECTION("supplied parameter reproduces the published digits exactly") {
        const std::vector<double> y =
            arx_repair(x, labels, 1, 0.1, ModelParams{{0.5}});
        CHECK(y[3] == Catch::Approx(6.20).margin(1e-6));
        CHECK(y[4] == Catch::Approx(6.65).margin(1e-6));
        CHECK(rms(TimeSeries(kTruth), y) == Catch::Approx(0.49).margin(0.05));
    }

    SECTION("supplied zero parameter changes nothing") {
        const std::vector<double> y =
            arx_repair(x, labels, 1, 0.1, ModelParams{{0.0}});
        CHECK(y == init_repair_state(x, labels).values());
    }
}

TEST_CASE("EWMA smoothing", "[baselines]") {
    SECTION("alpha = 1 is the identity") {
        const TimeSeries x(kX);
        CHECK(ewma(x, 1.0) == kX);
    }

    SECTION("constant series is a fixed point") {
        const TimeSeries x({3.5, 3.5, 3.5, 3.5});
        const std::vector<double> s = ewma(x, 0.3);
        for (double v : s) {
            CHECK(v == Catch::Approx(3.5).margin(1e-12));
        }
    }

    SECTION("one recurrence step") {
        const TimeSeries x({0.0, 10.0});
        CHECK(ewma(x, 0.5) == std::vector<double>{0.0, 5.0});
    }

    SECTION("weight out of range") {
        const TimeSeries x({1.0, 2.0});
        CHECK_THROWS_AS(ewma(x, 0.0), InputError);
        CHECK_THROWS_AS(ewma(x, 1.5), InputError);
        CHECK_THROWS_AS(ewma(x, -0.1), InputError);
    }

    SECTION("config form validates and delegates") {
        const TimeSeries x({0.0, 10.0});
        SmootherConfig cfg;
        cfg.alpha = 0.5;
        cfg.window = 2;
        CHECK(ewma(x, cfg) == ewma(x, 0.5));
        CHECK(sma(x, cfg) == sma(x, std::size_t{2}));
        cfg.alpha = 2.0;
        CHECK_THROWS_AS(ewma(x, cfg), InputError);
    }
}

TEST_CASE("SMA smoothing", "[baselines]") {
    SECTION("window of one is the identity") {
        const TimeSeries x(kX);
        CHECK(sma(x, 1) == kX);
    }

    SECTION("constant series is a fixed point") {
        const TimeSeries x({2.0, 2.0, 2.0});
        CHECK(sma(x, 2) == std::vector<double>{2.0, 2.0, 2.0});
    }

    SECTION("trailing means by hand") {
        const TimeSeries x({1.0, 2.0, 3.0, 4.0});
        CHECK(sma(x, 2) == std::vector<double>{1.0, 1.5, 2.5, 3.5});
    }

    SECTION("zero window rejected") {
        CHECK_THROWS_AS(sma(TimeSeries({1.0}), 0), InputError);
    }
}

TEST_CASE("label preservation asymmetry", "[baselines]") {
    const TimeSeries x(kX);
    const LabeledSeries labels(kLabels);

    SECTION("model-based repairers keep every label") {
        for (const auto& y : {ar_repair(x, labels, 1, 0.1),
                              arx_repair(x, labels, 1, 0.1)}) {
            for (const auto& [t, v] : labels.entries()) {
                REQUIRE(y[t - 1] == v);
            }
        }
    }

    SECTION("smoothers overwrite labeled truth") {
        // Position 2 is labeled 5.6; both smoothers drag it toward the dirty
        // neighborhood instead.
        const std::vector<double> e = ewma(x, 0.5);
        const std::vector<double> s = sma(x, 3);
        CHECK(e[1] != kLabels.at(2));
        CHECK(s[1] != kLabels.at(2));
    }
}

TEST_CASE("model repairers touch only significant unlabeled points", "[baselines]") {
    std::mt19937_64 eng(919);
    for (int rep = 0; rep < 25; ++rep) {
        const std::size_t n = 15 + eng() % 40;
        const auto inst = testsupport::random_instance(eng, n, 0.3, false);
        const TimeSeries x(inst.dirty);
        const LabeledSeries labels{std::map<std::size_t, double>(inst.labels)};
        const std::size_t p = 1 + eng() % 2;
        const double tau = 0.1;
        const std::vector<double> base = init_repair_state(x, labels).values();

        std::size_t unlabeled = 0;
        for (std::size_t t = 1; t <= n; ++t) {
            if (!labels.contains(t)) {
                ++unlabeled;
            }
        }
        for (const auto& y : {ar_repair(x, labels, p, tau),
                              arx_repair(x, labels, p, tau)}) {
            std::size_t modified = 0;
            for (std::size_t t = 1; t <= n; ++t) {
                if (y[t - 1] != base[t - 1]) {
                    REQUIRE_FALSE(labels.contains(t));
                    ++modified;
                }
            }
            REQUIRE(modified <= unlabeled);
        }
    }
}
