#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <random>

#include "imr/baselines.hpp"
#include "imr/engine.hpp"
#include "test_support.hpp"

using namespace imr;

namespace {

const std::vector<double> kX = {6, 10, 9.6, 8.3, 7.7, 5.4, 5.6, 5.9, 6.3, 6.8, 7.5, 8.5};
const std::map<std::size_t, double> kLabels = {
    {1, 6.0}, {2, 5.6}, {3, 5.4}, {6, 5.4}, {12, 8.5}};

} // namespace

TEST_CASE("candidate generation applies the displacement model", "[engine]") {
    const TimeSeries x(kX);
    const RepairState state = init_repair_state(x, LabeledSeries(kLabels));

    SECTION("worked example with phi = 0.5") {
        const CandidateSet set =
            generate_candidates(x, state, ModelParams{{0.5}}, 0.1);
        REQUIRE(set.size() == 1);
        CHECK(set.candidates[0].index == 4);
        CHECK(set.candidates[0].value == Catch::Approx(6.2).margin(1e-12));
        // Position 5's proposal equals its current value and is filtered out.
    }

    SECTION("phi = 0 on an untouched state is a fixed point") {
        const RepairState plain = init_repair_state(x, LabeledSeries{});
        const CandidateSet set =
            generate_candidates(x, plain, ModelParams{{0.0}}, 0.1);
        CHECK(set.empty());
    }

    SECTION("order-2 proposal, hand-expanded") {
        const TimeSeries obs({1.0, 1.0, 10.0});
        const RepairState st =
            init_repair_state(obs, LabeledSeries({{1, 3.0}, {2, 5.0}}));
        // Displacements before t = 3 are (2, 4); phi = (0.5, 0.25) gives
        // 0.5*4 + 0.25*2 + 10 = 12.5.
        const CandidateSet set =
            generate_candidates(obs, st, ModelParams{{0.5, 0.25}}, 0.1);
        REQUIRE(set.size() == 1);
        CHECK(set.candidates[0].index == 3);
        CHECK(set.candidates[0].value == Catch::Approx(12.5).margin(1e-12));
    }

    SECTION("candidates exclude labels and the first p positions") {
        std::mt19937_64 eng(311);
        for (int rep = 0; rep < 20; ++rep) {
            const auto inst = testsupport::random_instance(eng, 25, 0.3, false);
            const TimeSeries obs(inst.dirty);
            const LabeledSeries lbl{std::map<std::size_t, double>(inst.labels)};
            const RepairState st = init_repair_state(obs, lbl);
            const std::size_t p = 1 + eng() % 3;
            ModelParams phi;
            for (std::size_t i = 0; i < p; ++i) {
                phi.phi.push_back(testsupport::uniform(eng, -1.0, 1.0));
            }
            const double tau = 0.05;
            for (const Candidate& c : generate_candidates(obs, st, phi, tau).candidates) {
                REQUIRE(c.index > p);
                REQUIRE_FALSE(st.labeled(c.index));
                REQUIRE(std::fabs(c.value - st.at(c.index)) > tau);
            }
        }
    }
}

TEST_CASE("minimum repair selection", "[engine]") {
    const TimeSeries x(kX);

    SECTION("single candidate is the minimum") {
        CandidateSet set;
        set.candidates.push_back({4, 6.2});
        const auto chosen = select_minimum_repair(set, x);
        REQUIRE(chosen.has_value());
        CHECK(chosen->index == 4);
        CHECK(chosen->value == 6.2);
    }

    SECTION("empty set selects nothing") {
        CHECK_FALSE(select_minimum_repair(CandidateSet{}, x).has_value());
    }

    SECTION("closest to its observation wins") {
        // Distances: |5.0 - 9.6| = 4.6 at position 3, |5.6 - 5.9| = 0.3 at 8.
        CandidateSet set;
        set.candidates.push_back({3, 5.0});
        set.candidates.push_back({8, 5.6});
        const auto chosen = select_minimum_repair(set, x);
        REQUIRE(chosen.has_value());
        CHECK(chosen->index == 8);
    }

    SECTION("ties break to the smallest index") {
        // Dyadic values so both distances are exactly 0.5.
        const TimeSeries tie_x({0.0, 0.0, 1.0, 2.0});
        CandidateSet set;
        set.candidates.push_back({3, 1.5});
        set.candidates.push_back({4, 2.5});
        const auto chosen = select_minimum_repair(set, tie_x);
        REQUIRE(chosen.has_value());
        CHECK(chosen->index == 3);
    }
}

TEST_CASE("convergence check", "[engine]") {
    const std::vector<double> a = {1.0, 1.0};
    CHECK(converged(a, a, 0.0));
    CHECK_FALSE(converged(a, std::vector<double>{1.0, 1.2}, 0.1));
    CHECK(converged(a, std::vector<double>{1.05, 0.95}, 0.1));
    CHECK_THROWS_AS(converged(a, std::vector<double>{1.0}, 0.1), InputError);
}

TEST_CASE("worked example repair", "[engine]") {
    const TimeSeries x(kX);
    const LabeledSeries labels(kLabels);
    RepairConfig cfg;
    cfg.order = 1;
    cfg.tau = 0.1;

    const RepairResult result = imr_repair(x, labels, cfg);
    CHECK(result.converged);
    CHECK(result.iterations <= 10);
    CHECK(result.at(4) == Catch::Approx(5.20).margin(0.01));
    CHECK(result.at(5) == Catch::Approx(5.39).margin(0.01));
    for (const auto& [t, v] : labels.entries()) {
        CHECK(result.at(t) == v);
    }
    // The untouched clean stretch keeps its observations.
    for (std::size_t t : {7, 8, 9, 10, 11}) {
        CHECK(result.at(t) == x.at(t));
    }
    // First pass estimates the published parameter.
    REQUIRE_FALSE(result.phi_trace.empty());
    CHECK(result.phi_trace[0].phi[0] == Catch::Approx(0.5).margin(1e-3));
}

TEST_CASE("degenerate labelings terminate immediately", "[engine]") {
    const TimeSeries x(kX);
    RepairConfig cfg;
    cfg.order = 1;
    cfg.tau = 0.1;

    SECTION("everything labeled") {
        LabeledSeries labels;
        for (std::size_t t = 1; t <= x.size(); ++t) {
            labels.set(t, x.at(t) + 1.0);
        }
        const RepairResult result = imr_repair(x, labels, cfg);
        CHECK(result.converged);
        CHECK(result.changes.empty());
        for (std::size_t t = 1; t <= x.size(); ++t) {
            CHECK(result.at(t) == x.at(t) + 1.0);
        }
    }

    SECTION("no labels at all") {
        const RepairResult result = imr_repair(x, LabeledSeries{}, cfg);
        CHECK(result.converged);
        CHECK(result.changes.empty());
        CHECK(result.values == kX);
    }

    SECTION("n <= p rejected") {
        RepairConfig bad = cfg;
        bad.order = 8;
        CHECK_THROWS_AS(imr_repair(TimeSeries({1, 2, 3}), LabeledSeries{}, bad),
                        InputError);
    }
}

TEST_CASE("hitting the iteration cap is reported honestly", "[engine]") {
    const TimeSeries x(kX);
    RepairConfig cfg;
    cfg.order = 1;
    cfg.tau = 0.1;
    cfg.max_iterations = 1; // the worked example needs several passes
    const RepairResult result = imr_repair(x, LabeledSeries(kLabels), cfg);
    CHECK_FALSE(result.converged);
    CHECK(result.iterations == 1);
    CHECK(result.changes.size() == 1);
}

TEST_CASE("trace invariants hold on random instances", "[engine]") {
    std::mt19937_64 eng(515);
    for (int rep = 0; rep < 25; ++rep) {
        const std::size_t n = 15 + eng() % 30;
        const auto inst = testsupport::random_instance(eng, n, 0.25, false);
        const TimeSeries x(inst.dirty);
        const LabeledSeries labels{std::map<std::size_t, double>(inst.labels)};
        RepairConfig cfg;
        cfg.order = 1 + eng() % 2;
        if (n <= cfg.order) {
            continue;
        }
        cfg.tau = 0.1;
        cfg.max_iterations = 5000;

        const RepairResult result = imr_repair(x, labels, cfg);

        // Every accepted repair passed the significance filter at its time.
        for (const RepairChange& c : result.changes) {
            REQUIRE(std::fabs(c.repaired - c.previous) > cfg.tau);
            REQUIRE_FALSE(labels.contains(c.index));
            REQUIRE(c.index > cfg.order);
        }
        for (const auto& [t, v] : labels.entries()) {
            REQUIRE(result.at(t) == v);
        }
        // One change per pass: the trace never outruns the iteration count.
        REQUIRE(result.changes.size() + (result.converged ? 1 : 0) ==
                result.iterations);
    }
}

TEST_CASE("backends produce identical repair traces", "[engine]") {
    std::mt19937_64 eng(616);
    for (int rep = 0; rep < 15; ++rep) {
        const std::size_t n = 20 + eng() % 40;
        const auto inst = testsupport::random_instance(eng, n, 0.3, false);
        const TimeSeries x(inst.dirty);
        const LabeledSeries labels{std::map<std::size_t, double>(inst.labels)};

        RepairConfig cfg;
        cfg.order = 1 + eng() % 3;
        cfg.tau = 0.1;
        cfg.max_iterations = 5000;

        cfg.backend = Backend::full;
        const RepairResult full = imr_repair(x, labels, cfg);
        cfg.backend = Backend::pruned;
        const RepairResult pruned = imr_repair(x, labels, cfg);
        cfg.backend = Backend::incremental;
        const RepairResult inc = imr_repair(x, labels, cfg);

        REQUIRE(pruned.changes.size() == full.changes.size());
        REQUIRE(inc.changes.size() == full.changes.size());
        for (std::size_t k = 0; k < full.changes.size(); ++k) {
            REQUIRE(pruned.changes[k].index == full.changes[k].index);
            REQUIRE(inc.changes[k].index == full.changes[k].index);
            REQUIRE(pruned.changes[k].repaired ==
                    Catch::Approx(full.changes[k].repaired).margin(1e-9));
            REQUIRE(inc.changes[k].repaired ==
                    Catch::Approx(full.changes[k].repaired).margin(1e-9));
        }
        REQUIRE(inc.converged == full.converged);
    }
}

TEST_CASE("static parameter mode", "[engine]") {
    const TimeSeries x(kX);
    const LabeledSeries labels(kLabels);

    SECTION("phi = 0 never changes a point") {
        RepairConfig cfg;
        cfg.order = 1;
        cfg.tau = 0.1;
        const RepairResult result = imr_repair_static(x, labels, cfg, ModelParams{{0.0}});
        CHECK(result.converged);
        CHECK(result.changes.empty());
    }

    SECTION("static IMR(1) equals one-pass ARX(1)") {
        std::mt19937_64 eng(717);
        for (int rep = 0; rep < 40; ++rep) {
            const std::size_t n = 15 + eng() % 40;
            const auto inst = testsupport::random_instance(eng, n, 0.25, true);
            const TimeSeries obs(inst.dirty);
            const LabeledSeries lbl{std::map<std::size_t, double>(inst.labels)};
            const double phi1 = testsupport::uniform(eng, -0.9, 0.9);
            const double tau = (rep % 2 == 0) ? 0.0 : 0.1;

            RepairConfig cfg;
            cfg.order = 1;
            cfg.tau = tau;
            cfg.max_iterations = 10 * n;
            const RepairResult iterative =
                imr_repair_static(obs, lbl, cfg, ModelParams{{phi1}});
            REQUIRE(iterative.converged);

            const std::vector<double> one_pass =
                arx_repair(obs, lbl, 1, tau, ModelParams{{phi1}});
            for (std::size_t i = 0; i < n; ++i) {
                REQUIRE(iterative.values[i] == Catch::Approx(one_pass[i]).margin(1e-9));
            }
        }
    }

    SECTION("contractive static parameter converges before the cap") {
        std::mt19937_64 eng(818);
        for (int rep = 0; rep < 20; ++rep) {
            const std::size_t n = 15 + eng() % 40;
            const auto inst = testsupport::random_instance(eng, n, 0.25, false);
            const TimeSeries obs(inst.dirty);
            const LabeledSeries lbl{std::map<std::size_t, double>(inst.labels)};
            RepairConfig cfg;
            cfg.order = 1;
            cfg.tau = 0.05;
            cfg.max_iterations = 10 * n;
            const double phi1 = testsupport::uniform(eng, -0.95, 0.95);
            const RepairResult result =
                imr_repair_static(obs, lbl, cfg, ModelParams{{phi1}});
            REQUIRE(result.converged);
            REQUIRE(result.iterations < cfg.max_iterations);
        }
    }
}
