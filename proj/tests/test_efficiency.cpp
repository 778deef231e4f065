#include <doctest.h>

#include <cmath>

#include "cqwalk/efficiency.hpp"

using namespace cqwalk;

TEST_CASE("detection threshold values") {
    CHECK(detection_threshold(6) == doctest::Approx(1.0 / std::log(6.0)).epsilon(1e-12));
    CHECK(detection_threshold(6) == doctest::Approx(0.5581).epsilon(1e-3));
    CHECK(detection_threshold(3) == doctest::Approx(0.9102).epsilon(1e-3));
    CHECK(detection_threshold(6, 2.0) == doctest::Approx(std::log(2.0) / std::log(6.0)).epsilon(1e-12));
    CHECK_THROWS_AS(detection_threshold(2), std::invalid_argument);
    CHECK_THROWS_AS(detection_threshold(6, 10.0), std::invalid_argument);  // threshold > 1 for n < 10
}

TEST_CASE("first crossing interpolates linearly") {
    Trajectory traj;
    traj.times = {0.0, 1.0, 2.0};
    traj.values = {0.0, 0.4, 0.8};
    auto t = first_crossing(traj, 0.6);
    REQUIRE(t.has_value());
    CHECK(*t == doctest::Approx(1.5).epsilon(1e-12));

    Trajectory flat;
    flat.times = {0.0, 1.0, 2.0};
    flat.values = {0.0, 0.0, 0.0};
    CHECK_FALSE(first_crossing(flat, 0.5).has_value());

    Trajectory high;
    high.times = {3.0, 4.0};
    high.values = {0.9, 0.95};
    auto t0 = first_crossing(high, 0.5);
    REQUIRE(t0.has_value());
    CHECK(*t0 == 3.0);

    CHECK_THROWS_AS(first_crossing(Trajectory{}, 0.5), std::invalid_argument);
}

TEST_CASE("6-cycle endpoint labels") {
    WalkSetup setup = make_cycle(6);
    IntegrationParams params;
    CHECK(label_walk(setup, 0.0, params).label == 1);
    CHECK(label_walk(setup, 1.0, params).label == 0);
}

TEST_CASE("classical crossing time does not depend on p") {
    WalkSetup setup = make_cycle(6);
    IntegrationParams params;
    auto a = label_walk(setup, 0.1, params);
    auto b = label_walk(setup, 0.7, params);
    REQUIRE(a.t_classical.has_value());
    REQUIRE(b.t_classical.has_value());
    CHECK(std::abs(*a.t_classical - *b.t_classical) < 1e-12);
}

TEST_CASE("quantum crossing time regression at p=0.2") {
    // Frozen from a dt=1e-3 reference integration of the same setup.
    WalkSetup setup = make_cycle(6);
    IntegrationParams params;
    auto out = label_walk(setup, 0.2, params);
    REQUIRE(out.t_quantum.has_value());
    CHECK(*out.t_quantum == doctest::Approx(4.60625).epsilon(2e-4));
}

TEST_CASE("sweep finds the single 6-cycle transition") {
    WalkSetup setup = make_cycle(6);
    IntegrationParams params;
    std::vector<double> grid{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
    SweepResult result = sweep_ground_truth(setup, grid, params);
    REQUIRE(result.outcomes.size() == 6);
    CHECK(result.outcomes.front().label == 1);
    CHECK(result.outcomes.back().label == 0);
    CHECK(result.transitions.size() == 1);
    REQUIRE(result.p_star.has_value());
    CHECK(*result.p_star > 0.0);
    CHECK(*result.p_star < 1.0);

    for (const auto& o : result.outcomes) {
        if (o.t_quantum) CHECK(*o.t_quantum <= params.effective_t_max(6));
        CHECK(o.threshold == doctest::Approx(detection_threshold(6)).epsilon(1e-12));
    }
}

TEST_CASE("degenerate sweeps report no crossover") {
    WalkSetup setup = make_cycle(6);
    IntegrationParams params;
    SweepResult single = sweep_ground_truth(setup, {0.0}, params);
    CHECK_FALSE(single.p_star.has_value());

    IntegrationParams no_sink = params;
    no_sink.gamma = 0.0;  // quantum walker never reaches the detector
    SweepResult flat = sweep_ground_truth(setup, {0.0, 0.5, 1.0}, no_sink);
    CHECK_FALSE(flat.p_star.has_value());
    for (const auto& o : flat.outcomes) CHECK(o.label == 0);
}
