#include <doctest.h>

#include <cmath>
#include <random>

#include "laasim/attacks.hpp"
#include "laasim/case_io.hpp"
#include "laasim/errors.hpp"
#include "fixtures.hpp"

using namespace laasim;

using fixture::closed_loop;
using fixture::dense_sweep;
using fixture::random_toy;
using fixture::shipped;

TEST_SUITE("attacks") {
  TEST_CASE("static attack switches on at its start time") {
    const GridCase c = shipped("ieee39");
    const BusIndex idx = index_buses(c);
    const auto nominal = nominal_loads(c, idx);
    SlaaSpec s{{4, 20}, {0.2, 0.5}, 30.0};
    CHECK(slaa_inject(s, idx, nominal, 29.99).isZero());
    const Vector eps = slaa_inject(s, idx, nominal, 30.0);
    CHECK(eps(idx.load_of_bus.at(4)) == doctest::Approx(0.2 * nominal[idx.load_of_bus.at(4)]));
    CHECK(eps(idx.load_of_bus.at(20)) == doctest::Approx(0.5 * nominal[idx.load_of_bus.at(20)]));
    CHECK(eps.sum() == doctest::Approx(0.2 * nominal[idx.load_of_bus.at(4)] + 0.5 * nominal[idx.load_of_bus.at(20)]));
  }

  TEST_CASE("specs naming generator buses or unknown buses are rejected") {
    const GridCase c = shipped("ieee39");
    const BusIndex idx = index_buses(c);
    CHECK_THROWS_AS(validate(SlaaSpec{{30}, {0.1}, 30.0}, idx), ConfigError);
    CHECK_THROWS_AS(validate(SlaaSpec{{4, 20}, {0.1}, 30.0}, idx), ConfigError);
    DlaaSpec d;
    d.buses = {4};
    d.gains = {-1.0};
    CHECK_THROWS_AS(validate(d, idx, 10), ConfigError);
    d.gains = {1.0};
    d.sensed_generator = 10;
    CHECK_THROWS_AS(validate(d, idx, 10), ConfigError);
  }

  TEST_CASE("dynamic attack pushes load against the sensed deviation") {
    const GridCase c = shipped("ieee39");
    const BusIndex idx = index_buses(c);
    DlaaSpec d;
    d.buses = {4};
    d.gains = {2.0};
    const Vector eps = dlaa_inject(d, idx, -0.1, 31.0);
    CHECK(eps(idx.load_of_bus.at(4)) == doctest::Approx(0.2));
    CHECK(dlaa_inject(d, idx, -0.1, 10.0).isZero());
    d.unit = GainUnit::PerRadPerSecond;
    CHECK(dlaa_gain_vector(d, idx)(idx.load_of_bus.at(4)) == doctest::Approx(2.0 * 2.0 * M_PI));
  }

  TEST_CASE("saturation at the vulnerable share") {
    const Vector raw = (Vector(3) << 5.0, -5.0, 0.1).finished();
    const Vector out = saturate(raw, {2.0, 2.0, 2.0}, {0.5, 1.0, 1.0});
    CHECK(out(0) == doctest::Approx(1.0));
    CHECK(out(1) == doctest::Approx(-2.0));
    CHECK(out(2) == doctest::Approx(0.1));
  }

  TEST_CASE("closed-loop matrix matches a direct construction") {
    const GridCase c = shipped("ieee39");
    const LinearPlant p = build_plant(c, PlantOptions{true});
    const BusIndex idx = index_buses(c);
    const Vector w = inertia_weights(c);
    const std::vector<int> t = {idx.load_of_bus.at(4), idx.load_of_bus.at(20)};
    Vector gains = Vector::Zero(p.n_load);
    for (int l : t) gains(l) = 1.3;
    CHECK(dlaa_plant_matrix(p, gains, w).isApprox(closed_loop(p, t, 1.3, w), 1e-12));
  }

  TEST_CASE("single-machine critical gain is 2 pi (d + kp)") {
    const GridCase c = shipped("two_bus");
    const LinearPlant p = build_plant(c);
    const auto cg = predict_critical_gain(p, {0}, inertia_weights(c), 50.0);
    CHECK_FALSE(cg.stable_throughout);
    const double exact = 2.0 * M_PI * (c.generators[0].d + c.generators[0].kp);
    CHECK(std::abs(cg.k_crit - exact) <= 1e-3);
    CHECK(cg.table.size() == 21);
  }

  TEST_CASE("critical gain matches a dense eigenvalue sweep") {
    for (const char* name : {"three_bus", "two_bus"}) {
      GridCase c = shipped(name);
      const LinearPlant p = build_plant(c);
      const Vector w = inertia_weights(c);
      const auto cg = predict_critical_gain(p, {0}, w, 100.0);
      CHECK(std::abs(cg.k_crit - dense_sweep(p, {0}, w, 100.0)) <= 1e-3);
    }
    std::mt19937 rng(21);
    for (int trial = 0; trial < 5; ++trial) {
      const GridCase c = random_toy(rng);
      const LinearPlant p = build_plant(c);
      const Vector w = inertia_weights(c);
      const auto cg = predict_critical_gain(p, {0, 1}, w, 100.0);
      CHECK(std::abs(cg.k_crit - dense_sweep(p, {0, 1}, w, 100.0)) <= 1e-3);
    }
  }

  TEST_CASE("abscissa sign predicts simulated divergence") { CHECK(fixture::abscissa_sign_agreement(20, 5) == 20); }

  TEST_CASE("agent holds its last sample") {
    const GridCase c = shipped("ieee39");
    const BusIndex idx = index_buses(c);
    DlaaSpec spec;
    spec.buses = {4};
    spec.gains = {1.0};
    spec.start_s = 0.0;
    DlaaAgent agent(spec, c, idx);
    CHECK(agent.injection(1.0).isZero());
    FrequencySample fs;
    fs.system_dev_hz = -0.2;
    fs.gen_dev_hz.assign(10, -0.2);
    agent.on_sample(fs);
    const double first = agent.injection(1.0)(idx.load_of_bus.at(4));
    CHECK(first == doctest::Approx(0.2));
    CHECK(agent.injection(5.0)(idx.load_of_bus.at(4)) == doctest::Approx(first));
  }
}
