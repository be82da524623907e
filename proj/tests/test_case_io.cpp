#include <doctest.h>

#include <cmath>
#include <string>

#include "laasim/case_io.hpp"
#include "laasim/errors.hpp"

using namespace laasim;
using nlohmann::json;

namespace {

json two_bus_doc() {
  return json::parse(R"({
    "name": "t", "nominal_hz": 60, "base_mva": 100,
    "areas": [{"id": 1, "name": "A"}],
    "buses": [{"id": 1, "area": 1}, {"id": 2, "area": 1}],
    "branches": [{"from": 1, "to": 2, "b": 5.0}],
    "generators": [{"bus": 1, "m": 2.0, "d": 1.0, "kp": 3.0, "alpha": 1.0}],
    "loads": [{"bus": 2, "p_mw": 50, "vulnerable": 0.5}]
  })");
}

std::string error_of(const json& doc) {
  try {
    case_from_json(doc, "doc");
  } catch (const CaseError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("case_io") {
  TEST_CASE("shipped 39-bus case is valid") {
    const GridCase c = load_case(resolve_case_path("ieee39"));
    CHECK(validate(c).empty());
    CHECK(c.buses.size() == 39);
    CHECK(c.generators.size() == 10);
    CHECK(c.areas.size() == 3);
    const BusIndex idx = index_buses(c);
    CHECK(idx.n_load() == 29);
    CHECK(idx.is_load_bus(4));
    CHECK(idx.is_load_bus(20));
    CHECK(total_nominal_load(c) == doctest::Approx(51.4103).epsilon(1e-6));
  }

  TEST_CASE("units are converted at the file boundary") {
    const GridCase c = case_from_json(two_bus_doc(), "doc");
    CHECK(c.buses[1].load == doctest::Approx(0.5));
    CHECK(c.buses[1].vulnerable == doctest::Approx(0.5));
    // Gains in the file are pu/Hz; the model keeps pu per rad/s.
    CHECK(c.generators[0].d == doctest::Approx(1.0 / (2.0 * M_PI)));
    CHECK(c.generators[0].kp == doctest::Approx(3.0 / (2.0 * M_PI)));
    CHECK(c.generators[0].m == doctest::Approx(2.0));
  }

  TEST_CASE("inertia constant becomes M = 2H / (2 pi f0)") {
    json doc = two_bus_doc();
    doc["generators"][0].erase("m");
    doc["generators"][0]["h_s"] = 5.0;
    const GridCase c = case_from_json(doc, "doc");
    CHECK(c.generators[0].m == doctest::Approx(10.0 / (2.0 * M_PI * 60.0)));
  }

  TEST_CASE("reactance is converted to series susceptance") {
    json doc = two_bus_doc();
    doc["branches"][0] = {{"from", 1}, {"to", 2}, {"x", 0.1}, {"r", 0.02}};
    const GridCase c = case_from_json(doc, "doc");
    const double z2 = 0.02 * 0.02 + 0.1 * 0.1;
    CHECK(c.branches[0].b == doctest::Approx(0.1 / z2));
    CHECK(c.branches[0].g == doctest::Approx(0.02 / z2));
  }

  TEST_CASE("primary gain defaults to the droop gain") {
    json doc = two_bus_doc();
    doc["generators"][0].erase("kp");
    doc["generators"][0]["droop_r"] = 4.0;
    const GridCase c = case_from_json(doc, "doc");
    CHECK(c.generators[0].kp == doctest::Approx(4.0 / (2.0 * M_PI)));
  }

  TEST_CASE("schema errors name the JSON path") {
    json doc = two_bus_doc();
    doc["generators"][0]["m"] = "heavy";
    CHECK(error_of(doc).find("generators[0].m") != std::string::npos);

    doc = two_bus_doc();
    doc["branches"][0]["colour"] = "red";
    CHECK(error_of(doc).find("colour") != std::string::npos);

    doc = two_bus_doc();
    doc["branches"][0]["x"] = 0.1;
    CHECK_FALSE(error_of(doc).empty());

    doc = two_bus_doc();
    doc.erase("buses");
    CHECK(error_of(doc).find("buses") != std::string::npos);
  }

  TEST_CASE("syntax errors carry line and column") {
    try {
      parse_json_text("{\n  \"a\": 1,\n  oops\n}", "f.json");
      FAIL("expected a parse error");
    } catch (const CaseError& e) {
      CHECK(std::string(e.what()).find("f.json:3:") != std::string::npos);
    }
  }

  TEST_CASE("invariant violations are all reported") {
    GridCase c = case_from_json(two_bus_doc(), "doc");
    c.generators[0].alpha = 0.9;
    c.branches.push_back({1, 7, 1.0, 0.0});
    c.buses[1].vulnerable = 1.5;
    const auto problems = validate(c);
    CHECK(problems.size() == 3);
    std::string all;
    for (const auto& p : problems) all += p + "\n";
    CHECK(all.find("participation factors sum to 0.9") != std::string::npos);
    CHECK(all.find("dangling endpoint") != std::string::npos);
    CHECK(all.find("vulnerable") != std::string::npos);
    CHECK_THROWS_AS(require_valid(c), CaseError);
  }

  TEST_CASE("load on a generator bus is rejected") {
    GridCase c = case_from_json(two_bus_doc(), "doc");
    c.buses[0].load = 0.1;
    CHECK_FALSE(validate(c).empty());
  }

  TEST_CASE("case documents round-trip") {
    const GridCase a = load_case(resolve_case_path("ieee39"));
    const GridCase b = case_from_json(case_to_json(a), "rt");
    REQUIRE(a.generators.size() == b.generators.size());
    for (std::size_t i = 0; i < a.generators.size(); ++i) {
      CHECK(a.generators[i].m == doctest::Approx(b.generators[i].m));
      CHECK(a.generators[i].kp == doctest::Approx(b.generators[i].kp));
      CHECK(a.generators[i].lag.t_turb == doctest::Approx(b.generators[i].lag.t_turb));
    }
    for (std::size_t i = 0; i < a.branches.size(); ++i) CHECK(a.branches[i].b == doctest::Approx(b.branches[i].b));
    CHECK(total_nominal_load(a) == doctest::Approx(total_nominal_load(b)));
  }

  TEST_CASE("unknown case names are reported") {
    CHECK_THROWS_AS(resolve_case_path("no_such_case"), CaseError);
  }
}
