#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "laasim/catalog.hpp"
#include "laasim/report.hpp"

using namespace laasim;

namespace {

ScenarioResult short_run() {
  Scenario s = catalog_scenario("II.3");
  s.duration_s = 40.0;
  return run(s);
}

int count(const std::string& text, const std::string& needle) {
  int n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_SUITE("report") {
  TEST_CASE("trace CSV schema") {
    const auto r = short_run();
    const auto cols = trace_columns(r);
    REQUIRE(cols.size() == 2 + 10 + 4);
    CHECK(cols.front() == "t_s");
    CHECK(cols[1] == "f_sys_hz");
    CHECK(cols[2] == "f_bus30_hz");
    CHECK(cols.back() == "shed_pct");

    std::ostringstream os;
    write_trace_csv(r, os);
    std::istringstream in(os.str());
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) {
      CHECK(count(line, ",") == static_cast<int>(cols.size()) - 1);
      ++rows;
    }
    CHECK(rows == static_cast<int>(r.trace.size()) + 1);
  }

  TEST_CASE("plot carries all six band edges") {
    const std::string svg = frequency_svg(short_run(), "II.3");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(count(svg, "class=\"band\"") == 6);
  }

  TEST_CASE("scenario hash is stable and content-sensitive") {
    const Scenario s = catalog_scenario("I.1");
    const auto h = scenario_hash(s);
    CHECK(h == scenario_hash(catalog_scenario("I.1")));
    Scenario t = s;
    t.duration_s += 1.0;
    CHECK(scenario_hash(t) != h);
    CHECK(hex64(0x1234) == "0000000000001234");
    CHECK(hex64(h).size() == 16);
  }

  TEST_CASE("manifest lists the seeds and version") {
    Scenario s = catalog_scenario("III.6");
    override_seeds(s, 40);
    const auto m = make_manifest(s);
    CHECK(m.seeds == std::vector<std::uint64_t>{40, 41, 42, 43});
    const auto j = manifest_json(m);
    CHECK(j.at("tool_version") == kToolVersion);
    CHECK(j.at("scenario_hash") == hex64(scenario_hash(s)));
  }

  TEST_CASE("outputs land in the target directory") {
    Scenario s = catalog_scenario("II.3");
    s.duration_s = 40.0;
    const auto r = run(s);
    const auto dir = std::filesystem::temp_directory_path() / "laasim_report_test";
    std::filesystem::remove_all(dir);
    const auto paths = write_outputs(s, r, dir, true, 0.5);
    for (const auto& p : {paths.trace, paths.events, paths.plot, paths.manifest}) CHECK(std::filesystem::exists(p));
    std::ifstream events(paths.events);
    const auto j = nlohmann::json::parse(events);
    CHECK(j.at("outcome") == to_string(r.outcome));
    std::filesystem::remove_all(dir);
  }
}
