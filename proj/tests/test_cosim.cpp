#include <doctest.h>

#include <cmath>
#include <set>

#include "laasim/case_io.hpp"
#include "laasim/catalog.hpp"
#include "laasim/cosim.hpp"
#include "laasim/errors.hpp"
#include "fixtures.hpp"

using namespace laasim;

namespace {

Scenario quiet(const std::string& case_ref, double duration) {
  Scenario s;
  s.id = "quiet";
  s.case_ref = case_ref;
  s.duration_s = duration;
  return s;
}

double max_abs_dev(const ScenarioResult& r, double from = 0.0) {
  double m = 0.0;
  for (const auto& row : r.trace)
    if (row.t >= from) m = std::max(m, std::abs(row.f_sys_hz - 60.0));
  return m;
}

}  // namespace

TEST_SUITE("cosim") {
  TEST_CASE("no attack with secondary control stays at nominal") {
    Scenario s = quiet("ieee39", 120.0);
    s.lfc.enabled = true;
    const auto r = run(s);
    CHECK(max_abs_dev(r) <= 1e-3);
    CHECK(r.outcome == Outcome::Stable);
    CHECK_FALSE(r.verdict.violated);
  }

  TEST_CASE("secondary control removes a load step offset") {
    Scenario s = quiet("ieee39", 300.0);
    s.disturbances.push_back({4, 0.3, 10.0, {}});
    const auto primary = run(s);
    CHECK(primary.outcome == Outcome::OffNominalStable);
    CHECK(primary.steady_dev_hz < -0.01);
    s.lfc.enabled = true;
    const auto lfc = run(s);
    CHECK(std::abs(lfc.steady_dev_hz) <= 1e-3);
    CHECK(lfc.outcome == Outcome::Stable);
  }

  TEST_CASE("continuous dynamic attack follows the closed-loop linear model") {
    CHECK(fixture::dlaa_engine_vs_matrix(0.5 * catalog_critical_gain().k_crit, 20.0) <= 1e-6);
  }

  TEST_CASE("identical seeds give identical runs") {
    const Scenario s = catalog_scenario("III.6");
    const auto a = run(s);
    const auto b = run(s);
    REQUIRE(a.trace.size() == b.trace.size());
    bool same = true;
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
      same = same && a.trace[i].f_sys_hz == b.trace[i].f_sys_hz && a.trace[i].setpoint_pu == b.trace[i].setpoint_pu;
    }
    CHECK(same);
    CHECK(a.uplink.dropped == b.uplink.dropped);
    CHECK(a.uplink.dropped > 0);

    Scenario other = s;
    override_seeds(other, 999);
    CHECK(run(other).uplink.dropped != a.uplink.dropped);
  }

  TEST_CASE("outcome agrees with the verdict") {
    for (const char* id : {"I.1", "II.1", "II.3", "II.4"}) {
      const auto r = run(catalog_scenario(id));
      CHECK((r.outcome == Outcome::Destabilized) == r.destabilized_at.has_value());
      if (r.verdict.violated) {
        CHECK(r.outcome == Outcome::Destabilized);
        CHECK(*r.destabilized_at == doctest::Approx(r.verdict.time));
      }
      if (r.outcome == Outcome::Stable) CHECK(std::abs(r.steady_dev_hz) <= 0.01);
      CHECK(r.shed_fraction <= 0.28 + 1e-12);
    }
  }

  TEST_CASE("invalid configuration fails before the first step") {
    Scenario s = quiet("ieee39", 10.0);
    s.dt_s = -1.0;
    CHECK_THROWS_AS(run(s), ConfigError);
  }

  TEST_CASE("catalog shape") {
    const auto cat = scenario_catalog();
    REQUIRE(cat.size() == 6);
    std::size_t variants = 0;
    std::set<std::string> ids;
    for (const auto& sc : cat) {
      variants += sc.variants.size();
      for (const auto& v : sc.variants) {
        CHECK(v.id.rfind(sc.id + ".", 0) == 0);
        ids.insert(v.id);
        CHECK_NOTHROW(validate(v, scenario_case(v)));
      }
    }
    CHECK(variants >= 24);
    CHECK(ids.size() == variants);

    const Scenario ii3 = catalog_scenario("II.3");
    CHECK(ii3.attack.kind == AttackKind::Slaa);
    CHECK(ii3.ufls.enabled);
    CHECK_FALSE(ii3.lfc.enabled);
    CHECK(ii3.attack.slaa.buses == std::vector<int>{4, 20});

    const Scenario iii3 = catalog_scenario("III.3");
    CHECK(iii3.attack.kind == AttackKind::Dlaa);
    CHECK(iii3.lfc.enabled);
    CHECK(iii3.ufls.enabled);
    CHECK(iii3.attack.dlaa.buses == std::vector<int>{4, 20});
    CHECK(catalog_scenario("IV.1").attack.dlaa.gains[0] > iii3.attack.dlaa.gains[0]);

    for (const char* id : {"V.1", "VI.3"}) {
      const Scenario m = catalog_scenario(id);
      CHECK(m.attack.kind == AttackKind::Mdlaa);
      CHECK(m.attack.mdlaa.buses.empty());
    }
    CHECK(catalog_scenario("VI.1").attack.mdlaa.budget_fraction > catalog_scenario("V.1").attack.mdlaa.budget_fraction);
  }

  TEST_CASE("explicit catalog gains override the multiples") {
    CatalogOptions opt;
    opt.gain_iii = 0.3;
    CHECK(catalog_scenario("III.1", opt).attack.dlaa.gains == std::vector<double>{0.3, 0.3});
  }
}
