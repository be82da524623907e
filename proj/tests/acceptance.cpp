#include <chrono>
#include <cstdio>
#include <exception>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "laasim/catalog.hpp"
#include "laasim/errors.hpp"
#include "laasim/protection.hpp"
#include "laasim/report.hpp"

using namespace laasim;

namespace {

struct Check {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string fmt_time(const std::optional<double>& t) { return t ? fmt("%.2f s", *t) : "never"; }

Check model_equivalence() {
  const auto t0 = Clock::now();
  const double two = fixture::descriptor_vs_reduced(fixture::shipped("two_bus"), 10.0, 0.01);
  const double three = fixture::descriptor_vs_reduced(fixture::shipped("three_bus"), 10.0, 0.01);
  const double wall = seconds_since(t0);
  return {two <= 1e-6 && three <= 1e-6 && wall < 1.0,
          "gap two_bus " + fmt("%.2e", two) + " Hz, three_bus " + fmt("%.2e", three) + " Hz, " + fmt("%.3f s", wall)};
}

Check dlaa_equivalence() {
  const double gap = fixture::dlaa_engine_vs_matrix(0.5 * catalog_critical_gain().k_crit, 20.0);
  return {gap <= 1e-6, "engine vs closed-loop matrix " + fmt("%.2e", gap) + " Hz"};
}

Check stability_bisection() {
  double worst = 0.0;
  auto compare = [&](const GridCase& c, const std::vector<int>& targets) {
    const LinearPlant p = build_plant(c);
    const Vector w = inertia_weights(c);
    const double k = predict_critical_gain(p, targets, w, 100.0).k_crit;
    worst = std::max(worst, std::abs(k - fixture::dense_sweep(p, targets, w, 100.0)));
  };
  compare(fixture::shipped("two_bus"), {0});
  compare(fixture::shipped("three_bus"), {0});
  std::mt19937 rng(21);
  for (int i = 0; i < 5; ++i) compare(fixture::random_toy(rng), {0, 1});
  const int agree = fixture::abscissa_sign_agreement(20, 5);
  return {worst <= 1e-3 && agree == 20,
          "max |bisection - sweep| " + fmt("%.2e", worst) + ", sign agreement " + std::to_string(agree) + "/20"};
}

Check scenario_i() {
  auto t0 = Clock::now();
  const auto primary = run(catalog_scenario("I.1"));
  const double wall1 = seconds_since(t0);
  t0 = Clock::now();
  const auto lfc = run(catalog_scenario("I.2"));
  const double wall2 = seconds_since(t0);
  // Restored: every sample from some instant to the end within 1e-3 Hz.
  std::optional<double> restored;
  for (auto it = lfc.trace.rbegin(); it != lfc.trace.rend(); ++it) {
    if (std::abs(it->f_sys_hz - 60.0) > 1e-3) break;
    restored = it->t;
  }
  const bool pass = std::abs(primary.steady_dev_hz) > 0.01 && restored && *restored < lfc.end_time && wall1 < 10.0 &&
                    wall2 < 10.0;
  return {pass, "I.1 steady " + fmt("%+.4f Hz", primary.steady_dev_hz) + ", I.2 within 1e-3 Hz from " +
                    fmt_time(restored) + ", runtimes " + fmt("%.2f", wall1) + "/" + fmt("%.2f s", wall2)};
}

Check scenario_ii() {
  const auto strong = run(catalog_scenario("II.1"));
  const auto ufls = run(catalog_scenario("II.3"));
  const auto sw = sweep(catalog_scenario("II.5"), "network.controller.delay_ms", {0, 250, 500, 750, 1000, 1500}, 3);
  const bool a = strong.outcome == Outcome::Destabilized;
  const bool b = ufls.outcome == Outcome::OffNominalStable && ufls.ufls_stages >= 1 && ufls.shed_fraction <= 0.28 + 1e-12;
  const bool c = sw.threshold.has_value();
  return {a && b && c, std::string("II.1 ") + to_string(strong.outcome) + "; II.3 " + to_string(ufls.outcome) + " with " +
                           std::to_string(ufls.ufls_stages) + " stages, " + fmt("%.1f%% shed", 100 * ufls.shed_fraction) +
                           "; delay threshold " + (c ? fmt("%.0f ms", *sw.threshold) : std::string("none"))};
}

Check scenario_iii_iv() {
  const auto off = run(catalog_scenario("IV.1"));
  const auto on = run(catalog_scenario("IV.2"));
  const auto sub = run(catalog_scenario("III.3"));
  const bool order = off.destabilized_at && on.destabilized_at && *on.destabilized_at < *off.destabilized_at;
  const bool compliant = sub.outcome != Outcome::Destabilized && !sub.verdict.violated && sub.tail_peak_to_peak_hz > 0.05;
  return {order && compliant, "near-critical violation LFC on " + fmt_time(on.destabilized_at) + " vs off " +
                                  fmt_time(off.destabilized_at) + "; sub-critical LFC+UFLS " + to_string(sub.outcome) +
                                  ", tail p-p " + fmt("%.3f Hz", sub.tail_peak_to_peak_hz)};
}

Check mdlaa_machinery() {
  Matrix one(1, 6);
  one << 1, 2, 3, 4, 5, 6;
  Matrix h1(3, 4);
  h1 << 1, 2, 3, 4, 2, 3, 4, 5, 3, 4, 5, 6;
  Matrix two(2, 4);
  two << 1, 2, 3, 4, 10, 20, 30, 40;
  Matrix h2(4, 3);
  h2 << 1, 2, 3, 10, 20, 30, 2, 3, 4, 20, 30, 40;
  const bool hankel_ok = hankel(one, 3) == h1 && hankel(two, 2) == h2;

  bool bound_ok = false;
  MdlaaConfig cfg;
  cfg.t_a = required_samples(3, cfg.t_ini, cfg.n_ap, 4) - 1;
  try {
    validate(cfg, 3, 4);
  } catch (const ConfigError&) {
    bound_ok = true;
  }

  std::mt19937 rng(2024);
  double kkt = 0.0, eq = 0.0, gap = 0.0;
  for (int i = 0; i < 10; ++i) {
    const auto r = fixture::check_qp_instance(rng, -1.0 - 0.2 * i);
    kkt = std::max(kkt, r.kkt);
    eq = std::max(eq, r.equality);
    gap = std::max({gap, r.vs_gradient, r.vs_exact});
  }
  const bool pass = hankel_ok && bound_ok && kkt <= 1e-6 && eq <= 1e-8 && gap <= 1e-5;
  return {pass, std::string("hankel ") + (hankel_ok ? "exact" : "wrong") + ", T_a bound " +
                    (bound_ok ? "enforced" : "not enforced") + ", max KKT " + fmt("%.1e", kkt) + ", max equality " +
                    fmt("%.1e", eq) + ", max oracle gap " + fmt("%.1e", gap)};
}

Check scenario_v_vi() {
  Scenario low = catalog_scenario("V.1");
  low.attack.mdlaa.budget_fraction = 0.1;
  const auto weak = run(low);
  const bool failed = !weak.verdict.violated && weak.mdlaa && weak.mdlaa->status == "exhausted";
  const auto full = run(catalog_scenario("VI.3"));
  const auto off = run(catalog_scenario("VI.1"));
  const auto on = run(catalog_scenario("VI.2"));
  const bool strong = full.outcome == Outcome::Destabilized;
  const bool order = off.destabilized_at && on.destabilized_at && *on.destabilized_at >= *off.destabilized_at;
  return {failed && strong && order,
          "budget 0.1 " + std::string(weak.mdlaa ? weak.mdlaa->status : "n/a") + " (" + to_string(weak.outcome) +
              "); VI.3 " + to_string(full.outcome) + "; violation LFC on " + fmt_time(on.destabilized_at) +
              " vs off " + fmt_time(off.destabilized_at)};
}

Check determinism() {
  bool same = true;
  for (const char* id : {"III.6", "II.5"}) {
    const Scenario s = catalog_scenario(id);
    std::ostringstream a, b;
    write_trace_csv(run(s), a);
    write_trace_csv(run(s), b);
    same = same && a.str() == b.str() && !a.str().empty();
  }
  return {same, same ? "III.6 and II.5 traces byte-identical" : "traces differ"};
}

Check grid_code() {
  auto trace = [](double f, double seconds, double dt) {
    return std::vector<double>(static_cast<std::size_t>(std::lround(seconds / dt)), f);
  };
  const bool a = judge_trace(trace(57.2, 31.0, 0.1), 0.1).violated;
  const bool b = !judge_trace(trace(59.0, 7200.0, 1.0), 1.0).violated;
  const bool b_scaled = !judge_trace(trace(59.0, 120.0, 0.1), 0.1, default_grid_code(30.0, 3.0)).violated;
  const bool c = judge_trace(trace(56.9, 0.1, 0.1), 0.1).violated;
  return {a && b && b_scaled && c, std::string("57.2 Hz/31 s ") + (a ? "violated" : "compliant") + ", 59.0 Hz/2 h " +
                                       (b && b_scaled ? "compliant" : "violated") + ", 56.9 Hz instant " +
                                       (c ? "violated" : "compliant")};
}

Check channel_loss() {
  std::string detail;
  bool pass = true;
  for (double p : {0.05, 0.2, 0.5}) {
    Channel ch(NetProfile{0.0, 0.0, p, 42});
    const int n = 10000;
    Frame f;
    f.payload = FrequencySample{};
    for (int i = 0; i < n; ++i) ch.send(f, i * 0.1);
    const double sigma = std::sqrt(n * p * (1.0 - p));
    const double z = (static_cast<double>(ch.stats().dropped) - n * p) / sigma;
    pass = pass && std::abs(z) <= 3.0;
    detail += (detail.empty() ? "" : ", ") + fmt("p=%.2f", p) + fmt(" z=%+.2f", z);
  }
  return {pass, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Check()>>> criteria = {
      {"model equivalence", model_equivalence},
      {"DLAA matrix vs agent", dlaa_equivalence},
      {"stability bisection", stability_bisection},
      {"scenario I pair", scenario_i},
      {"scenario II ladder", scenario_ii},
      {"scenario III/IV ordering", scenario_iii_iv},
      {"MDLAA machinery", mdlaa_machinery},
      {"scenario V/VI contrast", scenario_v_vi},
      {"determinism", determinism},
      {"grid-code monitor", grid_code},
      {"channel statistics", channel_loss},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += v.pass ? 0 : 1;
    std::printf("[%s] %2zu %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
