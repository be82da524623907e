#include "laasim/report.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "laasim/errors.hpp"

namespace laasim {

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string file_stem(const std::string& id) {
  std::string out = id.empty() ? "scenario" : id;
  for (char& ch : out) {
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '-' || ch == '_')) ch = '_';
  }
  return out;
}

nlohmann::json stats_json(const ChannelStats& s) {
  return {{"sent", s.sent}, {"delivered", s.delivered}, {"dropped", s.dropped}, {"mean_delay_s", s.mean_delay()}};
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text) || !out.flush()) throw Error("cannot write " + path.string());
}

}  // namespace

std::vector<std::string> trace_columns(const ScenarioResult& r) {
  std::vector<std::string> cols = {"t_s", "f_sys_hz"};
  for (int bus : r.gen_buses) cols.push_back("f_bus" + std::to_string(bus) + "_hz");
  for (const char* c : {"load_dev_pu", "attack_pu", "setpoint_pu", "shed_pct"}) cols.emplace_back(c);
  return cols;
}

void write_trace_csv(const ScenarioResult& r, std::ostream& out) {
  const auto cols = trace_columns(r);
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << "\n";
  for (const auto& row : r.trace) {
    out << fmt("%.2f", row.t) << "," << fmt("%.6f", row.f_sys_hz);
    for (double f : row.f_gen_hz) out << "," << fmt("%.6f", f);
    out << "," << fmt("%.6f", row.load_dev_pu) << "," << fmt("%.6f", row.attack_pu) << ","
        << fmt("%.6f", row.setpoint_pu) << "," << fmt("%.4f", row.shed_pct) << "\n";
  }
}

nlohmann::json result_json(const ScenarioResult& r) {
  nlohmann::json j;
  j["id"] = r.id;
  j["outcome"] = to_string(r.outcome);
  j["destabilized_at_s"] = r.destabilized_at ? nlohmann::json(*r.destabilized_at) : nlohmann::json(nullptr);
  j["verdict"] = {{"violated", r.verdict.violated}, {"time_s", r.verdict.time}, {"band", r.verdict.band}};
  j["diverged"] = r.diverged;
  j["end_time_s"] = r.end_time;
  j["steady_dev_hz"] = r.steady_dev_hz;
  j["tail_peak_to_peak_hz"] = r.tail_peak_to_peak_hz;
  j["ufls_stages"] = r.ufls_stages;
  j["shed_fraction"] = r.shed_fraction;
  j["channels"] = {{"uplink", stats_json(r.uplink)},
                   {"downlink", stats_json(r.downlink)},
                   {"attacker", stats_json(r.attacker)}};
  if (r.mdlaa) {
    const auto& m = *r.mdlaa;
    j["mdlaa"] = {{"status", m.status},   {"applied", m.applied}, {"solves", m.solves},
                  {"relaxed", m.relaxed}, {"max_kkt", m.max_kkt}, {"offline_samples", m.offline_samples},
                  {"pe_rank", m.pe_rank}};
  }
  auto& events = j["events"] = nlohmann::json::array();
  for (const auto& e : r.events) events.push_back({{"t_s", e.t}, {"kind", e.kind}, {"detail", e.detail}});
  return j;
}

std::string frequency_svg(const ScenarioResult& r, const std::string& title) {
  const double width = 900, height = 480, left = 70, right = 20, top = 40, bottom = 50;
  const double t_max = r.trace.empty() ? 1.0 : std::max(r.trace.back().t, 1.0);
  double f_lo = 56.5, f_hi = 63.0;
  for (const auto& row : r.trace) {
    f_lo = std::min(f_lo, std::floor(row.f_sys_hz));
    f_hi = std::max(f_hi, std::ceil(row.f_sys_hz));
  }
  f_lo = std::max(f_lo, 40.0);
  f_hi = std::min(f_hi, 80.0);
  auto x = [&](double t) { return left + (width - left - right) * t / t_max; };
  auto y = [&](double f) {
    f = std::clamp(f, f_lo, f_hi);
    return top + (height - top - bottom) * (f_hi - f) / (f_hi - f_lo);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << left << "\" y=\"24\" font-size=\"15\">" << title << "</text>\n";
  svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << width - left - right << "\" height=\""
      << height - top - bottom << "\" fill=\"none\" stroke=\"#444\"/>\n";

  const struct { double f; const char* color; } bands[] = {{57.0, "#c0392b"}, {57.5, "#e67e22"}, {58.8, "#f1c40f"},
                                                           {60.5, "#f1c40f"}, {61.5, "#e67e22"}, {62.5, "#c0392b"}};
  for (const auto& b : bands) {
    if (b.f < f_lo || b.f > f_hi) continue;
    svg << "<line class=\"band\" x1=\"" << left << "\" x2=\"" << width - right << "\" y1=\"" << fmt("%.2f", y(b.f))
        << "\" y2=\"" << fmt("%.2f", y(b.f)) << "\" stroke=\"" << b.color << "\" stroke-dasharray=\"6 4\"/>\n";
    svg << "<text x=\"" << width - right - 40 << "\" y=\"" << fmt("%.2f", y(b.f) - 3) << "\" fill=\"" << b.color
        << "\">" << fmt("%.1f", b.f) << "</text>\n";
  }
  for (double f = std::ceil(f_lo); f <= f_hi; f += 1.0) {
    svg << "<text x=\"" << left - 8 << "\" y=\"" << fmt("%.2f", y(f) + 4) << "\" text-anchor=\"end\">" << fmt("%.0f", f)
        << "</text>\n";
  }
  const double t_step = t_max > 200 ? 50.0 : t_max > 60 ? 20.0 : 5.0;
  for (double t = 0.0; t <= t_max + 1e-9; t += t_step) {
    svg << "<text x=\"" << fmt("%.2f", x(t)) << "\" y=\"" << height - bottom + 18 << "\" text-anchor=\"middle\">"
        << fmt("%.0f", t) << "</text>\n";
  }
  svg << "<text x=\"" << (left + width - right) / 2 << "\" y=\"" << height - 10
      << "\" text-anchor=\"middle\">time (s)</text>\n";
  svg << "<text x=\"16\" y=\"" << (top + height - bottom) / 2 << "\" transform=\"rotate(-90 16 "
      << (top + height - bottom) / 2 << ")\" text-anchor=\"middle\">frequency (Hz)</text>\n";

  svg << "<polyline fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1.5\" points=\"";
  for (const auto& row : r.trace) svg << fmt("%.2f", x(row.t)) << "," << fmt("%.2f", y(row.f_sys_hz)) << " ";
  svg << "\"/>\n";
  if (r.destabilized_at) {
    svg << "<line x1=\"" << fmt("%.2f", x(*r.destabilized_at)) << "\" x2=\"" << fmt("%.2f", x(*r.destabilized_at))
        << "\" y1=\"" << top << "\" y2=\"" << height - bottom << "\" stroke=\"#c0392b\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::uint64_t scenario_hash(const Scenario& s) {
  const std::string text = scenario_to_json(s).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

RunManifest make_manifest(const Scenario& s) {
  RunManifest m;
  m.scenario_id = s.id;
  m.scenario_hash = hex64(scenario_hash(s));
  m.seeds = {s.network.uplink_profile().seed, s.network.downlink_profile().seed, s.network.attacker.seed,
             s.attack.mdlaa.excitation.seed};
  return m;
}

nlohmann::json manifest_json(const RunManifest& m) {
  return {{"tool_version", m.tool_version}, {"scenario_id", m.scenario_id}, {"scenario_hash", m.scenario_hash},
          {"seeds", m.seeds},               {"outputs", m.outputs},         {"wall_clock_s", m.wall_clock_s}};
}

OutputPaths write_outputs(const Scenario& s, const ScenarioResult& r, const std::filesystem::path& dir, bool plot,
                          double wall_clock_s) {
  const std::string stem = file_stem(s.id);
  OutputPaths p{dir / (stem + ".csv"), dir / (stem + ".events.json"), plot ? dir / (stem + ".svg") : "",
                dir / (stem + ".manifest.json")};

  std::ostringstream csv;
  write_trace_csv(r, csv);
  const std::string events = result_json(r).dump(2) + "\n";
  const std::string svg = plot ? frequency_svg(r, s.id + "  " + s.title) : std::string();
  RunManifest m = make_manifest(s);
  m.wall_clock_s = wall_clock_s;
  m.outputs = {p.trace.string(), p.events.string()};
  if (plot) m.outputs.push_back(p.plot.string());
  const std::string manifest = manifest_json(m).dump(2) + "\n";

  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
  write_file(p.trace, csv.str());
  write_file(p.events, events);
  if (plot) write_file(p.plot, svg);
  write_file(p.manifest, manifest);
  return p;
}

nlohmann::json calibration_json(const std::string& case_ref, const std::vector<int>& buses, const CriticalGain& cg) {
  nlohmann::json table = nlohmann::json::array();
  for (const auto& [k, a] : cg.table) table.push_back({{"gain_pu_per_hz", k}, {"abscissa", a}});
  nlohmann::json j = {{"case", case_ref},
                      {"buses", buses},
                      {"stable_throughout", cg.stable_throughout},
                      {"tolerance", cg.tolerance},
                      {"table", table}};
  j["k_crit_pu_per_hz"] = cg.stable_throughout ? nlohmann::json(nullptr) : nlohmann::json(cg.k_crit);
  return j;
}

}  // namespace laasim
