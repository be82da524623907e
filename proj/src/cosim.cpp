#include "laasim/cosim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include "laasim/attacks.hpp"
#include "laasim/controllers.hpp"
#include "laasim/errors.hpp"

namespace laasim {

const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::Stable: return "stable";
    case Outcome::OffNominalStable: return "off-nominal-stable";
    case Outcome::Destabilized: return "destabilized";
  }
  return "?";
}

std::vector<double> mdlaa_bounds(const Scenario& s, const GridCase& c) {
  const auto idx = index_buses(c);
  const auto nominal = nominal_loads(c, idx);
  const auto vulnerable = vulnerable_fractions(c, idx);
  std::vector<double> out;
  auto add = [&](int l) { out.push_back(std::min(s.attack.mdlaa.budget_fraction, vulnerable[l]) * nominal[l]); };
  if (s.attack.mdlaa.buses.empty()) {
    for (int l = 0; l < idx.n_load(); ++l) {
      if (nominal[l] > 0.0) add(l);
    }
  } else {
    for (int b : s.attack.mdlaa.buses) add(idx.load_of_bus.at(b));
  }
  return out;
}

namespace {

int steps_of(double period, double dt) { return std::max(1, static_cast<int>(std::lround(period / dt))); }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

class Engine {
 public:
  // Excitation mode drives the attack channels with `excitation` instead
  // of the scenario attack and records the sensed response.
  Engine(const Scenario& s, const RunOptions& opt, const Matrix* excitation)
      : s_(s),
        grid_(scenario_case(s)),
        excitation_(excitation),
        uplink_(s.network.uplink_profile(), "uplink"),
        downlink_(s.network.downlink_profile(), "downlink"),
        attacker_(s.network.attacker, "attacker") {
    validate(s_, grid_);
    idx_ = index_buses(grid_);
    plant_ = build_plant(grid_, PlantOptions{true});
    nominal_ = nominal_loads(grid_, idx_);
    vulnerable_ = vulnerable_fractions(grid_, idx_);
    book_.emplace(nominal_);
    bank_.emplace(grid_);
    monitor_.emplace(default_grid_code(s_.gridcode.long_dwell_s, s_.gridcode.short_dwell_s));
    sys_w_ = inertia_weights(grid_);
    build_areas();

    if (s_.lfc.enabled) {
      for (int a : area_ids_) {
        AreaController ctl(grid_, a, s_.lfc);
        if (!ctl.generators().empty()) controllers_.push_back(std::move(ctl));
      }
    }
    if (s_.ufls.enabled) relay_.emplace(s_.ufls);

    const auto& atk = s_.attack;
    if (excitation_ == nullptr) {
      if (atk.kind == AttackKind::Dlaa) dlaa_.emplace(atk.dlaa, grid_, idx_);
      if (atk.kind == AttackKind::Mdlaa) setup_mdlaa(opt);
    } else {
      setup_channels();
    }
    attack_.setZero(idx_.n_load());
  }

  ScenarioResult run();
  OfflineRecord record() const {
    OfflineRecord r;
    r.sample_s = s_.attack.mdlaa.sample_s;
    const auto n = static_cast<Eigen::Index>(rec_inputs_.size());
    r.inputs.resize(static_cast<Eigen::Index>(channels_.size()), n);
    r.outputs.resize(static_cast<Eigen::Index>(sensed_.size()), n);
    for (Eigen::Index k = 0; k < n; ++k) {
      r.inputs.col(k) = rec_inputs_[k];
      r.outputs.col(k) = rec_outputs_[k];
    }
    return r;
  }

 private:
  void build_areas();
  void setup_channels();
  void setup_mdlaa(const RunOptions& opt);
  void publish(double t, bool measurements, bool attacker_sample);
  FrequencySample sample(double t) const;
  void event(double t, std::string kind, std::string detail = {}) {
    result_.events.push_back({t, std::move(kind), std::move(detail)});
  }
  Vector disturbance(double t) const;
  void attacker_actuate(int k, double t);
  void record_trace(double t);

  const Scenario& s_;
  GridCase grid_;
  const Matrix* excitation_;
  BusIndex idx_;
  LinearPlant plant_;
  std::vector<double> nominal_, vulnerable_;
  std::optional<LoadBook> book_;
  std::optional<SetpointBank> bank_;
  std::optional<GridCodeMonitor> monitor_;
  Vector sys_w_;
  std::vector<int> area_ids_;
  std::vector<Vector> area_w_;
  Matrix tie_;  // area export as a function of (delta, load deviation)
  Matrix tie_load_;

  Channel uplink_, downlink_, attacker_;
  std::vector<AreaController> controllers_;
  std::optional<UflsRelay> relay_;
  std::optional<DlaaAgent> dlaa_;
  std::optional<MdlaaAgent> mdlaa_;
  std::vector<int> channels_;  // attacked load positions
  std::vector<double> p_max_;
  std::vector<int> sensed_;    // sensed generators
  std::optional<FrequencySample> last_attacker_sample_;
  std::vector<Vector> rec_inputs_, rec_outputs_;

  SimState state_;
  Vector attack_;  // current held injection per load bus (pre-connection)
  Vector load_dev_;
  ScenarioResult result_;
  bool attack_logged_ = false;
  std::vector<bool> clamped_;
};

void Engine::build_areas() {
  std::unordered_map<int, int> area_of;
  for (const auto& b : grid_.buses) area_of[b.id] = b.area;
  for (const auto& a : grid_.areas) area_ids_.push_back(a.id);
  const int g = plant_.n_gen;
  for (int a : area_ids_) {
    Vector w = Vector::Zero(g);
    for (int i : generators_in_area(grid_, a)) w(i) = grid_.generators[i].m;
    if (w.sum() > 0.0) w /= w.sum();
    area_w_.push_back(w);
  }
  // Bus angle = E_delta * delta + E_load * load_dev (gen buses first, then load buses).
  const int nb = g + plant_.n_load;
  Matrix e_delta = Matrix::Zero(nb, g);
  Matrix e_load = Matrix::Zero(nb, plant_.n_load);
  e_delta.topRows(g).setIdentity();
  if (plant_.n_load > 0) {
    e_delta.bottomRows(plant_.n_load) = plant_.theta_from_delta;
    e_load.bottomRows(plant_.n_load) = -plant_.h_inv;
  }
  auto row_of = [&](int bus) { return idx_.is_gen_bus(bus) ? idx_.gen_of_bus.at(bus) : g + idx_.load_of_bus.at(bus); };
  Matrix flows = Matrix::Zero(static_cast<Eigen::Index>(area_ids_.size()), nb);
  for (const auto& br : grid_.branches) {
    const int ai = area_of.at(br.from);
    const int aj = area_of.at(br.to);
    if (ai == aj) continue;
    const auto pi = std::find(area_ids_.begin(), area_ids_.end(), ai) - area_ids_.begin();
    const auto pj = std::find(area_ids_.begin(), area_ids_.end(), aj) - area_ids_.begin();
    const int ri = row_of(br.from);
    const int rj = row_of(br.to);
    flows(pi, ri) += br.b;
    flows(pi, rj) -= br.b;
    flows(pj, rj) += br.b;
    flows(pj, ri) -= br.b;
  }
  tie_ = flows * e_delta;
  tie_load_ = flows * e_load;
  clamped_.assign(area_ids_.size(), false);
}

void Engine::setup_channels() {
  const auto& m = s_.attack.mdlaa;
  if (m.buses.empty()) {
    for (int l = 0; l < idx_.n_load(); ++l) {
      if (nominal_[l] > 0.0) channels_.push_back(l);
    }
  } else {
    for (int b : m.buses) channels_.push_back(idx_.load_of_bus.at(b));
  }
  if (m.sensed_gens.empty()) {
    for (int g = 0; g < plant_.n_gen; ++g) sensed_.push_back(g);
  } else {
    sensed_ = m.sensed_gens;
  }
  p_max_ = mdlaa_bounds(s_, grid_);
}

void Engine::setup_mdlaa(const RunOptions& opt) {
  setup_channels();
  const auto& m = s_.attack.mdlaa;
  const int order = m.order > 0 ? m.order : plant_.dim();
  validate(m, static_cast<int>(channels_.size()), order);
  OfflineRecord rec;
  if (opt.offline != nullptr) {
    rec = *opt.offline;
  } else if (m.replay_offline) {
    rec = load_record_csv(*m.replay_offline);
  } else {
    rec = collect_offline(s_);
    if (m.save_offline) save_record_csv(rec, *m.save_offline);
  }
  if (rec.inputs.rows() != static_cast<Eigen::Index>(channels_.size()) ||
      rec.outputs.rows() != static_cast<Eigen::Index>(sensed_.size())) {
    throw ConfigError("mdlaa: offline record does not match the attack channels");
  }
  const int need = required_samples(static_cast<int>(channels_.size()), m.t_ini, m.n_ap, order);
  if (rec.samples() < need) {
    throw ConfigError("mdlaa: offline record has " + std::to_string(rec.samples()) +
                      " samples, T_a >= (|L|+1)(T_ini+N_ap+n)-1 requires " + std::to_string(need));
  }
  MdlaaSummary summary;
  summary.offline_samples = rec.samples();
  summary.pe_rank = check_persistent_excitation(rec.inputs, m.t_ini + m.n_ap + order).rank;
  result_.mdlaa = summary;
  mdlaa_.emplace(m, std::move(rec), p_max_);
}

FrequencySample Engine::sample(double t) const {
  FrequencySample f;
  f.timestamp = t;
  const Vector w = state_.x.segment(plant_.n_gen, plant_.n_gen) / kTwoPi;
  f.gen_dev_hz.assign(w.data(), w.data() + w.size());
  f.system_dev_hz = sys_w_.dot(w);
  for (const auto& aw : area_w_) f.area_dev_hz.push_back(aw.dot(w));
  return f;
}

void Engine::publish(double t, bool measurements, bool attacker_sample) {
  if (measurements) {
    const FrequencySample f = sample(t);
    if (!controllers_.empty()) {
      const Vector tie = tie_ * state_.x.head(plant_.n_gen) + tie_load_ * load_dev_;
      for (std::size_t a = 0; a < area_ids_.size(); ++a) {
        Frame fr;
        fr.kind = FrameKind::Measurement;
        fr.source = 0;
        fr.destination = area_ids_[a];
        fr.payload = AreaMeasurement{area_ids_[a], f.area_dev_hz[a], tie(static_cast<Eigen::Index>(a)), t};
        uplink_.send(fr, t);
      }
    }
    if (relay_) {
      Frame fr;
      fr.kind = FrameKind::Measurement;
      fr.destination = -1;
      fr.payload = f;
      uplink_.send(fr, t);
    }
  }
  if (attacker_sample) {
    Frame fr;
    fr.kind = FrameKind::Measurement;
    fr.destination = -2;
    fr.payload = sample(t);
    attacker_.send(fr, t);
  }
}

Vector Engine::disturbance(double t) const {
  Vector d = Vector::Zero(idx_.n_load());
  for (const auto& dist : s_.disturbances) {
    if (t >= dist.start_s && (!dist.end_s || t < *dist.end_s)) d(idx_.load_of_bus.at(dist.bus)) += dist.delta_pu;
  }
  return d;
}

void Engine::attacker_actuate(int k, double t) {
  const auto& atk = s_.attack;
  if (excitation_ != nullptr) {
    const int every = steps_of(atk.mdlaa.sample_s, s_.dt_s);
    if (k % every != 0) return;
    const auto n = static_cast<Eigen::Index>(rec_inputs_.size());
    if (n >= excitation_->cols() || !last_attacker_sample_) {
      attack_.setZero();
      return;
    }
    Vector y(static_cast<Eigen::Index>(sensed_.size()));
    for (std::size_t i = 0; i < sensed_.size(); ++i) y(i) = last_attacker_sample_->gen_dev_hz[sensed_[i]];
    const Vector u = excitation_->col(n);
    rec_inputs_.push_back(u);
    rec_outputs_.push_back(y);
    attack_.setZero();
    for (std::size_t i = 0; i < channels_.size(); ++i) attack_(channels_[i]) = u(i);
    return;
  }

  switch (atk.kind) {
    case AttackKind::Slaa:
      attack_ = slaa_inject(atk.slaa, idx_, nominal_, t);
      break;
    case AttackKind::Dlaa:
      if (atk.dlaa.continuous) break;
      if (k % steps_of(atk.dlaa.period_s, s_.dt_s) == 0) {
        attack_ = saturate(dlaa_->injection(t), nominal_, vulnerable_);
      }
      break;
    case AttackKind::Mdlaa: {
      if (k % steps_of(atk.mdlaa.sample_s, s_.dt_s) != 0 || !last_attacker_sample_) break;
      Vector y(static_cast<Eigen::Index>(sensed_.size()));
      for (std::size_t i = 0; i < sensed_.size(); ++i) y(i) = last_attacker_sample_->gen_dev_hz[sensed_[i]];
      const bool active = t >= atk.mdlaa.start_s - 1e-9;
      const auto before = mdlaa_->status();
      const auto step = mdlaa_->on_sample(y, active);
      auto& sum = *result_.mdlaa;
      if (step.solved) {
        sum.max_kkt = std::max(sum.max_kkt, step.kkt_residual);
        if (step.relaxed) {
          if (sum.relaxed == 0) event(t, "mdlaa-relaxed", "initial window fitted by least squares");
          ++sum.relaxed;
        }
      }
      if (before == MdlaaAgent::Status::Running && mdlaa_->status() != MdlaaAgent::Status::Running) {
        event(t, "mdlaa-finished",
              mdlaa_->status() == MdlaaAgent::Status::TargetReached ? "target reached" : "k_max exhausted");
      }
      attack_.setZero();
      for (std::size_t i = 0; i < channels_.size(); ++i) {
        attack_(channels_[i]) = std::clamp(step.input(static_cast<Eigen::Index>(i)), -p_max_[i], p_max_[i]);
      }
      break;
    }
    case AttackKind::None: break;
  }
}

void Engine::record_trace(double t) {
  TraceSample row;
  row.t = t;
  const double f0 = grid_.nominal_hz;
  const FrequencySample f = sample(t);
  row.f_sys_hz = f0 + f.system_dev_hz;
  for (double d : f.gen_dev_hz) row.f_gen_hz.push_back(f0 + d);
  row.load_dev_pu = load_dev_.sum();
  double applied = 0.0;
  for (Eigen::Index i = 0; i < attack_.size(); ++i) applied += book_->connected()[i] * attack_(i);
  if (s_.attack.kind == AttackKind::Dlaa && s_.attack.dlaa.continuous && t >= s_.attack.dlaa.start_s) {
    const Vector raw = saturate(dlaa_->feedback_from_state(plant_, state_.x), nominal_, vulnerable_);
    for (Eigen::Index i = 0; i < raw.size(); ++i) applied += book_->connected()[i] * raw(i);
  }
  row.attack_pu = applied;
  row.setpoint_pu = bank_->total();
  row.shed_pct = 100.0 * (1.0 - book_->connected_total() / std::max(book_->initial_total(), 1e-300));
  result_.trace.push_back(std::move(row));
}

ScenarioResult Engine::run() {
  result_.id = s_.id;
  result_.gen_buses = idx_.gen_buses;
  state_ = SimState::zero(plant_);
  load_dev_ = Vector::Zero(idx_.n_load());
  const double dt = s_.dt_s;
  const int meas_every = steps_of(s_.measure_period_s, dt);
  const int lfc_every = steps_of(s_.lfc.period_s, dt);
  int attacker_every = 0;
  if (excitation_ != nullptr || s_.attack.kind == AttackKind::Mdlaa) {
    attacker_every = steps_of(s_.attack.mdlaa.sample_s, dt);
  } else if (s_.attack.kind == AttackKind::Dlaa && !s_.attack.dlaa.continuous) {
    attacker_every = steps_of(s_.attack.dlaa.period_s, dt);
  }
  const auto total_steps = static_cast<long>(std::llround(s_.duration_s / dt));
  const double start = s_.attack.start_s();

  StageLoadFeedback feedback;
  if (dlaa_ && s_.attack.dlaa.continuous) {
    feedback = [this](const Vector& x) -> Vector {
      const Vector raw = saturate(dlaa_->feedback_from_state(plant_, x), nominal_, vulnerable_);
      Vector out(raw.size());
      for (Eigen::Index i = 0; i < raw.size(); ++i) out(i) = book_->connected()[i] * raw(i);
      return out;
    };
  }

  record_trace(0.0);
  publish(0.0, true, attacker_every > 0);
  std::optional<double> stop_at;

  for (long k = 0; k < total_steps; ++k) {
    const double t = static_cast<double>(k) * dt;

    // (1) channels
    for (auto& fr : uplink_.poll(t)) {
      if (const auto* m = std::get_if<AreaMeasurement>(&fr.payload)) {
        for (auto& c : controllers_) {
          if (c.area() == m->area) c.receive(*m, t);
        }
      } else if (const auto* f = std::get_if<FrequencySample>(&fr.payload)) {
        if (relay_) {
          double freq = f->system_dev_hz;
          if (s_.ufls.source == UflsSource::Area) {
            const auto pos = std::find(area_ids_.begin(), area_ids_.end(), s_.ufls.area) - area_ids_.begin();
            freq = f->area_dev_hz[pos];
          }
          if (auto cmd = relay_->evaluate(grid_.nominal_hz + freq, t)) {
            for (int st : cmd->stages) {
              event(t, "ufls-stage", "stage " + std::to_string(st + 1) + " at " + fmt(grid_.nominal_hz + freq) + " Hz");
            }
            Frame out;
            out.kind = FrameKind::Command;
            out.source = -1;
            out.payload = *cmd;
            if (!downlink_.send(out, t)) event(t, "frame-dropped", "shed command");
          }
        }
      }
    }
    for (auto& fr : attacker_.poll(t)) {
      if (const auto* f = std::get_if<FrequencySample>(&fr.payload)) {
        if (!last_attacker_sample_ || f->timestamp > last_attacker_sample_->timestamp) last_attacker_sample_ = *f;
        if (dlaa_) dlaa_->on_sample(*last_attacker_sample_);
      }
    }

    // (2) agents
    if (k % lfc_every == 0) {
      for (std::size_t a = 0; a < controllers_.size(); ++a) {
        auto out = controllers_[a].step(t);
        if (out.stale) event(t, "lfc-stale", "area " + std::to_string(controllers_[a].area()));
        if (out.clamped && !clamped_[a]) event(t, "lfc-clamp", "area " + std::to_string(controllers_[a].area()));
        if (out.updated) clamped_[a] = out.clamped;
        Frame fr;
        fr.kind = FrameKind::Command;
        fr.source = controllers_[a].area();
        fr.payload = out.command;
        downlink_.send(fr, t);
      }
    }
    if (!attack_logged_ && s_.attack.kind != AttackKind::None && excitation_ == nullptr && t >= start - 1e-9) {
      event(t, "attack-start", to_string(s_.attack.kind));
      attack_logged_ = true;
    }
    attacker_actuate(static_cast<int>(k), t);

    // (3) commands
    for (auto& fr : downlink_.poll(t)) {
      if (const auto* sp = std::get_if<SetpointCommand>(&fr.payload)) {
        bank_->apply(*sp);
      } else if (const auto* sh = std::get_if<ShedCommand>(&fr.payload)) {
        const auto r = book_->apply_shed(sh->fraction);
        if (r.ignored) {
          event(t, "shed-ignored", "nothing left to shed");
        } else {
          event(t, "shed-applied", fmt(r.applied) + " pu");
        }
      }
    }

    // (4) grid
    const Vector extra = attack_ + disturbance(t);
    load_dev_ = book_->deviation(extra);
    Vector setpoints = Eigen::Map<const Vector>(bank_->values().data(), static_cast<Eigen::Index>(bank_->values().size()));
    try {
      state_ = step(state_, plant_, load_dev_, setpoints, dt, feedback ? &feedback : nullptr);
    } catch (const DivergenceError& e) {
      result_.diverged = true;
      result_.destabilized_at = e.time();
      event(e.time(), "divergence", e.what());
      result_.end_time = e.time();
      break;
    }
    const double t1 = static_cast<double>(k + 1) * dt;
    state_.time = t1;

    // (5) grid code on the true system frequency
    const double f_sys = grid_.nominal_hz + sys_w_.dot(state_.x.segment(plant_.n_gen, plant_.n_gen)) / kTwoPi;
    const bool was_violated = monitor_->verdict().violated;
    const auto& verdict = monitor_->step(f_sys, dt, t1);
    if (verdict.violated && !was_violated) {
      event(t1, "gridcode-violation", verdict.band + " at " + fmt(f_sys) + " Hz");
      stop_at = t1 + s_.outcome.post_violation_s;
    }

    // (6) publish
    const bool meas = (k + 1) % meas_every == 0;
    publish(t1, meas, attacker_every > 0 && (k + 1) % attacker_every == 0);
    if (meas) record_trace(t1);
    result_.end_time = t1;

    // (7) divergence / stop
    if (std::abs(f_sys - grid_.nominal_hz) > s_.outcome.divergence_hz) {
      result_.diverged = true;
      event(t1, "divergence", "frequency deviation beyond " + fmt(s_.outcome.divergence_hz) + " Hz");
      break;
    }
    if (stop_at && t1 >= *stop_at - 1e-9) break;
    if (excitation_ != nullptr && static_cast<Eigen::Index>(rec_inputs_.size()) >= excitation_->cols()) break;
  }

  // Outcome.
  result_.verdict = monitor_->verdict();
  if (result_.verdict.violated) {
    result_.destabilized_at = result_.verdict.time;
  } else if (result_.diverged && !result_.destabilized_at) {
    result_.destabilized_at = result_.end_time;
  }
  const double tail_from = std::max(result_.end_time * (1.0 - s_.outcome.tail_fraction), std::min(30.0, result_.end_time));
  double sum = 0.0, lo = 1e300, hi = -1e300;
  int n = 0;
  for (const auto& row : result_.trace) {
    if (row.t + 1e-9 < tail_from) continue;
    const double d = row.f_sys_hz - grid_.nominal_hz;
    sum += d;
    lo = std::min(lo, d);
    hi = std::max(hi, d);
    ++n;
  }
  result_.steady_dev_hz = n ? sum / n : 0.0;
  result_.tail_peak_to_peak_hz = n ? hi - lo : 0.0;
  if (result_.destabilized_at) {
    result_.outcome = Outcome::Destabilized;
  } else if (std::abs(result_.steady_dev_hz) > s_.outcome.off_nominal_hz) {
    result_.outcome = Outcome::OffNominalStable;
  } else {
    result_.outcome = Outcome::Stable;
  }
  if (relay_) {
    result_.ufls_stages = relay_->latched_count();
  }
  result_.shed_fraction = 1.0 - book_->connected_total() / std::max(book_->initial_total(), 1e-300);
  result_.uplink = uplink_.stats();
  result_.downlink = downlink_.stats();
  result_.attacker = attacker_.stats();
  if (mdlaa_) {
    auto& sum_m = *result_.mdlaa;
    sum_m.applied = mdlaa_->applied();
    sum_m.solves = mdlaa_->solves();
    switch (mdlaa_->status()) {
      case MdlaaAgent::Status::Running: sum_m.status = "running"; break;
      case MdlaaAgent::Status::TargetReached: sum_m.status = "target-reached"; break;
      case MdlaaAgent::Status::Exhausted: sum_m.status = "exhausted"; break;
    }
  }
  return result_;
}

}  // namespace

ScenarioResult run(const Scenario& s, const RunOptions& opt) {
  Engine engine(s, opt, nullptr);
  return engine.run();
}

OfflineRecord collect_offline(const Scenario& s) {
  if (s.attack.kind != AttackKind::Mdlaa) throw ConfigError("collect_offline needs an mdlaa attack");
  const GridCase c = scenario_case(s);
  const auto& m = s.attack.mdlaa;
  const auto bounds = mdlaa_bounds(s, c);
  const int order = m.order > 0 ? m.order : build_plant(c, PlantOptions{true}).dim();
  const int inputs = static_cast<int>(bounds.size());
  validate(m, inputs, order);
  const int need = required_samples(inputs, m.t_ini, m.n_ap, order);
  const int samples = m.t_a > 0 ? m.t_a : need + need / 2;
  const int depth = m.t_ini + m.n_ap + order;
  const Matrix u = multisine(samples, m.sample_s, bounds, m.excitation, depth);

  Scenario offline = s;
  offline.duration_s = samples * m.sample_s + 10.0 * s.dt_s;
  offline.disturbances.clear();
  offline.outcome.post_violation_s = 0.0;
  Engine engine(offline, {}, &u);
  engine.run();
  OfflineRecord rec = engine.record();
  if (rec.samples() < samples) {
    throw ConfigError("mdlaa: offline collection ended early after " + std::to_string(rec.samples()) + " samples");
  }
  const auto pe = check_persistent_excitation(rec.inputs, depth);
  if (!pe.full_row_rank) {
    throw ConfigError("mdlaa: excitation is not persistently exciting of order " + std::to_string(depth) + " (rank " +
                      std::to_string(pe.rank) + " of " + std::to_string(pe.rows) + "); use more sines or samples");
  }
  return rec;
}

Scenario with_override(const Scenario& s, const std::string& path, double value) {
  nlohmann::json doc = scenario_to_json(s);
  std::string pointer;
  std::stringstream ss(path);
  std::string part;
  while (std::getline(ss, part, '.')) pointer += "/" + part;
  nlohmann::json::json_pointer ptr(pointer.empty() ? "/" : pointer);
  if (path.empty() || !doc.contains(ptr) || !doc.at(ptr).is_number()) {
    throw ConfigError("sweep path '" + path + "' does not address a numeric scenario field");
  }
  if (doc.at(ptr).is_number_integer() && value != std::floor(value)) {
    throw ConfigError("sweep path '" + path + "' is an integer field");
  }
  if (doc.at(ptr).is_number_integer()) {
    doc[ptr] = static_cast<long long>(value);
  } else {
    doc[ptr] = value;
  }
  Scenario out = scenario_from_json(doc, "sweep");
  out.grid = s.grid;
  return out;
}

SweepResult sweep(const Scenario& s, const std::string& path, const std::vector<double>& values, int workers) {
  SweepResult out;
  out.path = path;
  std::vector<Scenario> configs;
  configs.reserve(values.size());
  for (double v : values) configs.push_back(with_override(s, path, v));
  out.points.resize(values.size());

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(values.size());
  auto work = [&]() {
    for (std::size_t i = next++; i < values.size(); i = next++) {
      try {
        const auto r = run(configs[i]);
        out.points[i] = {values[i], r.outcome, r.destabilized_at, r.ufls_stages};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n = std::clamp(workers, 1, std::max(1, static_cast<int>(values.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < n; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (std::size_t i = 1; i < out.points.size() && !out.threshold; ++i) {
    if (out.points[i].outcome == Outcome::Destabilized && out.points[i - 1].outcome != Outcome::Destabilized) {
      out.threshold = out.points[i].value;
    }
  }
  for (std::size_t i = 1; i < out.points.size(); ++i) {
    if (static_cast<int>(out.points[i].outcome) < static_cast<int>(out.points[i - 1].outcome)) out.monotone = false;
  }
  return out;
}

}  // namespace laasim
