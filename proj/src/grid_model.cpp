#include "laasim/grid_model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <queue>
#include <sstream>

#include "laasim/errors.hpp"

namespace laasim {

Matrix AdmittancePartition::assembled() const {
  const auto g = gg.rows();
  const auto l = ll.rows();
  Matrix h = Matrix::Zero(g + l, g + l);
  h.topLeftCorner(g, g) = gg;
  h.topRightCorner(g, l) = gl;
  h.bottomLeftCorner(l, g) = lg;
  h.bottomRightCorner(l, l) = ll;
  return h;
}

Matrix row_sum_diag(const Matrix& x) {
  return Matrix(x.rowwise().sum().asDiagonal());
}

AdmittancePartition build_admittance(const GridCase& c) {
  AdmittancePartition adm;
  adm.index = index_buses(c);
  const auto& idx = adm.index;
  const int g = idx.n_gen();
  const int l = idx.n_load();
  adm.gg = Matrix::Zero(g, g);
  adm.gl = Matrix::Zero(g, l);
  adm.lg = Matrix::Zero(l, g);
  adm.ll = Matrix::Zero(l, l);

  for (std::size_t i = 0; i < c.branches.size(); ++i) {
    const auto& br = c.branches[i];
    if (idx.position.count(br.from) == 0 || idx.position.count(br.to) == 0) {
      throw CaseError("branches[" + std::to_string(i) + "]: dangling endpoint " + std::to_string(br.from) + "-" +
                      std::to_string(br.to));
    }
    if (br.from == br.to) continue;
    auto place = [&](int a, int b) {
      const bool ag = idx.is_gen_bus(a);
      const bool bg = idx.is_gen_bus(b);
      if (ag && bg) {
        adm.gg(idx.gen_of_bus.at(a), idx.gen_of_bus.at(b)) += br.b;
      } else if (ag) {
        adm.gl(idx.gen_of_bus.at(a), idx.load_of_bus.at(b)) += br.b;
      } else if (bg) {
        adm.lg(idx.load_of_bus.at(a), idx.gen_of_bus.at(b)) += br.b;
      } else {
        adm.ll(idx.load_of_bus.at(a), idx.load_of_bus.at(b)) += br.b;
      }
    };
    place(br.from, br.to);
    place(br.to, br.from);
  }
  return adm;
}

DescriptorSystem build_descriptor(const GridCase& c, const AdmittancePartition& adm) {
  const int g = adm.index.n_gen();
  const int l = adm.index.n_load();
  if (static_cast<int>(c.generators.size()) != g) {
    throw ModelError("generator list does not match the admittance partition");
  }
  DescriptorSystem d;
  d.n_gen = g;
  d.n_load = l;
  const int n = 2 * g + l;
  d.e = Matrix::Zero(n, n);
  d.a = Matrix::Zero(n, n);
  d.b = Matrix::Zero(n, l);

  Vector m(g), ki(g), damp(g);
  for (int i = 0; i < g; ++i) {
    const auto& gen = c.generators[i];
    if (!(gen.m != 0.0) || !std::isfinite(gen.m)) {
      throw ModelError("singular inertia matrix: generator at bus " + std::to_string(gen.bus) + " has M = 0");
    }
    m(i) = gen.m;
    ki(i) = gen.ki;
    damp(i) = gen.kp + gen.d;
  }

  d.e.topLeftCorner(g, g).setIdentity();
  d.e.block(g + l, g + l, g, g) = -Matrix(m.asDiagonal());

  // delta' = omega
  d.a.block(0, g + l, g, g).setIdentity();
  // 0 = -H_LG delta + (H_LG^1 + H_LL^1 - H_LL) theta + P_L
  d.a.block(g, 0, l, g) = -adm.lg;
  d.a.block(g, g, l, l) = row_sum_diag(adm.lg) + row_sum_diag(adm.ll) - adm.ll;
  // -M omega' = (K_I + H_GG^1 - H_GG + H_GL^1) delta - H_GL theta + (K_P + D_G) omega
  d.a.block(g + l, 0, g, g) = Matrix(ki.asDiagonal()) + row_sum_diag(adm.gg) - adm.gg + row_sum_diag(adm.gl);
  d.a.block(g + l, g, g, l) = -adm.gl;
  d.a.block(g + l, g + l, g, g) = Matrix(damp.asDiagonal());

  d.b.block(g, 0, l, l).setIdentity();
  return d;
}

namespace {

std::vector<int> islanded_load_rows(const Matrix& lg, const Matrix& ll) {
  const auto l = ll.rows();
  std::vector<char> reached(l, 0);
  std::queue<int> q;
  for (int i = 0; i < l; ++i) {
    if (lg.row(i).cwiseAbs().sum() > 0.0) {
      reached[i] = 1;
      q.push(i);
    }
  }
  while (!q.empty()) {
    const int i = q.front();
    q.pop();
    for (int j = 0; j < l; ++j) {
      if (!reached[j] && ll(i, j) != 0.0) {
        reached[j] = 1;
        q.push(j);
      }
    }
  }
  std::vector<int> out;
  for (int i = 0; i < l; ++i) {
    if (!reached[i]) out.push_back(i);
  }
  return out;
}

ReducedSystem reduce_impl(const DescriptorSystem& desc, const BusIndex* index) {
  const int g = desc.n_gen;
  const int l = desc.n_load;
  ReducedSystem r;
  r.n_gen = g;
  r.n_load = l;

  const Matrix a2d = desc.a.block(g, 0, l, g);
  const Matrix lmat = desc.a.block(g, g, l, l);
  const Matrix b2 = desc.b.block(g, 0, l, l);
  const Matrix a3d = desc.a.block(g + l, 0, g, g);
  const Matrix a3t = desc.a.block(g + l, g, g, l);
  const Matrix a3w = desc.a.block(g + l, g + l, g, g);
  const Matrix b3 = desc.b.block(g + l, 0, g, l);
  const Matrix ew = desc.e.block(g + l, g + l, g, g);

  if (l > 0) {
    Eigen::FullPivLU<Matrix> lu(lmat);
    if (!lu.isInvertible()) {
      const auto rows = islanded_load_rows(-a2d, row_sum_diag(-a2d) + row_sum_diag(lmat) - lmat);
      std::ostringstream os;
      os << "load-bus block is singular; islanded load buses:";
      if (rows.empty()) os << " (none detected, numerically singular)";
      for (int i : rows) os << ' ' << (index ? index->load_buses[i] : i);
      throw ModelError(os.str());
    }
    r.h_inv = lu.inverse();
  } else {
    r.h_inv = Matrix::Zero(0, 0);
  }
  r.h_lg = -a2d;

  Eigen::FullPivLU<Matrix> elu(ew);
  if (!elu.isInvertible()) throw ModelError("singular inertia block");
  const Matrix ew_inv = elu.inverse();

  r.a = Matrix::Zero(2 * g, 2 * g);
  r.a.block(0, g, g, g).setIdentity();
  r.a.block(g, 0, g, g) = ew_inv * (a3d - a3t * r.h_inv * a2d);
  r.a.block(g, g, g, g) = ew_inv * a3w;
  r.b = Matrix::Zero(2 * g, l);
  r.b.block(g, 0, g, l) = ew_inv * (b3 - a3t * r.h_inv * b2);
  return r;
}

}  // namespace

ReducedSystem reduce(const DescriptorSystem& desc, const BusIndex& index) { return reduce_impl(desc, &index); }
ReducedSystem reduce(const DescriptorSystem& desc) { return reduce_impl(desc, nullptr); }

Vector ReducedSystem::theta(const Vector& delta, const Vector& load) const {
  if (n_load == 0) return Vector::Zero(0);
  return h_inv * (h_lg * delta - load);
}

Matrix dlaa_gain_matrix(const Vector& gains, const Vector& sensing) {
  for (Eigen::Index i = 0; i < gains.size(); ++i) {
    if (!(gains(i) >= 0.0) || !std::isfinite(gains(i))) {
      throw ParameterError("DLAA gains must be finite and >= 0 (entry " + std::to_string(i) + ")");
    }
  }
  return gains * sensing.transpose();
}

Matrix dlaa_matrix(const ReducedSystem& red, const Vector& gains, const Vector& sensing) {
  if (gains.size() != red.n_load || sensing.size() != red.n_gen) {
    throw ParameterError("dlaa_matrix: gain vector must have one entry per load bus");
  }
  const Matrix k = dlaa_gain_matrix(gains, sensing) / kTwoPi;
  Matrix feedback = Matrix::Zero(red.n_load, 2 * red.n_gen);
  feedback.rightCols(red.n_gen) = -k;
  return red.a + red.b * feedback;
}

Vector inertia_weights(const GridCase& c) {
  Vector w(static_cast<Eigen::Index>(c.generators.size()));
  for (std::size_t i = 0; i < c.generators.size(); ++i) w(i) = c.generators[i].m;
  return w / w.sum();
}

LinearPlant build_plant(const GridCase& c, const ReducedSystem& red) {
  const int g = red.n_gen;
  const int l = red.n_load;
  int extra = 0;
  for (const auto& gen : c.generators) extra += gen.lag.enabled ? 2 : 0;
  const int n = 2 * g + extra;

  LinearPlant p;
  p.n_gen = g;
  p.n_load = l;
  p.a = Matrix::Zero(n, n);
  p.a.topLeftCorner(2 * g, 2 * g) = red.a;
  p.b_load = Matrix::Zero(n, l);
  p.b_load.topRows(2 * g) = red.b;
  p.b_set = Matrix::Zero(n, g);
  p.gov_state.assign(g, -1);
  p.turb_state.assign(g, -1);
  p.inertia.resize(g);
  p.theta_from_delta = red.h_inv * red.h_lg;
  p.h_inv = red.h_inv;

  int next = 2 * g;
  for (int i = 0; i < g; ++i) {
    const auto& gen = c.generators[i];
    p.inertia(i) = gen.m;
    const int w = g + i;
    if (!gen.lag.enabled) {
      p.b_set(w, i) = 1.0 / gen.m;
      continue;
    }
    const int gs = next++;
    const int ts = next++;
    p.gov_state[i] = gs;
    p.turb_state[i] = ts;
    // Primary response moves from the direct damping term into the lags.
    p.a(w, w) += gen.kp / gen.m;
    p.a(gs, gs) = -1.0 / gen.lag.t_gov;
    p.a(gs, w) = -gen.kp / gen.lag.t_gov;
    p.b_set(gs, i) = 1.0 / gen.lag.t_gov;
    p.a(ts, ts) = -1.0 / gen.lag.t_turb;
    p.a(ts, gs) = 1.0 / gen.lag.t_turb;
    p.a(w, ts) = 1.0 / gen.m;
  }
  return p;
}

LinearPlant build_plant(const GridCase& c, const PlantOptions& opt) {
  GridCase local = c;
  if (opt.zero_integral_gain) {
    for (auto& g : local.generators) g.ki = 0.0;
  }
  const auto adm = build_admittance(local);
  const auto desc = build_descriptor(local, adm);
  return build_plant(local, reduce(desc, adm.index));
}

SimState SimState::zero(const LinearPlant& p) {
  SimState s;
  s.x = Vector::Zero(p.dim());
  s.load = Vector::Zero(p.n_load);
  return s;
}

Vector SimState::theta(const LinearPlant& p) const {
  if (p.n_load == 0) return Vector::Zero(0);
  return p.theta_from_delta * x.head(p.n_gen) - p.h_inv * load;
}

SimState step(const SimState& s, const LinearPlant& p, const Vector& load, const Vector& setpoints, double dt,
              const StageLoadFeedback* feedback) {
  if (!(dt > 0.0)) throw ParameterError("step: dt must be > 0");
  if (!load.allFinite() || !setpoints.allFinite()) throw ParameterError("step: inputs must be finite");

  const Vector forcing = p.b_load * load + p.b_set * setpoints;
  auto f = [&](const Vector& x) -> Vector {
    Vector dx = p.a * x + forcing;
    if (feedback != nullptr) dx.noalias() += p.b_load * (*feedback)(x);
    return dx;
  };
  const Vector k1 = f(s.x);
  const Vector k2 = f(s.x + 0.5 * dt * k1);
  const Vector k3 = f(s.x + 0.5 * dt * k2);
  const Vector k4 = f(s.x + dt * k3);

  SimState out;
  out.x = s.x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  out.load = load;
  out.time = s.time + dt;
  if (!out.x.allFinite()) throw DivergenceError("non-finite state after integration step", out.time);
  return out;
}

SimState step(const SimState& s, const ReducedSystem& red, const Vector& load, double dt) {
  LinearPlant p;
  p.n_gen = red.n_gen;
  p.n_load = red.n_load;
  p.a = red.a;
  p.b_load = red.b;
  p.b_set = Matrix::Zero(red.a.rows(), red.n_gen);
  p.theta_from_delta = red.h_inv * red.h_lg;
  p.h_inv = red.h_inv;
  return step(s, p, load, Vector::Zero(red.n_gen), dt);
}

double spectral_abscissa(const Matrix& a, int n_gen) {
  const auto n = a.rows();
  if (n == 0) return -std::numeric_limits<double>::infinity();
  Vector rotation = Vector::Zero(n);
  rotation.head(n_gen).setOnes();
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const bool deflate = n_gen > 0 && (a * rotation).cwiseAbs().maxCoeff() <= 1e-12 * scale;

  Matrix work;
  if (deflate) {
    // z = (delta_i - delta_0 for i >= 1, remaining states); x = P z with delta_0 = 0.
    const auto m = n - 1;
    Matrix t = Matrix::Zero(m, n);
    Matrix p = Matrix::Zero(n, m);
    for (int i = 1; i < n_gen; ++i) {
      t(i - 1, i) = 1.0;
      t(i - 1, 0) = -1.0;
      p(i, i - 1) = 1.0;
    }
    for (Eigen::Index j = n_gen; j < n; ++j) {
      t(j - 1, j) = 1.0;
      p(j, j - 1) = 1.0;
    }
    work = t * a * p;
  } else {
    work = a;
  }
  if (work.rows() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::EigenSolver<Matrix> es(work, false);
  if (es.info() != Eigen::Success) throw ModelError("eigenvalue computation failed");
  return es.eigenvalues().real().maxCoeff();
}

Vector bus_angles(const GridCase& c, const BusIndex& idx, const Vector& delta, const Vector& theta) {
  Vector out = Vector::Zero(static_cast<Eigen::Index>(c.buses.size()));
  for (std::size_t i = 0; i < c.buses.size(); ++i) {
    const int id = c.buses[i].id;
    if (idx.is_gen_bus(id)) {
      out(i) = delta(idx.gen_of_bus.at(id));
    } else {
      out(i) = theta(idx.load_of_bus.at(id));
    }
  }
  return out;
}

Vector power_flow_residual(const GridCase& c, const Vector& angles, const Vector& p_sched, const Vector& altered,
                           std::span<const int> eval_buses, const Vector* voltages) {
  const auto nb = static_cast<Eigen::Index>(c.buses.size());
  const Vector flat = Vector::Ones(nb);
  const Vector& u = voltages != nullptr ? *voltages : flat;
  const auto idx = index_buses(c);

  Vector res(static_cast<Eigen::Index>(eval_buses.size()));
  for (std::size_t k = 0; k < eval_buses.size(); ++k) {
    const int bus = eval_buses[k];
    auto it = idx.position.find(bus);
    if (it == idx.position.end()) throw ParameterError("power_flow_residual: unknown bus " + std::to_string(bus));
    const int i = it->second;
    double flow = 0.0;
    for (const auto& br : c.branches) {
      int other = -1;
      if (br.from == bus) other = idx.position.at(br.to);
      else if (br.to == bus) other = idx.position.at(br.from);
      if (other < 0) continue;
      const double th = angles(i) - angles(other);
      flow += u(other) * (br.g * std::cos(th) + br.b * std::sin(th));
    }
    res(static_cast<Eigen::Index>(k)) = p_sched(i) + altered(i) - u(i) * flow;
  }
  return res;
}

}  // namespace laasim
