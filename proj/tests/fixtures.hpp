#pragma once

// Test cases and reference routines shared by the unit tests and the
// acceptance binary.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "laasim/attacks.hpp"
#include "laasim/case_io.hpp"
#include "laasim/cosim.hpp"
#include "laasim/grid_model.hpp"
#include "laasim/mdlaa.hpp"
#include "oracles.hpp"

namespace fixture {

using laasim::GridCase;
using laasim::LinearPlant;
using laasim::Matrix;
using laasim::Vector;

inline GridCase shipped(const std::string& name) { return laasim::load_case(laasim::resolve_case_path(name)); }

/// Largest gap (Hz) between descriptor and reduced generator frequencies
/// under a 0.3 pu step on the first load bus.
inline double descriptor_vs_reduced(const GridCase& c, double horizon, double dt) {
  const auto adm = laasim::build_admittance(c);
  const auto desc = laasim::build_descriptor(c, adm);
  const auto red = laasim::reduce(desc, adm.index);
  const int g = desc.n_gen, l = desc.n_load;

  oracle::DescriptorIntegrator dae(desc.e, desc.a, desc.b);
  Vector load = Vector::Zero(l);
  load(0) = 0.3;

  Vector xd = Vector::Zero(dae.differential());
  laasim::SimState s;
  s.x = Vector::Zero(2 * g);
  s.load = Vector::Zero(l);
  double worst = 0.0;
  const int steps = static_cast<int>(std::lround(horizon / dt));
  for (int k = 0; k < steps; ++k) {
    xd = dae.step(xd, load, dt);
    s = laasim::step(s, red, load, dt);
    for (int i = 0; i < g; ++i) {
      const double f_dae = xd(g + i) / (2.0 * M_PI);
      const double f_red = s.x(g + i) / (2.0 * M_PI);
      worst = std::max(worst, std::abs(f_dae - f_red));
    }
  }
  return worst;
}

/// Closed loop built directly: load deviation -k/(2 pi) * w' omega on each target.
inline Matrix closed_loop(const LinearPlant& p, const std::vector<int>& targets, double k, const Vector& w) {
  Matrix a = p.a;
  for (int l : targets) a.block(0, p.n_gen, p.dim(), p.n_gen) += p.b_load.col(l) * (-k / (2.0 * M_PI)) * w.transpose();
  return a;
}

/// Smallest gain on a uniform grid whose abscissa is positive, refined by
/// further grids inside the bracketing cell.
inline double dense_sweep(const LinearPlant& p, const std::vector<int>& targets, const Vector& w, double k_max) {
  auto unstable = [&](double k) { return oracle::abscissa_relative_angles(closed_loop(p, targets, k, w), p.n_gen) > 0.0; };
  double lo = 0.0, hi = k_max;
  for (int level = 0; level < 3; ++level) {
    const int n = 400;
    const double step = (hi - lo) / n;
    for (int i = 1; i <= n; ++i) {
      const double k = lo + i * step;
      if (unstable(k)) {
        hi = k;
        lo = k - step;
        break;
      }
    }
  }
  return 0.5 * (lo + hi);
}

/// Four-bus, two-generator case with random parameters.
inline GridCase random_toy(std::mt19937& rng) {
  std::uniform_real_distribution<double> m(1.0, 8.0), d(0.5, 3.0), kp(2.0, 15.0), b(2.0, 12.0);
  GridCase c;
  c.name = "toy";
  c.areas = {{1, "A"}};
  c.buses = {{1, 1, 0.0, 0.0}, {2, 1, 0.0, 0.0}, {3, 1, 1.0, 1.0}, {4, 1, 0.5, 1.0}};
  c.branches = {{1, 3, b(rng), 0.0}, {2, 3, b(rng), 0.0}, {3, 4, b(rng), 0.0}, {2, 4, b(rng), 0.0}};
  laasim::Generator g1{1, m(rng), d(rng), kp(rng), 0.0, 0.0, 0.5, {}};
  laasim::Generator g2{2, m(rng), d(rng), kp(rng), 0.0, 0.0, 0.5, {}};
  c.generators = {g1, g2};
  return c;
}

/// Gains at 0.5-0.9x or 1.1-1.6x of the critical gain on random toys;
/// counts cases where simulated growth matches the abscissa sign.
inline int abscissa_sign_agreement(int trials, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> under(0.5, 0.9), over(1.1, 1.6);
  int agree = 0;
  for (int trial = 0; trial < trials; ++trial) {
    const GridCase c = random_toy(rng);
    const LinearPlant p = laasim::build_plant(c);
    const laasim::BusIndex idx = laasim::index_buses(c);
    laasim::DlaaSpec spec;
    spec.buses = {3, 4};
    spec.start_s = 0.0;
    const double k_crit = laasim::predict_critical_gain(p, {0, 1}, laasim::inertia_weights(c), 100.0).k_crit;
    const double k = k_crit * (trial % 2 == 0 ? under(rng) : over(rng));
    spec.gains = {k, k};
    const laasim::DlaaAgent agent(spec, c, idx);
    const double a = oracle::abscissa_relative_angles(closed_loop(p, {0, 1}, k, agent.weights()), p.n_gen);

    const laasim::StageLoadFeedback fb = [&](const Vector& x) { return agent.feedback_from_state(p, x); };
    laasim::SimState s = laasim::SimState::zero(p);
    s.x(p.omega_index(0)) = 0.01;
    const double start = s.x.segment(p.n_gen, p.n_gen).norm();
    const double horizon = std::min(400.0, 12.0 / std::abs(a));
    const int steps = static_cast<int>(horizon / 0.01);
    for (int i = 0; i < steps; ++i) {
      s = laasim::step(s, p, Vector::Zero(p.n_load), Vector::Zero(p.n_gen), 0.01, &fb);
    }
    const bool diverged = s.x.segment(p.n_gen, p.n_gen).norm() > start;
    agree += diverged == (a > 0.0) ? 1 : 0;
  }
  return agree;
}

/// Largest gap (Hz) between an engine run with a continuous dynamic attack
/// and the exact solution of the closed loop under the same load step.
inline double dlaa_engine_vs_matrix(double gain, double duration) {
  const GridCase c = shipped("ieee39");
  const laasim::BusIndex idx = laasim::index_buses(c);
  laasim::Scenario s;
  s.id = "dlaa-linear";
  s.duration_s = duration;
  s.attack.kind = laasim::AttackKind::Dlaa;
  s.attack.dlaa.buses = {4, 20};
  s.attack.dlaa.gains = {gain, gain};
  s.attack.dlaa.start_s = 0.0;
  s.attack.dlaa.continuous = true;
  s.disturbances.push_back({4, 0.1, 0.0, {}});
  const auto r = laasim::run(s);

  // Exact solution of x' = A_cl x + b via the augmented matrix exponential.
  const LinearPlant p = laasim::build_plant(c, laasim::PlantOptions{true});
  const Vector w = laasim::inertia_weights(c);
  const Matrix a = closed_loop(p, {idx.load_of_bus.at(4), idx.load_of_bus.at(20)}, gain, w);
  const int n = p.dim();
  Matrix aug = Matrix::Zero(n + 1, n + 1);
  aug.topLeftCorner(n, n) = a;
  aug.block(0, n, n, 1) = p.b_load.col(idx.load_of_bus.at(4)) * 0.1;
  const Matrix step = (aug * s.measure_period_s).exp();
  Vector z = Vector::Zero(n + 1);
  z(n) = 1.0;
  const auto expected = static_cast<std::size_t>(std::lround(duration / s.measure_period_s)) + 1;
  if (r.trace.size() != expected) return INFINITY;
  double worst = 0.0;
  for (const auto& row : r.trace) {
    const double f = c.nominal_hz + w.dot(z.segment(p.n_gen, p.n_gen)) / (2.0 * M_PI);
    worst = std::max(worst, std::abs(f - row.f_sys_hz));
    z = step * z;
  }
  return worst;
}

struct QpInstance {
  oracle::DiscreteLti sys;
  laasim::OfflineRecord record;
  Vector p_ini, w_ini;
  std::vector<double> p_max;
};

inline Matrix uniform_noise(std::mt19937& rng, int rows, int cols) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix out(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) out(i, j) = u(rng);
  return out;
}

inline oracle::DiscreteLti random_lti(std::mt19937& rng, int n, int m, int p) {
  std::normal_distribution<double> g(0.0, 1.0);
  oracle::DiscreteLti s{Matrix(n, n), Matrix(n, m), Matrix(p, n)};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s.a(i, j) = g(rng);
  const double rho = Eigen::EigenSolver<Matrix>(s.a, false).eigenvalues().cwiseAbs().maxCoeff();
  s.a *= 0.8 / rho;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) s.b(i, j) = g(rng);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < n; ++j) s.c(i, j) = g(rng);
  return s;
}

/// Two-input, one-output, second-order system with noise-driven data and a
/// consistent initial window taken from a separate trajectory.
inline QpInstance qp_instance(std::mt19937& rng, int t_ini, int horizon) {
  const int n = 2, m = 2, p = 1;
  QpInstance in;
  in.sys = random_lti(rng, n, m, p);
  const int samples = 3 * laasim::required_samples(m, t_ini, horizon, n);
  in.record.inputs = uniform_noise(rng, m, samples);
  in.record.outputs = in.sys.simulate(in.record.inputs, Vector::Random(n));
  const Matrix u_ini = uniform_noise(rng, m, t_ini);
  const Matrix y_ini = in.sys.simulate(u_ini, Vector::Random(n));
  in.p_ini = Eigen::Map<const Vector>(u_ini.data(), u_ini.size());
  in.w_ini = Eigen::Map<const Vector>(y_ini.data(), y_ini.size());
  std::uniform_real_distribution<double> bound(0.05, 0.6);
  in.p_max = {bound(rng), bound(rng)};
  return in;
}

/// Attack objective as an explicit box QP in p_f, built from the
/// minimum-norm solution of the stacked Hankel equations.
struct OracleQp {
  Matrix h;
  Vector c;
  Vector upper;
  double constant = 0.0;

  double value(const Vector& p) const { return 0.5 * p.dot(h * p) + c.dot(p) + constant; }
};

inline OracleQp oracle_qp(const laasim::HankelBlocks& b, const Vector& p_ini, const Vector& w_ini, double omega_ref,
                          const laasim::QpWeights& w, const std::vector<double>& p_max) {
  const int ini = static_cast<int>(b.up.rows() + b.yp.rows());
  const int nf = static_cast<int>(b.uf.rows());
  Matrix stacked(ini + nf, b.up.cols());
  stacked << b.up, b.yp, b.uf;
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(stacked);
  cod.setThreshold(1e-10);
  const Matrix pinv = cod.pseudoInverse();
  const Matrix g_f = pinv.rightCols(nf);
  Vector rhs_ini(ini);
  rhs_ini << p_ini, w_ini;
  const Vector g0 = pinv.leftCols(ini) * rhs_ini;

  Matrix all(stacked.rows() + b.yf.rows(), b.up.cols());
  all << stacked, b.yf;
  const double smax = Eigen::JacobiSVD<Matrix>(all).singularValues()(0);
  const double lambda = w.lambda_scale * smax * smax;

  const Matrix phi = b.yf * g_f;
  const Vector e0 = b.yf * g0 - Vector::Constant(b.yf.rows(), omega_ref);
  OracleQp o;
  o.h = 2.0 * (w.q * phi.transpose() * phi + w.r * Matrix::Identity(nf, nf) + lambda * g_f.transpose() * g_f);
  o.c = 2.0 * (w.q * phi.transpose() * e0 + lambda * g_f.transpose() * g0);
  o.constant = w.q * e0.squaredNorm() + lambda * g0.squaredNorm();
  o.upper.resize(nf);
  const int m = static_cast<int>(p_max.size());
  for (int i = 0; i < nf; ++i) o.upper(i) = p_max[i % m];
  return o;
}

struct QpCheck {
  double kkt = 0.0;         // solver's reported optimality residual
  double equality = 0.0;    // Hankel equations at the returned g
  double vs_exact = 0.0;    // relative objective gap to the enumerated optimum
  double vs_gradient = 0.0; // relative objective gap to projected gradient
};

/// Solves one random instance and compares it with both oracles.
inline QpCheck check_qp_instance(std::mt19937& rng, double omega_ref) {
  const int t_ini = 3, horizon = 3;
  const QpInstance in = qp_instance(rng, t_ini, horizon);
  const laasim::QpWeights w{1.0, 1e-2, 1e-8};
  const laasim::AttackQp qp(laasim::build_blocks(in.record, t_ini, horizon), w, in.p_max);
  const auto sol = qp.solve(in.p_ini, in.w_ini, omega_ref, 200000, 1e-9);
  const auto& b = qp.blocks();

  QpCheck out;
  out.kkt = sol.kkt_residual;
  out.equality = std::max({(b.up * sol.g - in.p_ini).cwiseAbs().maxCoeff(), (b.yp * sol.g - in.w_ini).cwiseAbs().maxCoeff(),
                           (b.uf * sol.g - sol.p_f).cwiseAbs().maxCoeff(), (b.yf * sol.g - sol.omega_f).cwiseAbs().maxCoeff()});
  const OracleQp o = oracle_qp(b, in.p_ini, in.w_ini, omega_ref, w, in.p_max);
  const double exact = o.value(oracle::box_qp_enumerate(o.h, o.c, o.upper));
  const double pg = o.value(oracle::box_qp_projected_gradient(o.h, o.c, o.upper, 200000));
  const double scale = 1.0 + std::abs(exact);
  out.vs_exact = std::abs(sol.objective - exact) / scale;
  out.vs_gradient = std::abs(sol.objective - pg) / scale;
  return out;
}

}  // namespace fixture
