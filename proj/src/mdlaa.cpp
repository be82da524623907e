#include "laasim/mdlaa.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "laasim/errors.hpp"

namespace laasim {

namespace {

// Relative cutoff for the predictor pseudo-inverses.
constexpr double kPinvTolerance = 1e-9;

Matrix pinv(const Matrix& a, double rel_tol = kPinvTolerance) {
  if (a.size() == 0) return Matrix::Zero(a.cols(), a.rows());
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double cut = s.size() > 0 ? s(0) * rel_tol : 0.0;
  Vector inv = Vector::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cut) inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Vector stack(const std::vector<Vector>& v, std::size_t from, std::size_t count) {
  if (count == 0) return Vector::Zero(0);
  const auto n = v[from].size();
  Vector out(n * static_cast<Eigen::Index>(count));
  for (std::size_t i = 0; i < count; ++i) out.segment(static_cast<Eigen::Index>(i) * n, n) = v[from + i];
  return out;
}

}  // namespace

Matrix hankel(const Matrix& signal, int depth) {
  const auto ch = signal.rows();
  const auto t = static_cast<int>(signal.cols());
  if (depth < 1 || depth > t) {
    throw ParameterError("hankel: depth " + std::to_string(depth) + " needs 1 <= depth <= samples (" +
                         std::to_string(t) + ")");
  }
  const int cols = t - depth + 1;
  Matrix h(ch * depth, cols);
  for (int i = 0; i < depth; ++i) {
    for (int j = 0; j < cols; ++j) h.block(i * ch, j, ch, 1) = signal.col(i + j);
  }
  return h;
}

RankReport numerical_rank(const Matrix& m) {
  RankReport r;
  r.rows = static_cast<int>(m.rows());
  if (m.size() == 0) return r;
  Eigen::BDCSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();
  const double tol = s(0) * 1e-10;
  for (Eigen::Index i = 0; i < s.size(); ++i) r.rank += s(i) > tol ? 1 : 0;
  r.full_row_rank = r.rank == r.rows;
  return r;
}

RankReport check_persistent_excitation(const Matrix& signal, int depth) {
  return numerical_rank(hankel(signal, depth));
}

int required_samples(int inputs, int t_ini, int horizon, int order) {
  return (inputs + 1) * (t_ini + horizon + order) - 1;
}

void validate(const MdlaaConfig& cfg, int inputs, int order) {
  if (cfg.t_ini < 1) throw ConfigError("mdlaa: T_ini must be >= 1");
  if (cfg.n_ap < 2) throw ConfigError("mdlaa: N_ap must be >= 2");
  if (cfg.n_ac < 1 || cfg.n_ac > cfg.n_ap - 1) throw ConfigError("mdlaa: N_ac must satisfy 1 <= N_ac <= N_ap - 1");
  if (!(cfg.budget_fraction >= 0.0) || !std::isfinite(cfg.budget_fraction)) {
    throw ConfigError("mdlaa: budget fraction must be >= 0");
  }
  if (!(cfg.q_weight >= 0.0) || !(cfg.r_weight >= 0.0)) throw ConfigError("mdlaa: Q and R must be PSD");
  if (!(cfg.sample_s > 0.0)) throw ConfigError("mdlaa: sample period must be > 0");
  if (cfg.k_max < 1) throw ConfigError("mdlaa: k_max must be >= 1");
  if (cfg.t_a != 0) {
    const int need = required_samples(inputs, cfg.t_ini, cfg.n_ap, order);
    if (cfg.t_a < need) {
      std::ostringstream os;
      os << "mdlaa: T_a = " << cfg.t_a << " violates T_a >= (|L|+1)(T_ini+N_ap+n)-1 = (" << inputs << "+1)("
         << cfg.t_ini << "+" << cfg.n_ap << "+" << order << ")-1 = " << need;
      throw ConfigError(os.str());
    }
  }
}

Matrix multisine(int samples, double sample_s, const std::vector<double>& bounds, const Excitation& ex, int order) {
  const auto ch = static_cast<int>(bounds.size());
  const int sines = ex.sines_per_bus > 0 ? ex.sines_per_bus : order;
  const double f_hi = std::min(ex.f_max_hz, 0.49 / sample_s);
  std::mt19937_64 rng(ex.seed);
  // One frequency per slot of the band, slots dealt to channels at random.
  const int slots = ch * sines;
  const double width = (f_hi - ex.f_min_hz) / slots;
  std::vector<int> slot(slots);
  std::iota(slot.begin(), slot.end(), 0);
  std::shuffle(slot.begin(), slot.end(), rng);
  Matrix u = Matrix::Zero(ch, samples);
  for (int c = 0; c < ch; ++c) {
    const double amp = ex.amplitude * bounds[c] / sines;
    for (int s = 0; s < sines; ++s) {
      const double f = ex.f_min_hz + width * (slot[c * sines + s] + 0.25 + 0.5 * uniform(rng));
      const double phase = kTwoPi * uniform(rng);
      for (int k = 0; k < samples; ++k) u(c, k) += amp * std::sin(kTwoPi * f * k * sample_s + phase);
    }
  }
  return u;
}

void save_record_csv(const OfflineRecord& r, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write offline record " + path.string());
  out << "# sample_s=" << std::setprecision(17) << r.sample_s << "\n";
  for (Eigen::Index i = 0; i < r.inputs.rows(); ++i) out << (i ? "," : "") << "u" << i;
  for (Eigen::Index i = 0; i < r.outputs.rows(); ++i) out << ",y" << i;
  out << "\n";
  for (int k = 0; k < r.samples(); ++k) {
    for (Eigen::Index i = 0; i < r.inputs.rows(); ++i) out << (i ? "," : "") << r.inputs(i, k);
    for (Eigen::Index i = 0; i < r.outputs.rows(); ++i) out << "," << r.outputs(i, k);
    out << "\n";
  }
}

OfflineRecord load_record_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read offline record " + path.string());
  OfflineRecord r;
  std::string line;
  std::getline(in, line);
  if (line.rfind("# sample_s=", 0) != 0) throw ConfigError(path.string() + ":1: missing sample_s header");
  r.sample_s = std::stod(line.substr(11));
  std::getline(in, line);
  int n_in = 0, n_out = 0;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) (cell.rfind('u', 0) == 0 ? n_in : n_out)++;
  }
  std::vector<std::vector<double>> rows;
  int lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (static_cast<int>(row.size()) != n_in + n_out) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": wrong column count");
    }
    rows.push_back(std::move(row));
  }
  const auto t = static_cast<Eigen::Index>(rows.size());
  r.inputs.resize(n_in, t);
  r.outputs.resize(n_out, t);
  for (Eigen::Index k = 0; k < t; ++k) {
    for (int i = 0; i < n_in; ++i) r.inputs(i, k) = rows[k][i];
    for (int i = 0; i < n_out; ++i) r.outputs(i, k) = rows[k][n_in + i];
  }
  return r;
}

HankelBlocks build_blocks(const OfflineRecord& r, int t_ini, int horizon) {
  const int depth = t_ini + horizon;
  const Matrix hu = hankel(r.inputs, depth);
  const Matrix hy = hankel(r.outputs, depth);
  const auto m = r.inputs.rows();
  const auto p = r.outputs.rows();
  HankelBlocks b;
  b.t_ini = t_ini;
  b.horizon = horizon;
  b.up = hu.topRows(t_ini * m);
  b.uf = hu.bottomRows(horizon * m);
  b.yp = hy.topRows(t_ini * p);
  b.yf = hy.bottomRows(horizon * p);
  return b;
}

AttackQp::AttackQp(HankelBlocks blocks, QpWeights weights, std::vector<double> p_max)
    : blocks_(std::move(blocks)), weights_(weights) {
  const int n = blocks_.horizon;
  inputs_ = static_cast<int>(blocks_.uf.rows()) / n;
  outputs_ = static_cast<int>(blocks_.yf.rows()) / n;
  if (static_cast<int>(p_max.size()) != inputs_) throw ParameterError("AttackQp: one bound per input channel");
  upper_.resize(n * inputs_);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < inputs_; ++i) {
      if (!(p_max[i] >= 0.0)) throw ParameterError("AttackQp: bounds must be >= 0");
      upper_(k * inputs_ + i) = p_max[i];
    }
  }

  const auto cols = blocks_.uf.cols();
  const auto ini_rows = blocks_.up.rows() + blocks_.yp.rows();
  Matrix m_ini(ini_rows, cols);
  m_ini << blocks_.up, blocks_.yp;

  const Matrix uf_pinv = pinv(blocks_.uf);
  const Matrix null_proj = Matrix::Identity(cols, cols) - uf_pinv * blocks_.uf;
  g2_ = pinv(m_ini * null_proj);
  g1_ = uf_pinv - g2_ * (m_ini * uf_pinv);
  phi_ = blocks_.yf * g1_;
  psi_ = blocks_.yf * g2_;

  Matrix all(ini_rows + blocks_.uf.rows() + blocks_.yf.rows(), cols);
  all << m_ini, blocks_.uf, blocks_.yf;
  const double smax = all.size() ? Eigen::BDCSVD<Matrix>(all).singularValues()(0) : 0.0;
  lambda_ = weights_.lambda_scale * smax * smax;

  const auto np = upper_.size();
  hessian_ = 2.0 * (weights_.q * phi_.transpose() * phi_ + weights_.r * Matrix::Identity(np, np) +
                    lambda_ * g1_.transpose() * g1_);
  hessian_ = 0.5 * (hessian_ + hessian_.transpose());
  const double lmax = np ? Eigen::SelfAdjointEigenSolver<Matrix>(hessian_, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff()
                         : 0.0;
  step_ = lmax > 0.0 ? 1.0 / lmax : 1.0;
}

Vector AttackQp::project(Vector p) const { return p.cwiseMax(-upper_).cwiseMin(upper_); }

Vector AttackQp::linear_term(const Vector& b_ini, double omega_ref) const {
  const Vector offset = psi_ * b_ini - Vector::Constant(psi_.rows(), omega_ref);
  return 2.0 * (weights_.q * phi_.transpose() * offset + lambda_ * g1_.transpose() * (g2_ * b_ini));
}

double AttackQp::objective(const Vector& p_f, const Vector& p_ini, const Vector& w_ini, double omega_ref) const {
  Vector b(p_ini.size() + w_ini.size());
  b << p_ini, w_ini;
  const Vector g = g1_ * p_f + g2_ * b;
  const Vector e = blocks_.yf * g - Vector::Constant(blocks_.yf.rows(), omega_ref);
  return weights_.q * e.squaredNorm() + weights_.r * p_f.squaredNorm() + lambda_ * g.squaredNorm();
}

PredictorSolution AttackQp::solve(const Vector& p_ini, const Vector& w_ini, double omega_ref, int max_iterations,
                                  double tolerance, const Vector* warm) const {
  if (p_ini.size() != blocks_.up.rows() || w_ini.size() != blocks_.yp.rows()) {
    throw ParameterError("AttackQp::solve: initial windows do not match the Hankel blocks");
  }
  Vector b(p_ini.size() + w_ini.size());
  b << p_ini, w_ini;
  const Vector c = linear_term(b, omega_ref);
  const double scale = 1.0 + c.cwiseAbs().maxCoeff();
  auto grad = [&](const Vector& p) -> Vector { return hessian_ * p + c; };
  auto kkt = [&](const Vector& p) { return (p - project(p - grad(p))).cwiseAbs().maxCoeff() / scale; };
  auto value = [&](const Vector& p) { return 0.5 * p.dot(hessian_ * p) + c.dot(p); };

  PredictorSolution sol;
  Vector x = project(warm != nullptr && warm->size() == upper_.size() ? *warm : Vector::Zero(upper_.size()));
  Vector y = x;
  double t = 1.0;
  double fx = value(x);
  int it = 0;
  double res = kkt(x);
  while (res > tolerance && it < max_iterations) {
    ++it;
    const Vector next = project(y - step_ * grad(y));
    const double fn = value(next);
    if (fn > fx) {
      // Adaptive restart: drop momentum and take a plain projected step.
      t = 1.0;
      y = x;
      const Vector plain = project(x - step_ * grad(x));
      fx = value(plain);
      x = plain;
      y = x;
    } else {
      const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = next + ((t - 1.0) / tn) * (next - x);
      x = next;
      fx = fn;
      t = tn;
    }
    if (it % 10 == 0) res = kkt(x);
  }
  res = kkt(x);

  sol.p_f = x;
  sol.g = g1_ * x + g2_ * b;
  sol.omega_f = blocks_.yf * sol.g;
  sol.objective = objective(x, p_ini, w_ini, omega_ref);
  sol.kkt_residual = res;
  sol.iterations = it;

  Matrix m(blocks_.up.rows() + blocks_.yp.rows() + blocks_.uf.rows(), blocks_.up.cols());
  m << blocks_.up, blocks_.yp, blocks_.uf;
  Vector rhs(m.rows());
  rhs << b, x;
  sol.eq_residual = (m * sol.g - rhs).cwiseAbs().maxCoeff() / (1.0 + rhs.cwiseAbs().maxCoeff());
  sol.relaxed = sol.eq_residual > 1e-6;
  return sol;
}

MdlaaAgent::MdlaaAgent(const MdlaaConfig& cfg, OfflineRecord record, std::vector<double> p_max)
    : cfg_(cfg),
      qp_(build_blocks(record, cfg.t_ini, cfg.n_ap), QpWeights{cfg.q_weight, cfg.r_weight, cfg.lambda_scale},
          std::move(p_max)) {
  last_input_ = Vector::Zero(qp_.inputs());
}

Matrix MdlaaAgent::ini_inputs() const {
  const auto n = std::min<std::size_t>(cfg_.t_ini, past_inputs_.size());
  Matrix out(qp_.inputs(), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) out.col(i) = past_inputs_[past_inputs_.size() - n + i];
  return out;
}

Matrix MdlaaAgent::ini_outputs() const {
  const auto n = std::min<std::size_t>(cfg_.t_ini, past_outputs_.size());
  Matrix out(qp_.outputs(), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) out.col(i) = past_outputs_[past_outputs_.size() - n + i];
  return out;
}

bool MdlaaAgent::target_reached(const Vector& measured) const {
  const double mean = measured.mean();
  return cfg_.omega_ref_hz < 0.0 ? mean <= cfg_.omega_ref_hz : mean >= cfg_.omega_ref_hz;
}

MdlaaAgent::Step MdlaaAgent::on_sample(const Vector& measured, bool active) {
  if (measured.size() != qp_.outputs()) throw ParameterError("MdlaaAgent: wrong measurement size");
  Step out;
  out.input = Vector::Zero(qp_.inputs());

  if (active && status_ == Status::Running) {
    const bool reached = target_reached(measured);
    const bool exhausted = applied_ >= cfg_.k_max;
    const bool keep = cfg_.literal_loop ? (!exhausted || !reached) : (!exhausted && !reached);
    if (!keep) status_ = reached ? Status::TargetReached : Status::Exhausted;
  }
  if (status_ != Status::Running) {
    out.finished = true;
  } else if (active) {
    const auto t_ini = static_cast<std::size_t>(cfg_.t_ini);
    if (plan_pos_ >= plan_.size() && past_inputs_.size() >= t_ini) {
      const Vector p_ini = stack(past_inputs_, past_inputs_.size() - t_ini, t_ini);
      const Vector w_ini = stack(past_outputs_, past_outputs_.size() - t_ini, t_ini);
      const auto sol = qp_.solve(p_ini, w_ini, cfg_.omega_ref_hz, cfg_.max_iterations, cfg_.kkt_tolerance,
                                 warm_.size() ? &warm_ : nullptr);
      plan_.clear();
      const int m = qp_.inputs();
      for (int k = 0; k < cfg_.n_ac; ++k) plan_.push_back(sol.p_f.segment(k * m, m));
      plan_pos_ = 0;
      // Shift the solution forward as the next warm start.
      warm_ = Vector::Zero(sol.p_f.size());
      const auto keep_len = sol.p_f.size() - cfg_.n_ac * m;
      warm_.head(keep_len) = sol.p_f.tail(keep_len);
      warm_.tail(cfg_.n_ac * m) = sol.p_f.tail(m).replicate(cfg_.n_ac, 1);
      ++solves_;
      out.solved = true;
      out.relaxed = sol.relaxed;
      out.kkt_residual = sol.kkt_residual;
      out.iterations = sol.iterations;
    }
    if (plan_pos_ < plan_.size()) {
      out.input = plan_[plan_pos_++];
      ++applied_;
    }
  }
  past_outputs_.push_back(measured);
  past_inputs_.push_back(out.input);
  last_input_ = out.input;
  // Only the latest ini window is ever read.
  const std::size_t keep = static_cast<std::size_t>(cfg_.t_ini) + 1;
  if (past_inputs_.size() > 4 * keep) {
    past_inputs_.erase(past_inputs_.begin(), past_inputs_.end() - static_cast<std::ptrdiff_t>(keep));
    past_outputs_.erase(past_outputs_.begin(), past_outputs_.end() - static_cast<std::ptrdiff_t>(keep));
  }
  return out;
}

}  // namespace laasim
