#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "laasim/grid_model.hpp"

namespace laasim {

/// Block Hankel matrix of a multichannel signal (channels x samples) with
/// `depth` block rows. Entry block (i, j) is sample i + j; channels are
/// contiguous within a block row.
Matrix hankel(const Matrix& signal, int depth);

struct RankReport {
  int rank = 0;
  int rows = 0;
  bool full_row_rank = false;
};

/// Numerical rank via singular values, tolerance sigma_max * 1e-10.
RankReport numerical_rank(const Matrix& m);

/// Persistent excitation of order `depth`: the Hankel matrix has full row rank.
RankReport check_persistent_excitation(const Matrix& signal, int depth);

/// (inputs + 1) * (t_ini + horizon + order) - 1
int required_samples(int inputs, int t_ini, int horizon, int order);

struct Excitation {
  double amplitude = 0.1;  // fraction of each bus's attack bound
  double f_min_hz = 0.02;
  double f_max_hz = 4.5;
  int sines_per_bus = 0;   // 0: enough for the required excitation order
  std::uint64_t seed = 7;
};

struct MdlaaConfig {
  int t_a = 0;            // collected samples; 0: the minimum bound
  int t_ini = 5;
  int n_ap = 10;          // prediction horizon
  int n_ac = 3;           // inputs applied per solve
  int order = 0;          // system order in the bound; 0: plant dimension
  double omega_ref_hz = -3.2;
  double budget_fraction = 0.3;  // p_max_i = budget_fraction * P0_i
  double q_weight = 1.0;
  double r_weight = 1e-3;
  double lambda_scale = 1e-6;
  int k_max = 3000;       // applied samples before giving up
  double sample_s = 0.1;
  double start_s = 30.0;
  bool literal_loop = false;  // continue while k < k_max OR target not reached
  bool collect_in_run = false;  // collect offline data inside the attacked run
  std::optional<std::filesystem::path> replay_offline;
  std::optional<std::filesystem::path> save_offline;
  std::vector<int> buses;        // empty: every load bus with nonzero load
  std::vector<int> sensed_gens;  // empty: every generator
  Excitation excitation;
  int max_iterations = 10000;
  double kkt_tolerance = 1e-6;
};

/// Throws ConfigError naming the violated inequality.
void validate(const MdlaaConfig& cfg, int inputs, int order);

/// Excitation inputs (inputs x samples): per-channel multi-sine with distinct
/// seeded frequencies and phases, scaled by amplitude * bound_i.
Matrix multisine(int samples, double sample_s, const std::vector<double>& bounds, const Excitation& ex, int order);

/// Offline data record: applied attack inputs and sensed frequency
/// deviations (Hz), one column per sample.
struct OfflineRecord {
  Matrix inputs;
  Matrix outputs;
  double sample_s = 0.1;

  int samples() const { return static_cast<int>(inputs.cols()); }
};

void save_record_csv(const OfflineRecord& r, const std::filesystem::path& path);
OfflineRecord load_record_csv(const std::filesystem::path& path);

struct HankelBlocks {
  Matrix up, uf, yp, yf;
  int t_ini = 0;
  int horizon = 0;

  int columns() const { return static_cast<int>(up.cols()); }
};

HankelBlocks build_blocks(const OfflineRecord& r, int t_ini, int horizon);

struct QpWeights {
  double q = 1.0;
  double r = 1e-3;
  double lambda_scale = 1e-6;
};

struct PredictorSolution {
  Vector g;
  Vector p_f;      // stacked by time, channel-major
  Vector omega_f;
  double objective = 0.0;
  double kkt_residual = 0.0;
  double eq_residual = 0.0;
  int iterations = 0;
  bool relaxed = false;  // ini window fitted in the least-squares sense
};

/// Data-driven predictor with the equality constraints eliminated:
/// g = G1 p_f + G2 [p_ini; w_ini], w_f = Phi p_f + Psi [p_ini; w_ini].
class AttackQp {
 public:
  AttackQp(HankelBlocks blocks, QpWeights weights, std::vector<double> p_max);

  /// omega_ref is the target per sensed channel (Hz), applied at every step
  /// of the horizon. `warm` seeds the solver.
  PredictorSolution solve(const Vector& p_ini, const Vector& w_ini, double omega_ref, int max_iterations = 10000,
                          double tolerance = 1e-6, const Vector* warm = nullptr) const;

  /// Objective of a candidate p_f (with its induced g).
  double objective(const Vector& p_f, const Vector& p_ini, const Vector& w_ini, double omega_ref) const;

  const HankelBlocks& blocks() const { return blocks_; }
  const Matrix& hessian() const { return hessian_; }
  const Vector& upper() const { return upper_; }
  double lambda() const { return lambda_; }
  int inputs() const { return inputs_; }
  int outputs() const { return outputs_; }

 private:
  Vector linear_term(const Vector& b_ini, double omega_ref) const;
  Vector project(Vector p) const;

  HankelBlocks blocks_;
  QpWeights weights_;
  int inputs_ = 0;
  int outputs_ = 0;
  Vector upper_;
  Matrix g1_, g2_, phi_, psi_;
  Matrix hessian_;
  double lambda_ = 0.0;
  double step_ = 0.0;
};

/// Receding-horizon attack agent. Consumes one sensed sample per attack
/// period and emits the input to hold for the next period.
class MdlaaAgent {
 public:
  MdlaaAgent(const MdlaaConfig& cfg, OfflineRecord record, std::vector<double> p_max);

  struct Step {
    Vector input;         // per attack channel, pu
    bool solved = false;
    bool relaxed = false;
    bool finished = false;
    double kkt_residual = 0.0;
    int iterations = 0;
  };

  /// `measured` are the sensed deviations (Hz) at this sample instant.
  /// Inactive samples only extend the history with a zero input.
  Step on_sample(const Vector& measured, bool active = true);

  enum class Status { Running, TargetReached, Exhausted };
  Status status() const { return status_; }
  int applied() const { return applied_; }
  int solves() const { return solves_; }
  const AttackQp& qp() const { return qp_; }
  /// Most recent T_ini applied inputs / measurements, oldest first.
  Matrix ini_inputs() const;
  Matrix ini_outputs() const;

 private:
  bool target_reached(const Vector& measured) const;

  MdlaaConfig cfg_;
  AttackQp qp_;
  std::vector<Vector> past_inputs_;
  std::vector<Vector> past_outputs_;
  std::vector<Vector> plan_;
  std::size_t plan_pos_ = 0;
  Vector warm_;
  Vector last_input_;
  Status status_ = Status::Running;
  int applied_ = 0;
  int solves_ = 0;
};

}  // namespace laasim
