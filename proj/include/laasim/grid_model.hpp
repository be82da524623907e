#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <vector>

#include "laasim/grid_case.hpp"

namespace laasim {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Imaginary-admittance blocks split by generator (G) and load (L) buses.
/// Off-diagonal entries hold the branch susceptance; diagonals are zero.
struct AdmittancePartition {
  Matrix gg, gl, lg, ll;
  BusIndex index;

  /// [[GG, GL], [LG, LL]]
  Matrix assembled() const;
};

/// diag(X * 1)
Matrix row_sum_diag(const Matrix& x);

AdmittancePartition build_admittance(const GridCase& c);

/// E x' = A x + B (P_LS + eps), state (delta | theta | omega).
struct DescriptorSystem {
  Matrix e, a, b;
  int n_gen = 0;
  int n_load = 0;

  int dim() const { return 2 * n_gen + n_load; }
};

DescriptorSystem build_descriptor(const GridCase& c, const AdmittancePartition& adm);

/// x' = A' x + B' P_L on state (delta | omega), theta eliminated.
struct ReducedSystem {
  Matrix a;        // 2G x 2G
  Matrix b;        // 2G x L, load-deviation input
  Matrix h_inv;    // (H_LG^1 + H_LL^1 - H_LL)^-1
  Matrix h_lg;     // L x G
  int n_gen = 0;
  int n_load = 0;

  /// theta = H_inv (H_LG delta - P_L)
  Vector theta(const Vector& delta, const Vector& load) const;
};

/// Eliminates the algebraic load-angle rows. Throws ModelError naming the
/// load buses that have no path to a generator when the block is singular.
ReducedSystem reduce(const DescriptorSystem& desc, const BusIndex& index);
ReducedSystem reduce(const DescriptorSystem& desc);

/// Per-load-bus DLAA gain matrix (L x G) sensing a weighted frequency.
/// `gains` are pu/Hz per load bus; `sensing` weights sum to one over generators.
Matrix dlaa_gain_matrix(const Vector& gains, const Vector& sensing);

/// A* = A' + B' [0, -K_LG]. `gains` per load bus in pu/Hz, sensing weights
/// over generators (system average by default). Throws ParameterError for
/// negative gains.
Matrix dlaa_matrix(const ReducedSystem& red, const Vector& gains, const Vector& sensing);

/// Inertia-weighted averaging vector over generators.
Vector inertia_weights(const GridCase& c);

/// Reduced system augmented with optional governor/turbine lag states and a
/// generator setpoint input. With no lags enabled, `a` equals A' exactly.
struct LinearPlant {
  Matrix a;
  Matrix b_load;  // n x L
  Matrix b_set;   // n x G
  int n_gen = 0;
  int n_load = 0;
  std::vector<int> gov_state;   // -1 when the generator has no lag
  std::vector<int> turb_state;
  Vector inertia;               // model units
  Matrix theta_from_delta;      // H_inv H_LG
  Matrix h_inv;

  int dim() const { return static_cast<int>(a.rows()); }
  int delta_index(int g) const { return g; }
  int omega_index(int g) const { return n_gen + g; }
};

struct PlantOptions {
  bool zero_integral_gain = false;
};

LinearPlant build_plant(const GridCase& c, const PlantOptions& opt = {});
LinearPlant build_plant(const GridCase& c, const ReducedSystem& red);

/// Dynamic state owned by the orchestrator.
struct SimState {
  Vector x;
  Vector load;  // load deviation per load bus, pu
  double time = 0.0;

  static SimState zero(const LinearPlant& p);
  Vector omega(const LinearPlant& p) const { return x.segment(p.n_gen, p.n_gen); }
  Vector delta(const LinearPlant& p) const { return x.head(p.n_gen); }
  Vector theta(const LinearPlant& p) const;
  double frequency_hz(const LinearPlant& p, int g) const { return rad_to_hz(x(p.omega_index(g))); }
};

/// Extra load deviation evaluated at every integrator stage from the stage
/// state. Used for ideal, continuously sensing feedback attacks.
using StageLoadFeedback = std::function<Vector(const Vector& x)>;

/// Classical 4th-order fixed step with inputs held over the step. Throws
/// DivergenceError when the new state is not finite.
SimState step(const SimState& s, const LinearPlant& p, const Vector& load, const Vector& setpoints,
              double dt, const StageLoadFeedback* feedback = nullptr);

/// Same integration directly on a reduced system (no setpoint channel).
SimState step(const SimState& s, const ReducedSystem& red, const Vector& load, double dt);

/// Largest real part over the spectrum. When the matrix has the structural
/// uniform-angle null vector (no integral term), that single zero eigenvalue
/// is deflated by referencing angles to the first generator.
double spectral_abscissa(const Matrix& a, int n_gen);

/// Angles for every case bus (GridCase::buses order): delta on generator
/// buses, theta on load buses.
Vector bus_angles(const GridCase& c, const BusIndex& idx, const Vector& delta, const Vector& theta);

/// residual_i = P_i + d_i - U_i sum_j U_j (G_ij cos th_ij + B_ij sin th_ij)
/// for each bus in `eval_buses`. Vectors are in GridCase::buses order;
/// voltages default to a flat 1.0 pu profile.
Vector power_flow_residual(const GridCase& c, const Vector& angles, const Vector& p_sched,
                           const Vector& altered, std::span<const int> eval_buses,
                           const Vector* voltages = nullptr);

}  // namespace laasim
