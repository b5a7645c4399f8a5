#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "disco/blocklin.hpp"
#include "disco/simulate.hpp"

namespace disco {

class MlpClosedLoop;

/// Norms of backward sensitivity matrices d zeta_j / d zeta_i, i <= j,
/// along an FE trajectory.
struct BsmMap {
  int steps = 0;
  /// (j, i, norm) for every computed pair with i <= j.
  struct Entry {
    int j, i;
    double norm;
  };
  std::vector<Entry> entries;
  /// Extremes over pairs with i < j (the diagonal is identically 1).
  double min_norm = 0.0, max_norm = 0.0;
  /// ||d zeta_N / d zeta_{N-s}|| for s = 0..N.
  std::vector<double> from_end;
  /// ||d zeta_{N/2} / d zeta_{N/2-s}|| for s = 0..N/2.
  std::vector<double> from_mid;
};

struct BsmOptions {
  /// Every pair i <= j; otherwise only the two plotted families.
  bool all_pairs = true;
  /// Keep per-pair entries (large for long trajectories).
  bool keep_entries = true;
  PowerIterationOptions power{};
};

BsmMap bsm_map(const ClosedLoop& cl, const Trajectory& traj, const BsmOptions& opts = {});
void write_bsm_csv(const std::string& path, const BsmMap& map);

struct ConservedFormReport {
  double max_drift = 0.0;
  std::vector<double> drift;  // per recorded step, starting at 0 for t = 0
};

/// Integrates the variational equation Z' = (Psi) d2P Z alongside the state
/// and reports max_t ||Z Psi Z^T - Psi||_max / ||Psi||_max. Z here is the
/// forward Jacobian d zeta(t) / d zeta(0). Refuses dissipative loops.
ConservedFormReport check_conserved_form(const ClosedLoop& cl, const Eigen::VectorXd& zeta0, int steps, double h,
                                         Integrator method, const LayerSchedule& schedule = {});

struct DissipationReport {
  bool monotone = true;
  /// Largest (P_{k+1} - P_k) / (1 + |P_k|), clipped below at 0.
  double max_violation = 0.0;
  std::vector<double> energy;
};

/// P along a rollout with theta frozen at `layer`. Monotone iff every
/// increase is at most tolerance * (1 + |P|).
DissipationReport check_dissipation(const ClosedLoop& cl, const Eigen::VectorXd& zeta0, int steps, double h,
                                    Integrator method, int layer, double tolerance = 1e-7);
/// Static MLP policies carry no closed-loop energy to certify.
DissipationReport check_dissipation(const MlpClosedLoop& cl, const Eigen::VectorXd& zeta0, int steps, double h,
                                    Integrator method, int layer, double tolerance = 1e-7) = delete;

struct DistributedReport {
  bool masks_ok = false;
  bool radii_ok = false;
  bool output_perturbation_ok = false;
  bool state_perturbation_ok = false;
  double max_output_response = 0.0;
  double max_state_response = 0.0;
  int pairs_checked = 0;

  bool passed() const { return masks_ok && radii_ok && output_perturbation_ok && state_perturbation_ok; }
};

/// Static mask/radius checks plus perturbation tests at random (xi, y):
/// y_j for j outside the R_y-hop neighborhood of i and xi_j outside the
/// R_xi-hop neighborhood must not move u_i or xi_dot_i by more than 1e-12.
DistributedReport verify_distributed(const Controller& c, int output_radius_limit, int comm_radius_limit,
                                     int trials = 3, std::uint64_t seed = 0);

struct CollisionCount {
  /// Entries of a pair into the region d < D.
  int events = 0;
  /// (step, pair) samples with d < D.
  int step_pairs = 0;
};

CollisionCount count_collisions(const Trajectory& traj, const PHNetwork& plant, double safety_distance);

}  // namespace disco
