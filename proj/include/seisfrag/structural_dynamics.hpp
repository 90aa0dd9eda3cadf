#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "seisfrag/common.hpp"
#include "seisfrag/gm_model.hpp"

namespace seisfrag::structure {

/// Bouc-Wen hysteresis constants of one story.
struct BoucWenParams {
  double alpha = 0.1;     ///< post-yield stiffness ratio
  double n = 5.0;         ///< smoothness exponent
  double gamma = 0.0;     ///< [1/m^n]
  double eta = 0.0;       ///< [1/m^n]
  double a_bw = 1.0;      ///< amplitude
  double delta_y = 0.01;  ///< yield displacement [m]

  /// gamma = eta = 1 / (2 delta_y)^n, alpha = 0.1, n = 5, A = 1.
  static BoucWenParams with_yield_displacement(double delta_y, double alpha = 0.1, double n = 5.0);

  /// Ultimate hysteretic displacement (A / (gamma + eta))^(1/n).
  double z_ultimate() const;
  void validate() const;
};

/// Shear building idealized with one interstory spring-damper per story;
/// story 0 is the ground story.
struct ShearFrameModel {
  std::vector<double> masses;       ///< floor masses [kg]
  std::vector<double> dampings;     ///< interstory dampers [N s / m]
  std::vector<double> stiffnesses;  ///< initial interstory stiffnesses [N/m]
  std::vector<BoucWenParams> bw;

  /// Three-story toy frame with Bouc-Wen stories.
  static ShearFrameModel table2();

  std::size_t stories() const { return masses.size(); }
  void validate() const;
  Eigen::MatrixXd mass_matrix() const;
  /// Elastic (initial-stiffness) matrix in floor coordinates.
  Eigen::MatrixXd stiffness_matrix() const;
  Eigen::MatrixXd damping_matrix() const;
};

/// Interstory drift and hysteretic displacement histories, one row per story.
struct ResponseRecord {
  double dt = 0.0;
  Eigen::MatrixXd drifts;
  Eigen::MatrixXd velocities;
  Eigen::MatrixXd hysteretic;
};

/// Bouc-Wen rate z' = A v' - gamma |v'| |z|^(n-1) z - eta v' |z|^n.
double bw_rate(double v_dot, double z, const BoucWenParams& p);

/// q_i = k_i [alpha v + (1 - alpha) z]; story is 0-based.
double restoring_force(double v, double z, std::size_t story, const ShearFrameModel& model);

struct IntegrationOptions {
  int substeps = 10;             ///< RK4 steps per ground-motion sample
  double gravity = kGravity;     ///< g -> m/s^2
  /// Optional initial interstory drifts, velocities and hysteretic states.
  std::vector<double> initial_drift;
  std::vector<double> initial_velocity;
  std::vector<double> initial_z;
};

/// Fixed-step RK4 on the (v, v', z) state of every story under base
/// acceleration ag (in g, linearly interpolated across sub-steps).
/// Throws SolverError on a non-finite state.
ResponseRecord integrate(const ShearFrameModel& model, const gm::AccelTimeSeries& ag,
                         const IntegrationOptions& options = {});

/// max over stories and time of |v_i(t)|.
double max_interstory_drift(const ResponseRecord& r);

/// 2 pi / sqrt(lambda_min) of M^-1 K with initial stiffnesses.
double fundamental_period(const ShearFrameModel& model);

/// Kinetic + elastic + hysteretic energy of a state (interstory coordinates).
/// Non-increasing under free vibration whenever gamma >= |eta|.
double mechanical_energy(const ShearFrameModel& model, const Eigen::VectorXd& drift,
                         const Eigen::VectorXd& drift_velocity, const Eigen::VectorXd& z);

}  // namespace seisfrag::structure
