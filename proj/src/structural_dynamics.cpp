#include "seisfrag/structural_dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace seisfrag::structure {

namespace {

// |x|^e with a multiplication fast path for integral exponents.
inline double abs_pow(double x, double e, int int_e) {
  const double a = std::abs(x);
  if (int_e >= 0) {
    double r = 1.0;
    for (int i = 0; i < int_e; ++i) r *= a;
    return r;
  }
  return std::pow(a, e);
}

inline int integral_exponent(double e) {
  return (e >= 0.0 && e <= 16.0 && e == std::floor(e)) ? static_cast<int>(e) : -1;
}

}  // namespace

BoucWenParams BoucWenParams::with_yield_displacement(double delta_y, double alpha, double n) {
  BoucWenParams p;
  p.alpha = alpha;
  p.n = n;
  p.delta_y = delta_y;
  p.a_bw = 1.0;
  p.gamma = 1.0 / std::pow(2.0 * delta_y, n);
  p.eta = p.gamma;
  return p;
}

double BoucWenParams::z_ultimate() const { return std::pow(a_bw / (gamma + eta), 1.0 / n); }

void BoucWenParams::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("BoucWenParams: alpha must lie in [0, 1]");
  if (!(n >= 1.0)) throw DomainError("BoucWenParams: n must be at least 1");
  if (!(gamma + eta > 0.0)) throw DomainError("BoucWenParams: gamma + eta must be positive");
  if (!std::isfinite(z_ultimate())) throw DomainError("BoucWenParams: z_u is not finite");
}

ShearFrameModel ShearFrameModel::table2() {
  ShearFrameModel m;
  m.masses = {1.0e6, 1.0e6, 1.0e6};
  m.dampings = {1.73e6, 1.73e6, 1.73e6};
  m.stiffnesses = {3.0e8, 2.4e8, 1.5e8};
  m.bw.assign(3, BoucWenParams::with_yield_displacement(0.01));
  return m;
}

void ShearFrameModel::validate() const {
  const std::size_t n = masses.size();
  if (n == 0 || dampings.size() != n || stiffnesses.size() != n || bw.size() != n)
    throw DomainError("ShearFrameModel: inconsistent story counts");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(masses[i] > 0.0 && dampings[i] > 0.0 && stiffnesses[i] > 0.0))
      throw DomainError("ShearFrameModel: masses, dampings and stiffnesses must be positive");
    bw[i].validate();
  }
}

Eigen::MatrixXd ShearFrameModel::mass_matrix() const {
  return Eigen::Map<const Eigen::VectorXd>(masses.data(), masses.size()).asDiagonal();
}

namespace {

Eigen::MatrixXd tridiagonal(const std::vector<double>& story) {
  const auto n = static_cast<Eigen::Index>(story.size());
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) += story[i];
    if (i + 1 < n) {
      k(i, i) += story[i + 1];
      k(i, i + 1) = k(i + 1, i) = -story[i + 1];
    }
  }
  return k;
}

}  // namespace

Eigen::MatrixXd ShearFrameModel::stiffness_matrix() const { return tridiagonal(stiffnesses); }
Eigen::MatrixXd ShearFrameModel::damping_matrix() const { return tridiagonal(dampings); }

double bw_rate(double v_dot, double z, const BoucWenParams& p) {
  const int ie = integral_exponent(p.n - 1.0);
  const double zn1 = abs_pow(z, p.n - 1.0, ie);
  return p.a_bw * v_dot - p.gamma * std::abs(v_dot) * zn1 * z - p.eta * v_dot * zn1 * std::abs(z);
}

double restoring_force(double v, double z, std::size_t story, const ShearFrameModel& model) {
  if (story >= model.stories()) throw DomainError("restoring_force: story index out of range");
  const double a = model.bw[story].alpha;
  return model.stiffnesses[story] * (a * v + (1.0 - a) * z);
}

namespace {

// State layout: [v_0..v_{n-1}, v'_0..v'_{n-1}, z_0..z_{n-1}].
class ShearFrameRhs {
 public:
  explicit ShearFrameRhs(const ShearFrameModel& m)
      : m_(m), n_(m.stories()), force_(n_ + 1, 0.0), accel_(n_, 0.0), exps_(n_) {
    for (std::size_t i = 0; i < n_; ++i) exps_[i] = integral_exponent(m.bw[i].n - 1.0);
  }

  void operator()(const double* s, double ag, double* ds) {
    const double* v = s;
    const double* vd = s + n_;
    const double* z = s + 2 * n_;
    for (std::size_t i = 0; i < n_; ++i) {
      const BoucWenParams& p = m_.bw[i];
      force_[i] = m_.dampings[i] * vd[i] +
                  m_.stiffnesses[i] * (p.alpha * v[i] + (1.0 - p.alpha) * z[i]);
      const double zn1 = abs_pow(z[i], p.n - 1.0, exps_[i]);
      ds[2 * n_ + i] = p.a_bw * vd[i] - p.gamma * std::abs(vd[i]) * zn1 * z[i] -
                       p.eta * vd[i] * zn1 * std::abs(z[i]);
    }
    force_[n_] = 0.0;
    for (std::size_t j = 0; j < n_; ++j) accel_[j] = -ag + (force_[j + 1] - force_[j]) / m_.masses[j];
    for (std::size_t i = 0; i < n_; ++i) {
      ds[i] = vd[i];
      ds[n_ + i] = i == 0 ? accel_[0] : accel_[i] - accel_[i - 1];
    }
  }

 private:
  const ShearFrameModel& m_;
  std::size_t n_;
  std::vector<double> force_;
  std::vector<double> accel_;
  std::vector<int> exps_;
};

}  // namespace

ResponseRecord integrate(const ShearFrameModel& model, const gm::AccelTimeSeries& ag,
                         const IntegrationOptions& options) {
  model.validate();
  ag.validate();
  if (options.substeps < 1) throw DomainError("integrate: substeps must be at least 1");
  const std::size_t n = model.stories();
  const std::size_t dim = 3 * n;
  const std::size_t steps = ag.size();

  std::vector<double> state(dim, 0.0);
  auto load_initial = [&](const std::vector<double>& src, std::size_t offset) {
    if (src.empty()) return;
    if (src.size() != n) throw DomainError("integrate: initial state has wrong story count");
    std::copy(src.begin(), src.end(), state.begin() + static_cast<std::ptrdiff_t>(offset));
  };
  load_initial(options.initial_drift, 0);
  load_initial(options.initial_velocity, n);
  load_initial(options.initial_z, 2 * n);

  std::vector<double> z_max(n);
  for (std::size_t i = 0; i < n; ++i) z_max[i] = model.bw[i].z_ultimate();

  ResponseRecord rec;
  rec.dt = ag.dt;
  rec.drifts.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(steps));
  rec.velocities.resize(rec.drifts.rows(), rec.drifts.cols());
  rec.hysteretic.resize(rec.drifts.rows(), rec.drifts.cols());
  auto store = [&](std::size_t t) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i), c = static_cast<Eigen::Index>(t);
      rec.drifts(r, c) = state[i];
      rec.velocities(r, c) = state[n + i];
      rec.hysteretic(r, c) = state[2 * n + i];
    }
  };
  store(0);

  ShearFrameRhs rhs(model);
  std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
  const double h = ag.dt / options.substeps;
  const double g = options.gravity;
  for (std::size_t t = 0; t + 1 < steps; ++t) {
    const double a0 = g * ag.values[t];
    const double da = g * (ag.values[t + 1] - ag.values[t]);
    for (int sub = 0; sub < options.substeps; ++sub) {
      const double th = static_cast<double>(sub) / options.substeps;
      const double dth = 1.0 / options.substeps;
      rhs(state.data(), a0 + da * th, k1.data());
      for (std::size_t j = 0; j < dim; ++j) tmp[j] = state[j] + 0.5 * h * k1[j];
      rhs(tmp.data(), a0 + da * (th + 0.5 * dth), k2.data());
      for (std::size_t j = 0; j < dim; ++j) tmp[j] = state[j] + 0.5 * h * k2[j];
      rhs(tmp.data(), a0 + da * (th + 0.5 * dth), k3.data());
      for (std::size_t j = 0; j < dim; ++j) tmp[j] = state[j] + h * k3[j];
      rhs(tmp.data(), a0 + da * (th + dth), k4.data());
      for (std::size_t j = 0; j < dim; ++j)
        state[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
      // The exact flow never leaves [-z_u, z_u]; remove round-off overshoot.
      for (std::size_t i = 0; i < n; ++i)
        state[2 * n + i] = std::clamp(state[2 * n + i], -z_max[i], z_max[i]);
    }
    for (double s : state)
      if (!std::isfinite(s))
        throw SolverError("integrate: non-finite state", ag.dt * static_cast<double>(t + 1));
    store(t + 1);
  }
  return rec;
}

double max_interstory_drift(const ResponseRecord& r) {
  if (r.drifts.size() == 0) throw DomainError("max_interstory_drift: empty record");
  return r.drifts.cwiseAbs().maxCoeff();
}

double fundamental_period(const ShearFrameModel& model) {
  model.validate();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(model.stiffness_matrix(),
                                                                   model.mass_matrix());
  if (solver.info() != Eigen::Success) throw DomainError("fundamental_period: eigen-solve failed");
  return 2.0 * kPi / std::sqrt(solver.eigenvalues().minCoeff());
}

double mechanical_energy(const ShearFrameModel& model, const Eigen::VectorXd& drift,
                         const Eigen::VectorXd& drift_velocity, const Eigen::VectorXd& z) {
  double energy = 0.0, floor_velocity = 0.0;
  for (std::size_t i = 0; i < model.stories(); ++i) {
    const auto j = static_cast<Eigen::Index>(i);
    const BoucWenParams& p = model.bw[i];
    floor_velocity += drift_velocity[j];
    energy += 0.5 * model.masses[i] * floor_velocity * floor_velocity;
    energy += 0.5 * model.stiffnesses[i] * p.alpha * drift[j] * drift[j];
    energy += 0.5 * model.stiffnesses[i] * (1.0 - p.alpha) * z[j] * z[j] / p.a_bw;
  }
  return energy;
}

}  // namespace seisfrag::structure
