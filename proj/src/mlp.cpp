#include "disco/mlp.hpp"

#include <cmath>
#include <random>

#include "disco/error.hpp"
#include "disco/integrators.hpp"

namespace disco {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

const char* const kNames[] = {"W0", "b0", "W1", "b1", "W2", "b2"};

}  // namespace

std::vector<MatrixXd> MlpPolicy::masks(const MlpOptions& o) {
  const int m = o.comm.size();
  const std::vector<int> in(m, o.inputs), hid(m, o.hidden), out(m, o.outputs), one(m, 1);
  return {pattern_from_power(o.comm, 1, hid, in).scalar_mask(),
          pattern_from_power(o.comm, 1, hid, one).scalar_mask(),
          diagonal_pattern(hid, hid).scalar_mask(),
          MatrixXd::Ones(m * o.hidden, 1),
          diagonal_pattern(out, hid).scalar_mask(),
          MatrixXd::Ones(m * o.outputs, 1)};
}

MlpPolicy::MlpPolicy(MlpOptions opts) : opts_(std::move(opts)) {
  if (opts_.inputs <= 0 || opts_.hidden <= 0 || opts_.outputs <= 0)
    throw ValidationError("layer widths must be positive", "mlp");
  std::mt19937_64 rng(opts_.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto ms = masks(opts_);
  for (int p = 0; p < 6; ++p) {
    MatrixXd v = MatrixXd::Zero(ms[p].rows(), ms[p].cols());
    if (p % 2 == 0) {
      for (Eigen::Index r = 0; r < v.rows(); ++r) {
        const double scale = 1.0 / std::sqrt(std::max(1.0, ms[p].row(r).sum()));
        for (Eigen::Index c = 0; c < v.cols(); ++c)
          if (ms[p](r, c) != 0.0) v(r, c) = scale * normal(rng);
      }
    }
    params_.emplace_back(kNames[p], v, ms[p]);
  }
}

MlpPolicy::MlpPolicy(MlpOptions opts, std::vector<Parameter> params) : opts_(std::move(opts)), params_(std::move(params)) {
  const auto ms = masks(opts_);
  if (params_.size() != ms.size()) throw ValidationError("expected 6 parameter arrays (W0, b0, W1, b1, W2, b2)");
  for (std::size_t p = 0; p < ms.size(); ++p) {
    Parameter& par = params_[p];
    if (par.value.rows() != ms[p].rows() || par.value.cols() != ms[p].cols())
      throw DimensionError(std::string("MLP parameter ") + kNames[p] + " has the wrong shape");
    if (par.value.cwiseProduct(ms[p]) != par.value)
      throw ValidationError(std::string("MLP parameter ") + kNames[p] + " violates its sparsity pattern");
    par.name = kNames[p];
    par.mask = ms[p];
    par.trainable = true;
  }
}

VectorXd MlpPolicy::forward(const VectorXd& y) const {
  if (y.size() != params_[0].value.cols()) throw DimensionError("MLP input has wrong length");
  const VectorXd h0 = (params_[0].value * y + params_[1].value.rowwise().sum()).array().tanh();
  const VectorXd h1 = (params_[2].value * h0 + params_[3].value).array().tanh();
  return params_[4].value * h1 + params_[5].value;
}

VectorXd MlpPolicy::backward(const VectorXd& y, const VectorXd& adj_u, std::vector<MatrixXd>& grads) const {
  const VectorXd h0 = (params_[0].value * y + params_[1].value.rowwise().sum()).array().tanh();
  const VectorXd h1 = (params_[2].value * h0 + params_[3].value).array().tanh();
  grads[4] += adj_u * h1.transpose();
  grads[5] += adj_u;
  const VectorXd z1 = (params_[4].value.transpose() * adj_u).cwiseProduct((1.0 - h1.array().square()).matrix());
  grads[2] += z1 * h0.transpose();
  grads[3] += z1;
  const VectorXd z0 = (params_[2].value.transpose() * z1).cwiseProduct((1.0 - h0.array().square()).matrix());
  grads[0] += z0 * y.transpose();
  grads[1] += z0 * Eigen::RowVectorXd::Ones(grads[1].cols());
  return params_[0].value.transpose() * z0;
}

std::vector<Parameter*> MlpPolicy::parameters() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(&p);
  return out;
}

std::vector<const Parameter*> MlpPolicy::parameters() const {
  std::vector<const Parameter*> out;
  for (const auto& p : params_) out.push_back(&p);
  return out;
}

Eigen::Index MlpPolicy::trainable_count() const {
  Eigen::Index n = 0;
  for (const auto& p : params_) n += p.trainable_count();
  return n;
}

VectorXd mlp_baseline_forward(const MlpPolicy& policy, const VectorXd& y) { return policy.forward(y); }

MlpClosedLoop::MlpClosedLoop(PHNetwork plant, MlpPolicy policy) : plant_(std::move(plant)), policy_(std::move(policy)) {
  if (plant_.port_dim() != policy_.nodes() * policy_.options().inputs ||
      plant_.port_dim() != policy_.nodes() * policy_.options().outputs)
    throw DimensionError("MLP input/output sizes do not match the plant ports");
}

VectorXd MlpClosedLoop::input(const VectorXd& x) const { return policy_.forward(plant_.output(x)); }

VectorXd MlpClosedLoop::vector_field(const VectorXd& x) const { return plant_.dynamics(x, input(x)); }

Trajectory integrate(const MlpClosedLoop& cl, const VectorXd& x0, int steps, double h, Integrator method) {
  if (steps < 1) throw ValidationError("need at least one step");
  if (!(h > 0)) throw ValidationError("step size must be positive");
  if (x0.size() != cl.dim()) throw DimensionError("initial state has wrong length");
  Trajectory tr;
  tr.h = h;
  tr.steps = steps;
  tr.plant_dim = cl.dim();
  VectorXd x = x0;
  const auto f = [&](const VectorXd& s) { return cl.vector_field(s); };
  for (int k = 0; k <= steps; ++k) {
    tr.times.push_back(k * h);
    tr.states.push_back(x);
    tr.inputs.push_back(cl.input(x));
    tr.outputs.push_back(cl.plant().output(x));
    if (k == steps) break;
    tr.layers.push_back(0);
    x = method == Integrator::FE ? fe_step(f, x, h) : dp5_step(f, x, h);
    check_finite(x, k + 1);
  }
  return tr;
}

LossBreakdown mlp_total_loss(const Trajectory& traj, const PHNetwork& plant, const LossConfig& cfg) {
  LossBreakdown out;
  out.lx = loss_control(traj, plant, cfg);
  out.lca = loss_collision(traj, plant, cfg);
  out.total = out.lx + cfg.alpha_ca * out.lca;
  return out;
}

GradientReport mlp_backprop(const MlpClosedLoop& cl, const VectorXd& x0, const LossConfig& cfg) {
  const Trajectory traj = integrate(cl, x0, cfg.steps, cfg.h, Integrator::FE);
  const PHNetwork& plant = cl.plant();
  const double h = cfg.h;
  const double horizon = traj.horizon();
  const MatrixXd dt = plant.drift_matrix().transpose();
  const MatrixXd& g = plant.port().data();

  GradientReport rep;
  rep.loss = mlp_total_loss(traj, plant, cfg);
  for (const Parameter* p : cl.policy().parameters()) {
    rep.names.push_back(p->name);
    rep.grads.push_back(MatrixXd::Zero(p->value.rows(), p->value.cols()));
  }

  VectorXd a = VectorXd::Zero(cl.dim());
  for (int k = traj.steps - 1; k >= 0; --k) {
    const VectorXd& x = traj.states[k];
    const MatrixXd hv = plant.hessian(x);
    const VectorXd c = h * a;
    const VectorXd adj_u = g * c + (2.0 * h * cfg.r_scale) * traj.inputs[k];
    const VectorXd adj_y = cl.policy().backward(traj.outputs[k], adj_u, rep.grads);
    VectorXd next = a + hv * (dt * c + g.transpose() * adj_y);
    next += (2.0 * h * detail::state_weight(cfg, traj.times[k], horizon)) * (x - plant.target());
    if (cfg.alpha_ca != 0.0) detail::collision_penalty(plant, x, cfg, &next, cfg.alpha_ca * h);
    a = std::move(next);
  }
  const auto params = cl.policy().parameters();
  for (std::size_t i = 0; i < params.size(); ++i) rep.grads[i] = rep.grads[i].cwiseProduct(params[i]->mask);
  return rep;
}

GradientReport mlp_fd_gradient(const MlpClosedLoop& cl, const VectorXd& x0, const LossConfig& cfg, double step) {
  MlpClosedLoop work = cl;
  const auto loss = [&]() {
    return mlp_total_loss(integrate(work, x0, cfg.steps, cfg.h, Integrator::FE), work.plant(), cfg).total;
  };
  GradientReport rep;
  rep.loss = mlp_total_loss(integrate(work, x0, cfg.steps, cfg.h, Integrator::FE), work.plant(), cfg);
  for (Parameter* p : work.policy().parameters()) {
    rep.names.push_back(p->name);
    MatrixXd gr = MatrixXd::Zero(p->value.rows(), p->value.cols());
    for (Eigen::Index r = 0; r < gr.rows(); ++r)
      for (Eigen::Index c = 0; c < gr.cols(); ++c) {
        if (p->mask(r, c) == 0.0) continue;
        const double orig = p->value(r, c);
        p->value(r, c) = orig + step;
        const double up = loss();
        p->value(r, c) = orig - step;
        const double down = loss();
        p->value(r, c) = orig;
        gr(r, c) = (up - down) / (2.0 * step);
      }
    rep.grads.push_back(std::move(gr));
  }
  return rep;
}

MlpTrainResult mlp_train(const MlpClosedLoop& cl, const VectorXd& x0, const LossConfig& cfg, int epochs,
                         const AdamOptions& adam) {
  if (epochs < 0) throw ValidationError("must be non-negative", "training.epochs");
  MlpClosedLoop work = cl;
  MlpPolicy last_good = work.policy();
  AdamState state;
  std::vector<LossBreakdown> history;
  std::optional<int> diverged;
  for (int epoch = 0; epoch <= epochs; ++epoch) {
    GradientReport rep;
    try {
      if (epoch == epochs) {
        history.push_back(
            mlp_total_loss(integrate(work, x0, cfg.steps, cfg.h, Integrator::FE), work.plant(), cfg));
        break;
      }
      rep = mlp_backprop(work, x0, cfg);
      if (!std::isfinite(rep.loss.total)) throw DivergenceError("loss is not finite", cfg.steps);
    } catch (const DivergenceError&) {
      diverged = epoch;
      break;
    }
    history.push_back(rep.loss);
    last_good = work.policy();
    adam_step(work.policy().parameters(), rep.grads, state, adam);
  }
  if (diverged) return {last_good, history, diverged};
  return {work.policy(), history, diverged};
}

}  // namespace disco
