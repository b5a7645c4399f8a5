#include "disco/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>

#include "disco/error.hpp"

namespace disco {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace detail {

double state_weight(const LossConfig& cfg, double t, double horizon) {
  return cfg.q_scale * std::pow(cfg.gamma, horizon - t);
}

double collision_penalty(const PHNetwork& plant, const VectorXd& x, const LossConfig& cfg, VectorXd* grad,
                         double grad_scale) {
  if (!plant.position_offset()) return 0.0;
  const int m = plant.nodes();
  const int off = *plant.position_offset();
  double total = 0.0;
  for (int i = 0; i < m; ++i) {
    const Eigen::Vector2d pi = x.segment<2>(plant.state_offset(i) + off);
    for (int j = i + 1; j < m; ++j) {
      const Eigen::Vector2d diff = pi - x.segment<2>(plant.state_offset(j) + off);
      const double d = diff.norm();
      if (d > cfg.safety_distance) continue;
      const double s = d + cfg.epsilon;
      total += 1.0 / (s * s);
      // the indicator jumps at d = D; use the zero subgradient there and at d = 0
      if (grad && d < cfg.safety_distance && d > 0.0) {
        const Eigen::Vector2d g = (grad_scale * -2.0 / (s * s * s) / d) * diff;
        grad->segment<2>(plant.state_offset(i) + off) += g;
        grad->segment<2>(plant.state_offset(j) + off) -= g;
      }
    }
  }
  return total;
}

}  // namespace detail

double loss_control(const Trajectory& traj, const PHNetwork& plant, const LossConfig& cfg) {
  const double horizon = traj.horizon();
  const VectorXd& target = plant.target();
  double sum = 0.0;
  for (int k = 0; k < traj.steps; ++k) {
    const VectorXd e = traj.plant_state(k) - target;
    sum += detail::state_weight(cfg, traj.times[k], horizon) * e.squaredNorm() +
           cfg.r_scale * traj.inputs[k].squaredNorm();
  }
  return traj.h * sum;
}

double loss_collision(const Trajectory& traj, const PHNetwork& plant, const LossConfig& cfg) {
  double sum = 0.0;
  for (int k = 0; k < traj.steps; ++k) sum += detail::collision_penalty(plant, traj.plant_state(k), cfg, nullptr);
  return traj.h * sum;
}

namespace {

template <class Fn>
void for_each_smoothed(const Controller& c, const LossConfig& cfg, Fn&& fn) {
  for (int k = 0; k + 1 < c.schedule_length(); ++k) {
    const EnergyParams& a = c.theta(k);
    const EnergyParams& b = c.theta(k + 1);
    for (std::size_t l = 0; l < a.weights.size(); ++l) fn(k, a.weights[l], b.weights[l]);
    if (cfg.smooth_biases)
      for (std::size_t l = 0; l < a.biases.size(); ++l) fn(k, a.biases[l], b.biases[l]);
    if (a.readout.trainable) fn(k, a.readout, b.readout);
  }
}

}  // namespace

double loss_weight_smoothness(const Controller& c, const LossConfig& cfg) {
  double sum = 0.0;
  for_each_smoothed(c, cfg, [&](int, const Parameter& a, const Parameter& b) {
    if (a.trainable) sum += (b.value - a.value).squaredNorm();
  });
  return cfg.h * sum;
}

LossBreakdown total_loss(const Trajectory& traj, const ClosedLoop& cl, const LossConfig& cfg) {
  LossBreakdown out;
  out.lx = loss_control(traj, cl.plant(), cfg);
  out.lca = loss_collision(traj, cl.plant(), cfg);
  out.rw = loss_weight_smoothness(cl.controller(), cfg);
  out.total = out.lx + cfg.alpha_ca * out.lca + cfg.alpha_w * out.rw;
  return out;
}

LossBreakdown evaluate_loss(const ClosedLoop& cl, const VectorXd& zeta0, const LossConfig& cfg) {
  const Trajectory traj = integrate(cl, zeta0, cfg.steps, cfg.h, Integrator::FE);
  return total_loss(traj, cl, cfg);
}

GradientReport backprop(const ClosedLoop& cl, const VectorXd& zeta0, const LossConfig& cfg) {
  const Trajectory traj = integrate(cl, zeta0, cfg.steps, cfg.h, Integrator::FE);
  const Controller& ctrl = cl.controller();
  const PHNetwork& plant = cl.plant();
  const int n = cl.plant_dim();
  const int q = cl.controller_dim();
  const double h = cfg.h;
  const double horizon = traj.horizon();

  GradientReport rep;
  rep.loss = total_loss(traj, cl, cfg);
  const auto params = ctrl.parameters();
  for (const Parameter* p : params) {
    rep.names.push_back(p->name);
    rep.grads.push_back(MatrixXd::Zero(p->value.rows(), p->value.cols()));
  }
  // parameter slots: 0 = A, 1 = K, 2 = Rc_factors, then per layer [W..., b..., w_out]
  const int depth = ctrl.energy_spec().depth();
  const auto theta_slot = [&](int layer) { return 3 + layer * (2 * depth + 1); };

  const MatrixXd mt = cl.system_matrix().transpose();
  const MatrixXd& kmat = ctrl.K();
  const MatrixXd& gport = plant.port().data();
  MatrixXd gm = MatrixXd::Zero(n + q, n + q);
  MatrixXd& dk = rep.grads[1];

  VectorXd a = VectorXd::Zero(n + q);  // adjoint of zeta_{k+1}
  for (int k = traj.steps - 1; k >= 0; --k) {
    const VectorXd& z = traj.states[k];
    const int layer = traj.layers[k];
    const VectorXd x = z.head(n);
    const VectorXd xi = z.tail(q);
    const VectorXd g = cl.energy_gradient(z, layer);
    const VectorXd c = h * (mt * a);
    gm.noalias() += h * a * g.transpose();

    // input cost h u^T R u with u = -K^T dPhi/dxi
    const VectorXd e = (2.0 * h * cfg.r_scale) * traj.inputs[k];
    const VectorXd gxi = g.tail(q);
    dk.noalias() -= gxi * e.transpose();
    const VectorXd v_xi = c.tail(q) - kmat * e;

    VectorXd next = a;
    next.head(n) += plant.hessian(x) * c.head(n);
    next.head(n) += (2.0 * h * detail::state_weight(cfg, traj.times[k], horizon)) * (x - plant.target());
    if (cfg.alpha_ca != 0.0) {
      VectorXd gx = VectorXd::Zero(n);
      detail::collision_penalty(plant, x, cfg, &gx, cfg.alpha_ca * h);
      next.head(n) += gx;
    }

    const EnergyGradientVjp vjp = energy_gradient_vjp(ctrl.energy_spec(), ctrl.theta(layer), xi, v_xi);
    next.tail(q) += vjp.d_xi;
    const int slot = theta_slot(layer);
    for (int l = 0; l < depth; ++l) {
      rep.grads[slot + l] += vjp.d_weights[l];
      rep.grads[slot + depth + l] += vjp.d_biases[l];
    }
    rep.grads[slot + 2 * depth] += vjp.d_readout;
    a = std::move(next);
  }

  const MatrixXd g12 = gm.topRightCorner(n, q);
  const MatrixXd g21 = gm.bottomLeftCorner(q, n);
  const MatrixXd g22 = gm.bottomRightCorner(q, q);
  dk += g21 * gport.transpose() - (gport * g12).transpose();
  rep.grads[0] = g22 - g22.transpose();
  if (ctrl.options().rc_trainable) {
    const MatrixXd drc = -g22;
    rep.grads[2] = (drc + drc.transpose()) * ctrl.rc_factors().value;
  }

  if (cfg.alpha_w != 0.0) {
    std::map<const Parameter*, std::size_t> slot_of;
    for (std::size_t i = 0; i < params.size(); ++i) slot_of[params[i]] = i;
    const double s = 2.0 * cfg.alpha_w * h;
    for_each_smoothed(ctrl, cfg, [&](int, const Parameter& pa, const Parameter& pb) {
      if (!pa.trainable) return;
      const MatrixXd diff = pb.value - pa.value;
      rep.grads[slot_of.at(&pb)] += s * diff;
      rep.grads[slot_of.at(&pa)] -= s * diff;
    });
  }

  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->trainable)
      rep.grads[i].setZero();
    else
      rep.grads[i] = rep.grads[i].cwiseProduct(params[i]->mask);
  }
  return rep;
}

GradientReport fd_gradient_oracle(const ClosedLoop& cl, const VectorXd& zeta0, const LossConfig& cfg, double step) {
  ClosedLoop work = cl;
  GradientReport rep;
  rep.loss = evaluate_loss(work, zeta0, cfg);
  const auto params = work.controller().parameters();
  for (Parameter* p : params) {
    rep.names.push_back(p->name);
    MatrixXd g = MatrixXd::Zero(p->value.rows(), p->value.cols());
    if (p->trainable) {
      for (Eigen::Index r = 0; r < g.rows(); ++r)
        for (Eigen::Index c = 0; c < g.cols(); ++c) {
          if (p->mask(r, c) == 0.0) continue;
          const double orig = p->value(r, c);
          p->value(r, c) = orig + step;
          work.refresh();
          const double up = evaluate_loss(work, zeta0, cfg).total;
          p->value(r, c) = orig - step;
          work.refresh();
          const double down = evaluate_loss(work, zeta0, cfg).total;
          p->value(r, c) = orig;
          g(r, c) = (up - down) / (2.0 * step);
        }
      work.refresh();
    }
    rep.grads.push_back(std::move(g));
  }
  return rep;
}

double max_relative_error(const std::vector<MatrixXd>& a, const std::vector<MatrixXd>& b, double floor) {
  if (a.size() != b.size()) throw DimensionError("gradient lists differ in length");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].rows() != b[i].rows() || a[i].cols() != b[i].cols()) throw DimensionError("gradient shapes differ");
    for (Eigen::Index j = 0; j < a[i].size(); ++j) {
      const double x = a[i].data()[j], y = b[i].data()[j];
      const double denom = std::max({std::abs(x), std::abs(y), floor});
      worst = std::max(worst, std::abs(x - y) / denom);
    }
  }
  return worst;
}

void adam_step(const std::vector<Parameter*>& params, const std::vector<MatrixXd>& grads, AdamState& state,
               const AdamOptions& opts) {
  if (params.size() != grads.size()) throw DimensionError("adam_step: parameter and gradient lists differ");
  if (state.m.empty()) {
    for (const Parameter* p : params) {
      state.m.push_back(MatrixXd::Zero(p->value.rows(), p->value.cols()));
      state.v.push_back(MatrixXd::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (state.m.size() != params.size()) throw DimensionError("adam_step: optimizer state does not match parameters");
  ++state.step;
  const double c1 = 1.0 - std::pow(opts.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(opts.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    const MatrixXd& g = grads[i];
    if (g.rows() != p.value.rows() || g.cols() != p.value.cols())
      throw DimensionError("adam_step: gradient for " + p.name + " has wrong shape");
    if (!p.trainable) continue;
    state.m[i] = opts.beta1 * state.m[i] + (1.0 - opts.beta1) * g;
    state.v[i] = opts.beta2 * state.v[i] + (1.0 - opts.beta2) * g.cwiseAbs2();
    const MatrixXd mhat = state.m[i] / c1;
    const MatrixXd vhat = state.v[i] / c2;
    p.value.array() -= opts.lr * mhat.array() / (vhat.array().sqrt() + opts.eps);
    p.project();
  }
}

TrainResult train(const ClosedLoop& cl, const VectorXd& zeta0, const LossConfig& cfg, const TrainOptions& opts) {
  if (opts.epochs < 0) throw ValidationError("must be non-negative", "training.epochs");
  ClosedLoop work = cl;
  Controller last_good = work.controller();
  AdamState state;
  std::vector<LossBreakdown> history;
  std::optional<int> diverged;

  for (int epoch = 0; epoch <= opts.epochs; ++epoch) {
    GradientReport rep;
    try {
      if (epoch == opts.epochs) {
        history.push_back(evaluate_loss(work, zeta0, cfg));
        break;
      }
      rep = backprop(work, zeta0, cfg);
      if (!std::isfinite(rep.loss.total)) throw DivergenceError("loss is not finite", cfg.steps);
    } catch (const DivergenceError&) {
      diverged = epoch;
      break;
    }
    history.push_back(rep.loss);
    last_good = work.controller();
    adam_step(work.controller().parameters(), rep.grads, state, opts.adam);
    work.refresh();
    if (opts.on_epoch) opts.on_epoch(epoch, work.controller(), rep.loss);
  }
  if (diverged) return {last_good, history, diverged};
  return {work.controller(), history, diverged};
}

void write_loss_csv(const std::string& path, const std::vector<LossBreakdown>& history) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open for writing", path);
  out << "epoch,total,lx,lca,rw\n" << std::setprecision(17);
  for (std::size_t e = 0; e < history.size(); ++e)
    out << e << ',' << history[e].total << ',' << history[e].lx << ',' << history[e].lca << ',' << history[e].rw
        << '\n';
}

}  // namespace disco
