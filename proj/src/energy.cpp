#include "disco/energy.hpp"

#include <cmath>

#include "disco/error.hpp"

namespace disco {

double log_cosh(double z) {
  const double a = std::abs(z);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::LogCosh: return "logcosh";
    case Activation::Tanh: return "tanh";
    case Activation::Softplus: return "softplus";
  }
  return "?";
}

std::string to_string(EnergyVariant v) {
  switch (v) {
    case EnergyVariant::LogCoshSingle: return "logcosh_single";
    case EnergyVariant::TwoLayer: return "two_layer";
    case EnergyVariant::DeepStack: return "deep_stack";
  }
  return "?";
}

Activation activation_from_string(const std::string& s) {
  if (s == "logcosh") return Activation::LogCosh;
  if (s == "tanh") return Activation::Tanh;
  if (s == "softplus") return Activation::Softplus;
  throw ValidationError("unknown activation '" + s + "'");
}

EnergyVariant energy_variant_from_string(const std::string& s) {
  if (s == "logcosh_single") return EnergyVariant::LogCoshSingle;
  if (s == "two_layer") return EnergyVariant::TwoLayer;
  if (s == "deep_stack") return EnergyVariant::DeepStack;
  throw ValidationError("unknown energy variant '" + s + "'");
}

EnergySpec EnergySpec::logcosh_single(int width) {
  return {EnergyVariant::LogCoshSingle, {width}, Activation::LogCosh, true, false};
}

EnergySpec EnergySpec::two_layer(int width1, int width2, Activation activation) {
  return {EnergyVariant::TwoLayer, {width1, width2}, activation, false, true};
}

EnergySpec EnergySpec::deep_stack(int width, int depth) {
  return {EnergyVariant::DeepStack, std::vector<int>(depth, width), Activation::LogCosh, true, false};
}

namespace {

struct Act {
  Activation kind;

  double f(double z) const {
    switch (kind) {
      case Activation::LogCosh: return log_cosh(z);
      case Activation::Tanh: return std::tanh(z);
      case Activation::Softplus: return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
    }
    return 0.0;
  }
  double d1(double z) const {
    switch (kind) {
      case Activation::LogCosh: return std::tanh(z);
      case Activation::Tanh: {
        const double t = std::tanh(z);
        return 1.0 - t * t;
      }
      case Activation::Softplus: return 0.5 * (1.0 + std::tanh(0.5 * z));
    }
    return 0.0;
  }
  double d2(double z) const {
    switch (kind) {
      case Activation::LogCosh: {
        const double t = std::tanh(z);
        return 1.0 - t * t;
      }
      case Activation::Tanh: {
        const double t = std::tanh(z);
        return -2.0 * t * (1.0 - t * t);
      }
      case Activation::Softplus: {
        const double s = 0.5 * (1.0 + std::tanh(0.5 * z));
        return s * (1.0 - s);
      }
    }
    return 0.0;
  }
  Eigen::VectorXd map(const Eigen::VectorXd& z, double (Act::*fn)(double) const) const {
    Eigen::VectorXd out(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) out(i) = (this->*fn)(z(i));
    return out;
  }
};

struct Pass {
  std::vector<Eigen::VectorXd> omega;  // L + 1 layer inputs/outputs
  std::vector<Eigen::VectorXd> z;      // L pre-activations
  std::vector<Eigen::VectorXd> s1;     // sigma'(z)
  std::vector<Eigen::VectorXd> delta;  // L + 1 backward signals; delta[0] = dPhi/dxi
};

void check_shapes(const EnergySpec& spec, const EnergyParams& theta, const Eigen::VectorXd& xi) {
  const auto depth = static_cast<std::size_t>(spec.depth());
  if (theta.weights.size() != depth || theta.biases.size() != depth)
    throw DimensionError("energy parameters do not match the energy depth");
  Eigen::Index in = xi.size();
  for (std::size_t l = 0; l < depth; ++l) {
    if (theta.weights[l].value.cols() != in)
      throw DimensionError("energy layer " + std::to_string(l) + " expects input of length " +
                           std::to_string(theta.weights[l].value.cols()) + ", got " + std::to_string(in));
    in = theta.weights[l].value.rows();
    if (theta.biases[l].value.rows() != in) throw DimensionError("energy bias has wrong length");
  }
  if (theta.readout.value.rows() != in) throw DimensionError("energy readout has wrong length");
}

Pass run(const EnergySpec& spec, const EnergyParams& theta, const Eigen::VectorXd& xi, bool backward) {
  check_shapes(spec, theta, xi);
  const Act act{spec.activation};
  const int depth = spec.depth();
  Pass p;
  p.omega.reserve(depth + 1);
  p.omega.push_back(xi);
  for (int l = 0; l < depth; ++l) {
    Eigen::VectorXd z = theta.weights[l].value * p.omega[l] + theta.biases[l].value.col(0);
    p.omega.push_back(act.map(z, &Act::f));
    p.s1.push_back(act.map(z, &Act::d1));
    p.z.push_back(std::move(z));
  }
  if (backward) {
    p.delta.assign(depth + 1, Eigen::VectorXd());
    p.delta[depth] = theta.readout.value.col(0);
    for (int l = depth - 1; l >= 0; --l)
      p.delta[l] = theta.weights[l].value.transpose() * p.s1[l].cwiseProduct(p.delta[l + 1]);
  }
  return p;
}

}  // namespace

double energy_value(const EnergySpec& spec, const EnergyParams& theta, const Eigen::VectorXd& xi) {
  const Pass p = run(spec, theta, xi, false);
  return theta.readout.value.col(0).dot(p.omega.back());
}

Eigen::VectorXd energy_gradient(const EnergySpec& spec, const EnergyParams& theta, const Eigen::VectorXd& xi) {
  return run(spec, theta, xi, true).delta[0];
}

Eigen::VectorXd energy_hessian_vector(const EnergySpec& spec, const EnergyParams& theta, const Eigen::VectorXd& xi,
                                      const Eigen::VectorXd& v) {
  if (v.size() != xi.size()) throw DimensionError("Hessian-vector product: direction has wrong length");
  const Pass p = run(spec, theta, xi, true);
  const Act act{spec.activation};
  const int depth = spec.depth();
  // forward-mode tangent of the gradient computation along v
  std::vector<Eigen::VectorXd> dz(depth);
  Eigen::VectorXd domega = v;
  for (int l = 0; l < depth; ++l) {
    dz[l] = theta.weights[l].value * domega;
    domega = p.s1[l].cwiseProduct(dz[l]);
  }
  Eigen::VectorXd ddelta = Eigen::VectorXd::Zero(theta.readout.value.rows());
  for (int l = depth - 1; l >= 0; --l) {
    const Eigen::VectorXd s2 = act.map(p.z[l], &Act::d2);
    const Eigen::VectorXd dg = s2.cwiseProduct(dz[l]).cwiseProduct(p.delta[l + 1]) + p.s1[l].cwiseProduct(ddelta);
    ddelta = theta.weights[l].value.transpose() * dg;
  }
  return ddelta;
}

Eigen::MatrixXd energy_hessian(const EnergySpec& spec, const EnergyParams& theta, const Eigen::VectorXd& xi) {
  const Eigen::Index n = xi.size();
  if (spec.depth() == 1) {
    const Pass p = run(spec, theta, xi, false);
    const Act act{spec.activation};
    const Eigen::VectorXd d = act.map(p.z[0], &Act::d2).cwiseProduct(theta.readout.value.col(0));
    const Eigen::MatrixXd& w = theta.weights[0].value;
    return w.transpose() * d.asDiagonal() * w;
  }
  Eigen::MatrixXd h(n, n);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    e(j) = 1.0;
    h.col(j) = energy_hessian_vector(spec, theta, xi, e);
    e(j) = 0.0;
  }
  return 0.5 * (h + h.transpose());
}

EnergyGradientVjp energy_gradient_vjp(const EnergySpec& spec, const EnergyParams& theta, const Eigen::VectorXd& xi,
                                      const Eigen::VectorXd& v) {
  if (v.size() != xi.size()) throw DimensionError("energy VJP: cotangent has wrong length");
  const Pass p = run(spec, theta, xi, true);
  const Act act{spec.activation};
  const int depth = spec.depth();

  EnergyGradientVjp out;
  out.d_weights.resize(depth);
  out.d_biases.resize(depth);
  std::vector<Eigen::VectorXd> adj_z(depth);

  // reverse through the backward chain: delta_l = W_l^T (sigma'(z_l) .* delta_{l+1})
  Eigen::VectorXd adj_delta = v;
  for (int l = 0; l < depth; ++l) {
    const Eigen::MatrixXd& w = theta.weights[l].value;
    const Eigen::VectorXd g = p.s1[l].cwiseProduct(p.delta[l + 1]);
    const Eigen::VectorXd adj_g = w * adj_delta;
    out.d_weights[l] = g * adj_delta.transpose();
    adj_z[l] = act.map(p.z[l], &Act::d2).cwiseProduct(p.delta[l + 1]).cwiseProduct(adj_g);
    adj_delta = p.s1[l].cwiseProduct(adj_g);
  }
  out.d_readout = adj_delta;

  // reverse through the forward chain; Phi itself is not part of v^T dPhi/dxi
  Eigen::VectorXd adj_omega = Eigen::VectorXd::Zero(p.omega.back().size());
  for (int l = depth - 1; l >= 0; --l) {
    adj_z[l] += p.s1[l].cwiseProduct(adj_omega);
    out.d_weights[l] += adj_z[l] * p.omega[l].transpose();
    out.d_biases[l] = adj_z[l];
    adj_omega = theta.weights[l].value.transpose() * adj_z[l];
  }
  out.d_xi = adj_omega;

  for (int l = 0; l < depth; ++l) {
    out.d_weights[l] = out.d_weights[l].cwiseProduct(theta.weights[l].mask);
    out.d_biases[l] = out.d_biases[l].cwiseProduct(theta.biases[l].mask);
  }
  out.d_readout = out.d_readout.cwiseProduct(theta.readout.mask);
  return out;
}

}  // namespace disco
