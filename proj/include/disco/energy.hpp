#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "disco/param.hpp"

namespace disco {

enum class Activation { LogCosh, Tanh, Softplus };
enum class EnergyVariant { LogCoshSingle, TwoLayer, DeepStack };

std::string to_string(Activation a);
std::string to_string(EnergyVariant v);
Activation activation_from_string(const std::string& s);
EnergyVariant energy_variant_from_string(const std::string& s);

/// Shape of the controller energy
///   omega_0 = xi,  omega_{l+1} = sigma(W_l omega_l + b_l),  Phi = r^T omega_L.
/// `widths[l]` is the per-node output width of layer l. The first layer
/// reads the L_xi-hop neighborhood of each node; later layers are
/// node-local, so Phi is a sum of per-node terms.
struct EnergySpec {
  EnergyVariant variant = EnergyVariant::LogCoshSingle;
  std::vector<int> widths{4};
  Activation activation = Activation::LogCosh;
  bool biases = true;
  bool trainable_readout = false;

  int depth() const { return static_cast<int>(widths.size()); }

  /// Phi = sum_i 1^T logcosh(W_i xi_i + b_i).
  static EnergySpec logcosh_single(int width);
  /// Phi_i = w_i sigma(W_{i,2} sigma(W_{i,1} xi_i)).
  static EnergySpec two_layer(int width1, int width2, Activation activation = Activation::LogCosh);
  /// `depth` chained log-cosh layers of equal width, summed at the end.
  static EnergySpec deep_stack(int width, int depth = 5);
};

/// One parameter set theta_k of the energy.
struct EnergyParams {
  std::vector<Parameter> weights;
  std::vector<Parameter> biases;
  Parameter readout;
};

/// Gradients of v^T dPhi/dxi with respect to xi (that is, H v) and to every
/// energy parameter.
struct EnergyGradientVjp {
  Eigen::VectorXd d_xi;
  std::vector<Eigen::MatrixXd> d_weights;
  std::vector<Eigen::MatrixXd> d_biases;
  Eigen::MatrixXd d_readout;
};

double energy_value(const EnergySpec& spec, const EnergyParams& theta, const Eigen::VectorXd& xi);
Eigen::VectorXd energy_gradient(const EnergySpec& spec, const EnergyParams& theta, const Eigen::VectorXd& xi);
Eigen::MatrixXd energy_hessian(const EnergySpec& spec, const EnergyParams& theta, const Eigen::VectorXd& xi);
/// Hessian-vector product H v.
Eigen::VectorXd energy_hessian_vector(const EnergySpec& spec, const EnergyParams& theta, const Eigen::VectorXd& xi,
                                      const Eigen::VectorXd& v);
EnergyGradientVjp energy_gradient_vjp(const EnergySpec& spec, const EnergyParams& theta, const Eigen::VectorXd& xi,
                                      const Eigen::VectorXd& v);

/// Overflow-safe scalar log(cosh(z)).
double log_cosh(double z);

}  // namespace disco
