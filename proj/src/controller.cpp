#include "disco/controller.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "disco/blocklin.hpp"
#include "disco/error.hpp"

namespace disco {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void check_radius_condition(int output_radius, int energy_radius, std::optional<int> allowed_output_radius,
                            std::optional<int> allowed_comm_radius) {
  if (output_radius < 0) throw ValidationError("must be non-negative", "controller.output_radius");
  if (energy_radius < 0) throw ValidationError("must be non-negative", "controller.energy_radius");
  if (allowed_output_radius && output_radius > *allowed_output_radius)
    throw ValidationError("L_y = " + std::to_string(output_radius) + " exceeds the measurement radius " +
                              std::to_string(*allowed_output_radius),
                          "controller.output_radius");
  if (allowed_comm_radius && output_radius + 2 * energy_radius > *allowed_comm_radius)
    throw ValidationError("L_y + 2 L_xi = " + std::to_string(output_radius + 2 * energy_radius) +
                              " exceeds the communication radius " + std::to_string(*allowed_comm_radius),
                          "controller.energy_radius");
}

namespace {

void check_options(const ControllerOptions& o) {
  const auto m = static_cast<std::size_t>(o.comm.size());
  if (o.xi_dims.size() != m) throw ValidationError("need one entry per node", "controller.xi_dims");
  if (o.y_dims.size() != m) throw ValidationError("need one entry per node", "controller.y_dims");
  for (int d : o.xi_dims)
    if (d <= 0) throw ValidationError("must be positive", "controller.xi_dims");
  for (int d : o.y_dims)
    if (d <= 0) throw ValidationError("must be positive", "controller.y_dims");
  if (o.layers < 1) throw ValidationError("must be at least 1", "controller.layers");
  if (o.energy.depth() < 1) throw ValidationError("energy needs at least one layer", "controller.energy.widths");
  for (int w : o.energy.widths)
    if (w <= 0) throw ValidationError("must be positive", "controller.energy.widths");
  if (o.rc_scale < 0) throw ValidationError("must be non-negative", "controller.rc_scale");
  for (int d : o.xi_dims)
    if (o.rc_damped < 0 || o.rc_damped > d)
      throw ValidationError("must lie in [0, xi_dim]", "controller.rc_damped");
  if (!o.xi_initial.empty()) {
    if (o.xi_initial.size() != m) throw ValidationError("need one entry per node", "controller.xi_initial");
    for (std::size_t i = 0; i < m; ++i)
      if (o.xi_initial[i].size() != o.xi_dims[i])
        throw ValidationError("length must equal xi_dims", "controller.xi_initial[" + std::to_string(i) + "]");
  }
  check_radius_condition(o.output_radius, o.energy_radius, o.allowed_output_radius, o.allowed_comm_radius);
}

MatrixXd rc_default(const ControllerOptions& o) {
  const int n = block_total(o.xi_dims);
  MatrixXd r = MatrixXd::Zero(n, n);
  const auto off = block_offsets(o.xi_dims);
  for (std::size_t i = 0; i < o.xi_dims.size(); ++i)
    for (int d = 0; d < o.rc_damped; ++d) r(off[i] + d, off[i] + d) = o.rc_scale;
  return r;
}

MatrixXd blockdiag_mask(const std::vector<int>& dims) {
  return diagonal_pattern(dims, dims).scalar_mask();
}

std::vector<int> widths_per_node(int nodes, int width) { return std::vector<int>(nodes, width); }

// Entries of a Gaussian draw with std 1/sqrt(row fan-in), fan-in counted
// over the structural mask `fan`, then restricted to `mask`.
MatrixXd gaussian_init(std::mt19937_64& rng, const MatrixXd& fan, const MatrixXd& mask) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd out = MatrixXd::Zero(mask.rows(), mask.cols());
  for (Eigen::Index r = 0; r < mask.rows(); ++r) {
    const double fan_in = std::max(1.0, fan.row(r).sum());
    const double scale = 1.0 / std::sqrt(fan_in);
    for (Eigen::Index c = 0; c < mask.cols(); ++c)
      if (mask(r, c) != 0.0) out(r, c) = scale * normal(rng);
  }
  return out;
}

}  // namespace

Eigen::MatrixXd skew_generator_mask(const ControllerOptions& opts) {
  const MatrixXd base = pattern_from_power(opts.comm, opts.output_radius, opts.xi_dims, opts.xi_dims).scalar_mask();
  const auto off = block_offsets(opts.xi_dims);
  MatrixXd mask = base;
  for (Eigen::Index r = 0; r < mask.rows(); ++r)
    for (Eigen::Index c = 0; c <= r; ++c) mask(r, c) = 0.0;
  if (!opts.j_diagonal_blocks)
    for (std::size_t i = 0; i < opts.xi_dims.size(); ++i)
      mask.block(off[i], off[i], opts.xi_dims[i], opts.xi_dims[i]).setZero();
  return mask;
}

Eigen::MatrixXd port_mask(const ControllerOptions& opts) {
  return pattern_from_power(opts.comm, opts.output_radius, opts.xi_dims, opts.y_dims).scalar_mask();
}

EnergyParams energy_masks(const ControllerOptions& opts) {
  const int m = opts.comm.size();
  const EnergySpec& spec = opts.energy;
  EnergyParams out;
  std::vector<int> in_dims = opts.xi_dims;
  for (int l = 0; l < spec.depth(); ++l) {
    const auto rows = widths_per_node(m, spec.widths[l]);
    const MatrixXd w = l == 0 ? pattern_from_power(opts.comm, opts.energy_radius, rows, in_dims).scalar_mask()
                              : diagonal_pattern(rows, in_dims).scalar_mask();
    const int n = block_total(rows);
    out.weights.emplace_back("W[" + std::to_string(l) + "]", w, w);
    const MatrixXd b = spec.biases ? MatrixXd::Ones(n, 1) : MatrixXd::Zero(n, 1);
    out.biases.emplace_back("b[" + std::to_string(l) + "]", b, b);
    in_dims = rows;
  }
  const MatrixXd r = MatrixXd::Ones(block_total(in_dims), 1);
  out.readout = Parameter("w_out", r, r, spec.trainable_readout);
  return out;
}

void Controller::init_layout() {
  check_options(opts_);
  xi_offsets_ = block_offsets(opts_.xi_dims);
  y_offsets_ = block_offsets(opts_.y_dims);
  if (!opts_.rc_trainable) rc_fixed_ = rc_default(opts_);
}

Controller::Controller(ControllerOptions opts) : opts_(std::move(opts)) {
  init_layout();
  std::mt19937_64 rng(opts_.seed);
  const int n = state_dim();

  const MatrixXd state_fan = pattern_from_power(opts_.comm, opts_.output_radius, opts_.xi_dims, opts_.xi_dims)
                                 .scalar_mask();
  const MatrixXd a_mask = skew_generator_mask(opts_);
  a_ = Parameter("A", gaussian_init(rng, state_fan, a_mask), a_mask);

  const MatrixXd k_mask = port_mask(opts_);
  k_ = Parameter("K", gaussian_init(rng, k_mask, k_mask), k_mask);

  const MatrixXd rc_mask = blockdiag_mask(opts_.xi_dims);
  if (opts_.rc_trainable) {
    MatrixXd l = rc_default(opts_).cwiseSqrt();
    rc_ = Parameter("Rc_factors", l, rc_mask);
  } else {
    rc_ = Parameter("Rc_factors", MatrixXd::Zero(n, n), MatrixXd::Zero(n, n), false);
  }

  EnergyParams first = energy_masks(opts_);
  for (int l = 0; l < opts_.energy.depth(); ++l) {
    const MatrixXd wm = first.weights[l].mask;
    first.weights[l].value = gaussian_init(rng, wm, wm);
    const MatrixXd bm = first.biases[l].mask;
    MatrixXd fan = MatrixXd::Zero(bm.rows(), 1);
    fan.col(0) = wm.rowwise().sum();
    first.biases[l].value = gaussian_init(rng, fan, bm);
  }
  const int copies = opts_.time_invariant ? 1 : opts_.layers;
  theta_.assign(copies, first);
  for (int k = 0; k < copies; ++k) {
    for (int l = 0; l < opts_.energy.depth(); ++l) {
      theta_[k].weights[l].name = "theta[" + std::to_string(k) + "].W[" + std::to_string(l) + "]";
      theta_[k].biases[l].name = "theta[" + std::to_string(k) + "].b[" + std::to_string(l) + "]";
    }
    theta_[k].readout.name = "theta[" + std::to_string(k) + "].w_out";
  }
}

Controller::Controller(ControllerOptions opts, Parameter a, Parameter k, Parameter rc, std::vector<EnergyParams> theta)
    : opts_(std::move(opts)), a_(std::move(a)), k_(std::move(k)), rc_(std::move(rc)), theta_(std::move(theta)) {
  init_layout();
  const int copies = opts_.time_invariant ? 1 : opts_.layers;
  if (static_cast<int>(theta_.size()) != copies)
    throw DimensionError("controller schedule has " + std::to_string(theta_.size()) + " layers, expected " +
                         std::to_string(copies));
  const auto expect = [](const Parameter& p, const MatrixXd& mask) {
    if (p.value.rows() != mask.rows() || p.value.cols() != mask.cols())
      throw DimensionError("parameter " + p.name + " has shape " + std::to_string(p.value.rows()) + "x" +
                           std::to_string(p.value.cols()) + ", expected " + std::to_string(mask.rows()) + "x" +
                           std::to_string(mask.cols()));
    if (p.mask != mask) throw ValidationError("parameter " + p.name + " carries an unexpected mask");
    if (p.value.cwiseProduct(mask) != p.value && p.trainable)
      throw ValidationError("parameter " + p.name + " is nonzero outside its mask");
  };
  expect(a_, skew_generator_mask(opts_));
  expect(k_, port_mask(opts_));
  const int n = state_dim();
  expect(rc_, opts_.rc_trainable ? blockdiag_mask(opts_.xi_dims) : MatrixXd(MatrixXd::Zero(n, n)));
  const EnergyParams masks = energy_masks(opts_);
  for (auto& t : theta_) {
    if (t.weights.size() != masks.weights.size() || t.biases.size() != masks.biases.size())
      throw DimensionError("energy layer count does not match the energy specification");
    for (std::size_t l = 0; l < masks.weights.size(); ++l) {
      expect(t.weights[l], masks.weights[l].mask);
      expect(t.biases[l], masks.biases[l].mask);
    }
    expect(t.readout, masks.readout.mask);
    t.readout.trainable = opts_.energy.trainable_readout;
  }
}

Eigen::MatrixXd Controller::J() const { return make_skew(a_.value); }

Eigen::MatrixXd Controller::Rc() const {
  if (rc_fixed_) return *rc_fixed_;
  const MatrixXd r = rc_.value * rc_.value.transpose();
  return 0.5 * (r + r.transpose());
}

BlockPattern Controller::state_pattern() const {
  return pattern_from_power(opts_.comm, opts_.output_radius, opts_.xi_dims, opts_.xi_dims);
}

BlockPattern Controller::port_pattern() const {
  return pattern_from_power(opts_.comm, opts_.output_radius, opts_.xi_dims, opts_.y_dims);
}

void Controller::check_layer(int layer) const {
  if (layer < 0 || layer >= schedule_length())
    throw ValidationError("layer index " + std::to_string(layer) + " outside schedule of length " +
                          std::to_string(schedule_length()));
}

const EnergyParams& Controller::theta(int layer) const {
  check_layer(layer);
  return theta_[layer];
}

EnergyParams& Controller::theta(int layer) {
  check_layer(layer);
  return theta_[layer];
}

int Controller::layer_for_step(int k) const {
  if (k < 0) throw ValidationError("negative step index");
  return std::min(k, schedule_length() - 1);
}

Eigen::VectorXd Controller::initial_state() const {
  VectorXd xi = VectorXd::Zero(state_dim());
  for (int i = 0; i < nodes(); ++i) {
    if (opts_.xi_initial.empty())
      xi(xi_offsets_[i]) = 3.0;
    else
      xi.segment(xi_offsets_[i], opts_.xi_dims[i]) = opts_.xi_initial[i];
  }
  return xi;
}

std::vector<Parameter*> Controller::parameters() {
  std::vector<Parameter*> out{&a_, &k_, &rc_};
  for (auto& t : theta_) {
    for (auto& w : t.weights) out.push_back(&w);
    for (auto& b : t.biases) out.push_back(&b);
    out.push_back(&t.readout);
  }
  return out;
}

std::vector<const Parameter*> Controller::parameters() const {
  std::vector<const Parameter*> out{&a_, &k_, &rc_};
  for (const auto& t : theta_) {
    for (const auto& w : t.weights) out.push_back(&w);
    for (const auto& b : t.biases) out.push_back(&b);
    out.push_back(&t.readout);
  }
  return out;
}

Eigen::Index Controller::trainable_count() const {
  Eigen::Index n = 0;
  for (const Parameter* p : parameters()) n += p->trainable_count();
  return n;
}

void Controller::project() {
  for (Parameter* p : parameters()) p->project();
}

double energy_value(const Controller& c, const Eigen::VectorXd& xi, int layer) {
  return energy_value(c.energy_spec(), c.theta(layer), xi);
}

Eigen::VectorXd energy_gradient(const Controller& c, const Eigen::VectorXd& xi, int layer) {
  return energy_gradient(c.energy_spec(), c.theta(layer), xi);
}

Eigen::MatrixXd energy_hessian(const Controller& c, const Eigen::VectorXd& xi, int layer) {
  return energy_hessian(c.energy_spec(), c.theta(layer), xi);
}

Eigen::VectorXd controller_dynamics(const Controller& c, const Eigen::VectorXd& xi, const Eigen::VectorXd& y,
                                    int layer) {
  if (xi.size() != c.state_dim()) throw DimensionError("controller state has wrong length");
  if (y.size() != c.measurement_dim()) throw DimensionError("measurement has wrong length");
  const VectorXd g = energy_gradient(c, xi, layer);
  return (c.J() - c.Rc()) * g + c.K() * y;
}

Eigen::VectorXd controller_output(const Controller& c, const Eigen::VectorXd& xi, int layer) {
  if (xi.size() != c.state_dim()) throw DimensionError("controller state has wrong length");
  return -c.K().transpose() * energy_gradient(c, xi, layer);
}

// ---- serialization ----

namespace {

using nlohmann::json;

json matrix_entries(const MatrixXd& m) {
  json arr = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) arr.push_back(m(r, c));
  return arr;
}

json param_json(const Parameter& p) {
  return {{"name", p.name},       {"rows", p.value.rows()},         {"cols", p.value.cols()},
          {"trainable", p.trainable}, {"mask", matrix_entries(p.mask)}, {"values", matrix_entries(p.value)}};
}

MatrixXd read_entries(const json& arr, Eigen::Index rows, Eigen::Index cols, const std::string& field) {
  if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != rows * cols)
    throw ValidationError("expected " + std::to_string(rows * cols) + " numbers", field);
  MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      const json& v = arr[static_cast<std::size_t>(r * cols + c)];
      if (!v.is_number()) throw ValidationError("entries must be numbers", field);
      m(r, c) = v.get<double>();
    }
  return m;
}

Parameter read_param(const json& j, const std::string& expected_name, const std::string& field) {
  if (!j.is_object()) throw ValidationError("expected an object", field);
  const auto name = j.at("name").get<std::string>();
  if (name != expected_name)
    throw ValidationError("expected parameter '" + expected_name + "', found '" + name + "'", field);
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  if (rows < 0 || cols < 0) throw ValidationError("negative shape", field);
  Parameter p;
  p.name = name;
  p.trainable = j.value("trainable", true);
  p.mask = read_entries(j.at("mask"), rows, cols, field + ".mask");
  p.value = read_entries(j.at("values"), rows, cols, field + ".values");
  return p;
}

std::vector<int> int_list(const json& j, const std::string& field) {
  if (!j.is_array()) throw ValidationError("expected an array of integers", field);
  std::vector<int> out;
  for (const auto& v : j) {
    if (!v.is_number_integer()) throw ValidationError("expected an array of integers", field);
    out.push_back(v.get<int>());
  }
  return out;
}

}  // namespace

std::string controller_to_json(const Controller& c) {
  const ControllerOptions& o = c.options();
  json doc;
  doc["format"] = "disco-controller";
  doc["version"] = 1;
  doc["graph"] = o.comm.rows();
  doc["xi_dims"] = o.xi_dims;
  doc["y_dims"] = o.y_dims;
  doc["output_radius"] = o.output_radius;
  doc["energy_radius"] = o.energy_radius;
  doc["allowed_output_radius"] = o.allowed_output_radius ? json(*o.allowed_output_radius) : json(nullptr);
  doc["allowed_comm_radius"] = o.allowed_comm_radius ? json(*o.allowed_comm_radius) : json(nullptr);
  doc["energy"] = {{"variant", to_string(o.energy.variant)},
                   {"widths", o.energy.widths},
                   {"activation", to_string(o.energy.activation)},
                   {"biases", o.energy.biases},
                   {"trainable_readout", o.energy.trainable_readout}};
  doc["layers"] = o.layers;
  doc["time_invariant"] = o.time_invariant;
  doc["schedule_length"] = c.schedule_length();
  doc["j_diagonal_blocks"] = o.j_diagonal_blocks;
  doc["rc_trainable"] = o.rc_trainable;
  doc["rc_scale"] = o.rc_scale;
  doc["rc_damped"] = o.rc_damped;
  json xi0 = json::array();
  for (const auto& v : o.xi_initial) xi0.push_back(std::vector<double>(v.data(), v.data() + v.size()));
  doc["xi_initial"] = xi0;
  doc["seed"] = o.seed;
  json params = json::array();
  for (const Parameter* p : c.parameters()) params.push_back(param_json(*p));
  doc["parameters"] = params;
  return doc.dump(1);
}

Controller controller_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("controller file is not valid JSON: ") + e.what());
  }
  try {
    if (doc.value("format", "") != "disco-controller")
      throw ValidationError("not a controller document", "format");
    if (doc.at("version").get<int>() != 1) throw ValidationError("unsupported version", "version");

    ControllerOptions o;
    o.comm = Graph(doc.at("graph").get<std::vector<std::vector<int>>>());
    o.xi_dims = int_list(doc.at("xi_dims"), "xi_dims");
    o.y_dims = int_list(doc.at("y_dims"), "y_dims");
    o.output_radius = doc.at("output_radius").get<int>();
    o.energy_radius = doc.at("energy_radius").get<int>();
    if (!doc.at("allowed_output_radius").is_null()) o.allowed_output_radius = doc["allowed_output_radius"].get<int>();
    if (!doc.at("allowed_comm_radius").is_null()) o.allowed_comm_radius = doc["allowed_comm_radius"].get<int>();
    const json& e = doc.at("energy");
    o.energy.variant = energy_variant_from_string(e.at("variant").get<std::string>());
    o.energy.widths = int_list(e.at("widths"), "energy.widths");
    o.energy.activation = activation_from_string(e.at("activation").get<std::string>());
    o.energy.biases = e.at("biases").get<bool>();
    o.energy.trainable_readout = e.at("trainable_readout").get<bool>();
    o.layers = doc.at("layers").get<int>();
    o.time_invariant = doc.at("time_invariant").get<bool>();
    o.j_diagonal_blocks = doc.at("j_diagonal_blocks").get<bool>();
    o.rc_trainable = doc.at("rc_trainable").get<bool>();
    o.rc_scale = doc.at("rc_scale").get<double>();
    o.rc_damped = doc.at("rc_damped").get<int>();
    for (const auto& v : doc.at("xi_initial")) {
      const auto vals = v.get<std::vector<double>>();
      o.xi_initial.push_back(Eigen::Map<const VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size())));
    }
    o.seed = doc.at("seed").get<std::uint64_t>();

    const json& params = doc.at("parameters");
    const int depth = o.energy.depth();
    const int copies = o.time_invariant ? 1 : o.layers;
    const std::size_t expected = 3 + static_cast<std::size_t>(copies) * (2 * depth + 1);
    if (!params.is_array() || params.size() != expected)
      throw ValidationError("expected " + std::to_string(expected) + " entries", "parameters");
    std::size_t idx = 0;
    const auto next = [&](const std::string& name) {
      const std::string field = "parameters[" + std::to_string(idx) + "]";
      return read_param(params[idx++], name, field);
    };
    Parameter a = next("A");
    Parameter k = next("K");
    Parameter rc = next("Rc_factors");
    std::vector<EnergyParams> theta(copies);
    for (int t = 0; t < copies; ++t) {
      const std::string pre = "theta[" + std::to_string(t) + "].";
      for (int l = 0; l < depth; ++l) theta[t].weights.push_back(next(pre + "W[" + std::to_string(l) + "]"));
      for (int l = 0; l < depth; ++l) theta[t].biases.push_back(next(pre + "b[" + std::to_string(l) + "]"));
      theta[t].readout = next(pre + "w_out");
    }
    return Controller(std::move(o), std::move(a), std::move(k), std::move(rc), std::move(theta));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed controller document: ") + e.what());
  } catch (const DimensionError& e) {
    throw ValidationError(std::string("inconsistent controller document: ") + e.what());
  }
}

void save_controller(const Controller& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open for writing", path);
  out << controller_to_json(c) << '\n';
}

Controller load_controller(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("controller file not found or unreadable", path);
  std::stringstream ss;
  ss << in.rdbuf();
  return controller_from_json(ss.str());
}

}  // namespace disco
