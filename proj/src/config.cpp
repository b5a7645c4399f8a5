#include "disco/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "disco/error.hpp"

namespace disco {

using json = nlohmann::json;

namespace {

// Typed access to one JSON object with dotted field paths in every error.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError("expected an object", path_);
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }
  const json& at(const std::string& key) const { return j_.at(key); }

  void reject_unknown(std::initializer_list<const char*> known) const {
    std::set<std::string> ok(known.begin(), known.end());
    for (const auto& [k, v] : j_.items())
      if (!ok.count(k)) throw ValidationError("unknown key", field(k));
  }

  void read(const std::string& key, int& out) const {
    if (!has(key)) return;
    if (!at(key).is_number_integer()) throw ValidationError("expected an integer", field(key));
    out = at(key).get<int>();
  }
  void read(const std::string& key, std::uint64_t& out) const {
    if (!has(key)) return;
    if (!at(key).is_number_unsigned()) throw ValidationError("expected a non-negative integer", field(key));
    out = at(key).get<std::uint64_t>();
  }
  void read(const std::string& key, double& out) const {
    if (!has(key)) return;
    if (!at(key).is_number()) throw ValidationError("expected a number", field(key));
    out = at(key).get<double>();
  }
  void read(const std::string& key, bool& out) const {
    if (!has(key)) return;
    if (!at(key).is_boolean()) throw ValidationError("expected true or false", field(key));
    out = at(key).get<bool>();
  }
  void read(const std::string& key, std::string& out) const {
    if (!has(key)) return;
    if (!at(key).is_string()) throw ValidationError("expected a string", field(key));
    out = at(key).get<std::string>();
  }
  void read(const std::string& key, std::optional<int>& out) const {
    if (!has(key) || at(key).is_null()) return;
    int v = 0;
    read(key, v);
    out = v;
  }
  void read(const std::string& key, std::vector<double>& out) const {
    if (!has(key)) return;
    out = numbers(at(key), field(key));
  }
  void read(const std::string& key, std::vector<int>& out) const {
    if (!has(key)) return;
    const json& a = at(key);
    if (!a.is_array()) throw ValidationError("expected an array of integers", field(key));
    out.clear();
    for (const auto& v : a) {
      if (!v.is_number_integer()) throw ValidationError("expected an array of integers", field(key));
      out.push_back(v.get<int>());
    }
  }
  void read(const std::string& key, std::vector<Eigen::Vector2d>& out) const {
    if (!has(key)) return;
    const json& a = at(key);
    if (!a.is_array()) throw ValidationError("expected an array of [x, y] pairs", field(key));
    out.clear();
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::string f = field(key) + "[" + std::to_string(i) + "]";
      const auto v = numbers(a[i], f);
      if (v.size() != 2) throw ValidationError("expected [x, y]", f);
      out.emplace_back(v[0], v[1]);
    }
  }

  static std::vector<double> numbers(const json& a, const std::string& f) {
    if (!a.is_array()) throw ValidationError("expected an array of numbers", f);
    std::vector<double> out;
    for (const auto& v : a) {
      if (!v.is_number()) throw ValidationError("expected an array of numbers", f);
      out.push_back(v.get<double>());
    }
    return out;
  }

 private:
  const json& j_;
  std::string path_;
};

json pairs(const std::vector<Eigen::Vector2d>& v) {
  json a = json::array();
  for (const auto& p : v) a.push_back({p.x(), p.y()});
  return a;
}

std::vector<int> default_widths(const ControllerSection& c) {
  if (c.variant == "two_layer") return {c.xi_dim, c.xi_dim};
  if (c.variant == "deep_stack") return std::vector<int>(5, c.xi_dim);
  return {c.xi_dim};
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  const Section root(doc, "");
  root.reject_unknown({"schema_version", "plant", "controller", "training", "evaluation", "output_dir"});
  if (!root.has("schema_version")) throw ValidationError("required", "schema_version");

  ExperimentConfig cfg;
  root.read("schema_version", cfg.schema_version);
  root.read("output_dir", cfg.output_dir);

  if (root.has("plant")) {
    const Section s(root.at("plant"), "plant");
    s.reject_unknown({"M", "masses", "springs", "dampings", "targets", "initials"});
    int m = cfg.plant.fleet.nodes;
    s.read("M", m);
    if (m < 2) throw ValidationError("fleet needs at least two robots", "plant.M");
    RobotFleetParams& f = cfg.plant.fleet;
    f = RobotFleetParams::defaults(m);
    s.read("masses", f.masses);
    s.read("springs", f.springs);
    s.read("dampings", f.dampings);
    s.read("targets", f.targets);
    s.read("initials", f.initials);
  }

  if (root.has("controller")) {
    const Section s(root.at("controller"), "controller");
    s.reject_unknown({"graph", "adjacency", "variant", "widths", "activation", "xi_dim", "output_radius",
                      "energy_radius", "allowed_output_radius", "allowed_comm_radius", "time_invariant",
                      "j_diagonal_blocks", "rc_trainable", "rc_scale", "rc_damped", "xi_initial", "seed"});
    ControllerSection& c = cfg.controller;
    s.read("graph", c.graph);
    if (s.has("adjacency")) {
      const json& a = s.at("adjacency");
      if (!a.is_array()) throw ValidationError("expected an array of 0/1 rows", "controller.adjacency");
      c.adjacency.clear();
      for (std::size_t i = 0; i < a.size(); ++i) {
        const std::string f = "controller.adjacency[" + std::to_string(i) + "]";
        if (!a[i].is_array()) throw ValidationError("expected a row of 0/1 entries", f);
        std::vector<int> row;
        for (const auto& v : a[i]) {
          if (!v.is_number_integer() || (v.get<int>() != 0 && v.get<int>() != 1))
            throw ValidationError("entries must be 0 or 1", f);
          row.push_back(v.get<int>());
        }
        c.adjacency.push_back(std::move(row));
      }
      if (!s.has("graph")) c.graph = "custom";
    }
    s.read("variant", c.variant);
    s.read("widths", c.widths);
    s.read("activation", c.activation);
    s.read("xi_dim", c.xi_dim);
    s.read("output_radius", c.output_radius);
    s.read("energy_radius", c.energy_radius);
    s.read("allowed_output_radius", c.allowed_output_radius);
    s.read("allowed_comm_radius", c.allowed_comm_radius);
    s.read("time_invariant", c.time_invariant);
    s.read("j_diagonal_blocks", c.j_diagonal_blocks);
    s.read("rc_trainable", c.rc_trainable);
    s.read("rc_scale", c.rc_scale);
    s.read("rc_damped", c.rc_damped);
    s.read("xi_initial", c.xi_initial);
    s.read("seed", c.seed);
  }

  if (root.has("training")) {
    const Section s(root.at("training"), "training");
    s.reject_unknown({"epochs", "lr", "beta1", "beta2", "adam_eps", "N", "h", "gamma", "q_scale", "r_scale",
                      "alpha_ca", "alpha_w", "D", "epsilon", "smooth_biases", "mlp_epochs", "mlp_hidden"});
    TrainingSection& t = cfg.training;
    s.read("epochs", t.epochs);
    s.read("lr", t.lr);
    s.read("beta1", t.beta1);
    s.read("beta2", t.beta2);
    s.read("adam_eps", t.adam_eps);
    s.read("N", t.steps);
    s.read("h", t.h);
    s.read("gamma", t.gamma);
    s.read("q_scale", t.q_scale);
    s.read("r_scale", t.r_scale);
    s.read("alpha_ca", t.alpha_ca);
    s.read("alpha_w", t.alpha_w);
    s.read("D", t.safety_distance);
    s.read("epsilon", t.epsilon);
    s.read("smooth_biases", t.smooth_biases);
    s.read("mlp_epochs", t.mlp_epochs);
    s.read("mlp_hidden", t.mlp_hidden);
  }

  if (root.has("evaluation")) {
    const Section s(root.at("evaluation"), "evaluation");
    s.reject_unknown({"horizon_multiples", "integrator", "gamma"});
    s.read("horizon_multiples", cfg.evaluation.horizon_multiples);
    s.read("integrator", cfg.evaluation.integrator);
    s.read("gamma", cfg.evaluation.gamma);
  }

  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.schema_version != kConfigSchemaVersion)
    throw ValidationError("unsupported version " + std::to_string(cfg.schema_version), "schema_version");
  if (cfg.output_dir.empty()) throw ValidationError("must not be empty", "output_dir");

  const ControllerSection& c = cfg.controller;
  const int m = cfg.plant.fleet.nodes;
  static const std::set<std::string> graphs{"ring", "complete", "isolated", "custom"};
  if (!graphs.count(c.graph)) throw ValidationError("unknown graph '" + c.graph + "'", "controller.graph");
  if (c.graph == "custom") {
    if (static_cast<int>(c.adjacency.size()) != m)
      throw ValidationError("need one row per robot", "controller.adjacency");
    for (std::size_t i = 0; i < c.adjacency.size(); ++i)
      if (static_cast<int>(c.adjacency[i].size()) != m)
        throw ValidationError("need one entry per robot", "controller.adjacency[" + std::to_string(i) + "]");
  } else if (!c.adjacency.empty()) {
    throw ValidationError("adjacency rows require graph 'custom'", "controller.adjacency");
  }
  try {
    energy_variant_from_string(c.variant);
  } catch (const ValidationError& e) {
    throw ValidationError(e.what(), "controller.variant");
  }
  try {
    activation_from_string(c.activation);
  } catch (const ValidationError& e) {
    throw ValidationError(e.what(), "controller.activation");
  }
  if (c.xi_dim < 1) throw ValidationError("must be positive", "controller.xi_dim");
  for (int w : c.widths)
    if (w < 1) throw ValidationError("must be positive", "controller.widths");
  if (c.variant == "logcosh_single" && c.widths.size() > 1)
    throw ValidationError("logcosh_single has exactly one layer", "controller.widths");
  if (c.variant == "two_layer" && !c.widths.empty() && c.widths.size() != 2)
    throw ValidationError("two_layer needs two widths", "controller.widths");
  if (c.variant == "deep_stack")
    for (int w : c.widths)
      if (w != c.widths.front()) throw ValidationError("deep_stack layers share one width", "controller.widths");
  if (!c.xi_initial.empty() && static_cast<int>(c.xi_initial.size()) != c.xi_dim)
    throw ValidationError("length must equal xi_dim", "controller.xi_initial");
  if (c.rc_damped < 0 || c.rc_damped > c.xi_dim) throw ValidationError("must lie in [0, xi_dim]", "controller.rc_damped");
  if (c.rc_scale < 0) throw ValidationError("must be non-negative", "controller.rc_scale");
  check_radius_condition(c.output_radius, c.energy_radius, c.allowed_output_radius, c.allowed_comm_radius);

  const TrainingSection& t = cfg.training;
  if (t.epochs < 0) throw ValidationError("must be non-negative", "training.epochs");
  if (!(t.lr > 0)) throw ValidationError("must be positive", "training.lr");
  if (!(t.beta1 >= 0 && t.beta1 < 1)) throw ValidationError("must lie in [0, 1)", "training.beta1");
  if (!(t.beta2 >= 0 && t.beta2 < 1)) throw ValidationError("must lie in [0, 1)", "training.beta2");
  if (!(t.adam_eps > 0)) throw ValidationError("must be positive", "training.adam_eps");
  if (t.steps < 1) throw ValidationError("must be at least 1", "training.N");
  if (!(t.h > 0)) throw ValidationError("must be positive", "training.h");
  if (!(t.gamma > 0 && t.gamma <= 1)) throw ValidationError("must lie in (0, 1]", "training.gamma");
  if (!(t.q_scale >= 0)) throw ValidationError("must be non-negative", "training.q_scale");
  if (!(t.r_scale >= 0)) throw ValidationError("must be non-negative", "training.r_scale");
  if (!(t.alpha_ca >= 0)) throw ValidationError("must be non-negative", "training.alpha_ca");
  if (!(t.alpha_w >= 0)) throw ValidationError("must be non-negative", "training.alpha_w");
  if (!(t.safety_distance > 0)) throw ValidationError("must be positive", "training.D");
  if (!(t.epsilon > 0)) throw ValidationError("must be positive", "training.epsilon");
  if (t.mlp_epochs < 0) throw ValidationError("must be non-negative", "training.mlp_epochs");
  if (t.mlp_hidden < 1) throw ValidationError("must be positive", "training.mlp_hidden");

  const EvaluationSection& e = cfg.evaluation;
  if (e.horizon_multiples.empty()) throw ValidationError("must not be empty", "evaluation.horizon_multiples");
  for (int k : e.horizon_multiples)
    if (k < 1) throw ValidationError("multiples must be at least 1", "evaluation.horizon_multiples");
  try {
    integrator_from_string(e.integrator);
  } catch (const ValidationError& err) {
    throw ValidationError(err.what(), "evaluation.integrator");
  }
  if (!(e.gamma > 0 && e.gamma <= 1)) throw ValidationError("must lie in (0, 1]", "evaluation.gamma");

  // Fleet lists and positivity are checked where the plant is built.
  make_fleet(cfg);
}

std::string config_to_json(const ExperimentConfig& cfg) {
  const RobotFleetParams& f = cfg.plant.fleet;
  const ControllerSection& c = cfg.controller;
  const TrainingSection& t = cfg.training;
  json doc;
  doc["schema_version"] = cfg.schema_version;
  doc["plant"] = {{"M", f.nodes},           {"masses", f.masses},         {"springs", f.springs},
                  {"dampings", f.dampings}, {"targets", pairs(f.targets)}, {"initials", pairs(f.initials)}};
  json jc = {{"graph", c.graph},
             {"variant", c.variant},
             {"widths", c.widths},
             {"activation", c.activation},
             {"xi_dim", c.xi_dim},
             {"output_radius", c.output_radius},
             {"energy_radius", c.energy_radius},
             {"time_invariant", c.time_invariant},
             {"j_diagonal_blocks", c.j_diagonal_blocks},
             {"rc_trainable", c.rc_trainable},
             {"rc_scale", c.rc_scale},
             {"rc_damped", c.rc_damped},
             {"xi_initial", c.xi_initial},
             {"seed", c.seed}};
  if (c.graph == "custom") jc["adjacency"] = c.adjacency;
  if (c.allowed_output_radius) jc["allowed_output_radius"] = *c.allowed_output_radius;
  if (c.allowed_comm_radius) jc["allowed_comm_radius"] = *c.allowed_comm_radius;
  doc["controller"] = jc;
  doc["training"] = {{"epochs", t.epochs},     {"lr", t.lr},
                     {"beta1", t.beta1},       {"beta2", t.beta2},
                     {"adam_eps", t.adam_eps}, {"N", t.steps},
                     {"h", t.h},               {"gamma", t.gamma},
                     {"q_scale", t.q_scale},   {"r_scale", t.r_scale},
                     {"alpha_ca", t.alpha_ca}, {"alpha_w", t.alpha_w},
                     {"D", t.safety_distance}, {"epsilon", t.epsilon},
                     {"smooth_biases", t.smooth_biases}, {"mlp_epochs", t.mlp_epochs},
                     {"mlp_hidden", t.mlp_hidden}};
  doc["evaluation"] = {{"horizon_multiples", cfg.evaluation.horizon_multiples},
                       {"integrator", cfg.evaluation.integrator},
                       {"gamma", cfg.evaluation.gamma}};
  doc["output_dir"] = cfg.output_dir;
  return doc.dump(2);
}

Graph communication_graph(const ExperimentConfig& cfg) {
  const int m = cfg.plant.fleet.nodes;
  const std::string& g = cfg.controller.graph;
  if (g == "complete") return Graph::complete(m);
  if (g == "isolated") return Graph::isolated(m);
  if (g == "custom") return Graph(cfg.controller.adjacency);
  return Graph::ring(m);
}

RobotFleet make_fleet(const ExperimentConfig& cfg) { return robot_benchmark(cfg.plant.fleet); }

ControllerOptions controller_options(const ExperimentConfig& cfg) {
  const ControllerSection& c = cfg.controller;
  const int m = cfg.plant.fleet.nodes;
  ControllerOptions o;
  o.comm = communication_graph(cfg);
  o.xi_dims.assign(m, c.xi_dim);
  o.y_dims.assign(m, 2);
  o.output_radius = c.output_radius;
  o.energy_radius = c.energy_radius;
  o.allowed_output_radius = c.allowed_output_radius;
  o.allowed_comm_radius = c.allowed_comm_radius;
  const std::vector<int> widths = c.widths.empty() ? default_widths(c) : c.widths;
  switch (energy_variant_from_string(c.variant)) {
    case EnergyVariant::LogCoshSingle: o.energy = EnergySpec::logcosh_single(widths[0]); break;
    case EnergyVariant::TwoLayer:
      o.energy = EnergySpec::two_layer(widths[0], widths[1], activation_from_string(c.activation));
      break;
    case EnergyVariant::DeepStack:
      o.energy = EnergySpec::deep_stack(widths[0], static_cast<int>(widths.size()));
      break;
  }
  o.layers = cfg.training.steps;
  o.time_invariant = c.time_invariant;
  o.j_diagonal_blocks = c.j_diagonal_blocks;
  o.rc_trainable = c.rc_trainable;
  o.rc_scale = c.rc_scale;
  o.rc_damped = c.rc_damped;
  if (!c.xi_initial.empty())
    o.xi_initial.assign(m, Eigen::Map<const Eigen::VectorXd>(c.xi_initial.data(), c.xi_dim));
  o.seed = c.seed;
  return o;
}

MlpOptions mlp_options(const ExperimentConfig& cfg) {
  MlpOptions o;
  o.comm = communication_graph(cfg);
  o.hidden = cfg.training.mlp_hidden;
  o.seed = cfg.controller.seed;
  return o;
}

LossConfig training_loss(const ExperimentConfig& cfg) {
  const TrainingSection& t = cfg.training;
  LossConfig l;
  l.steps = t.steps;
  l.h = t.h;
  l.q_scale = t.q_scale;
  l.r_scale = t.r_scale;
  l.gamma = t.gamma;
  l.safety_distance = t.safety_distance;
  l.epsilon = t.epsilon;
  l.alpha_ca = t.alpha_ca;
  l.alpha_w = t.alpha_w;
  l.smooth_biases = t.smooth_biases;
  return l;
}

LossConfig evaluation_loss(const ExperimentConfig& cfg) {
  LossConfig l = training_loss(cfg);
  l.gamma = cfg.evaluation.gamma;
  return l;
}

AdamOptions adam_options(const ExperimentConfig& cfg) {
  return {cfg.training.lr, cfg.training.beta1, cfg.training.beta2, cfg.training.adam_eps};
}

Integrator evaluation_integrator(const ExperimentConfig& cfg) {
  return integrator_from_string(cfg.evaluation.integrator);
}

}  // namespace disco
