#include "disco/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "disco/error.hpp"
#include "disco/svg.hpp"

namespace disco {

using Eigen::VectorXd;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

Trajectory prefix(const Trajectory& t, int steps) {
  Trajectory out;
  out.h = t.h;
  out.steps = steps;
  out.plant_dim = t.plant_dim;
  out.times.assign(t.times.begin(), t.times.begin() + steps + 1);
  out.states.assign(t.states.begin(), t.states.begin() + steps + 1);
  out.inputs.assign(t.inputs.begin(), t.inputs.begin() + steps + 1);
  out.outputs.assign(t.outputs.begin(), t.outputs.begin() + steps + 1);
  out.layers.assign(t.layers.begin(), t.layers.begin() + std::min<std::size_t>(steps, t.layers.size()));
  return out;
}

std::vector<int> sorted_multiples(const std::vector<int>& multiples) {
  if (multiples.empty()) throw ValidationError("need at least one horizon multiple", "evaluation.horizon_multiples");
  std::vector<int> m = multiples;
  for (int k : m)
    if (k < 1) throw ValidationError("horizon multiples must be at least 1", "evaluation.horizon_multiples");
  m.push_back(1);
  std::sort(m.begin(), m.end());
  m.erase(std::unique(m.begin(), m.end()), m.end());
  return m;
}

template <class Rollout>
EvaluationReport evaluate_with(Rollout&& rollout, const PHNetwork& plant, const LossConfig& loss,
                               const std::vector<int>& multiples, Trajectory* longest) {
  const std::vector<int> ms = sorted_multiples(multiples);
  EvaluationReport rep;
  std::optional<Trajectory> full;
  try {
    full = rollout(ms.back() * loss.steps);
  } catch (const DivergenceError&) {
  }
  // A divergent long rollout still leaves the shorter horizons to evaluate.
  for (int k : ms) {
    HorizonMetrics h;
    h.multiple = k;
    std::optional<Trajectory> t;
    if (full) {
      t = prefix(*full, k * loss.steps);
    } else {
      try {
        t = rollout(k * loss.steps);
      } catch (const DivergenceError&) {
      }
    }
    if (t) {
      h.lx = loss_control(*t, plant, loss);
      h.collisions = count_collisions(*t, plant, loss.safety_distance);
    } else {
      h.lx = std::numeric_limits<double>::infinity();
      h.diverged = true;
    }
    rep.horizons.push_back(h);
  }
  rep.stability_ratio = rep.horizons.back().lx / rep.horizons.front().lx;
  if (longest && full) *longest = std::move(*full);
  return rep;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create directory: " + ec.message(), "output_dir");
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open for writing", path);
  out << text;
  if (text.empty() || text.back() != '\n') out << '\n';
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json horizon_json(const HorizonMetrics& h) {
  return {{"multiple", h.multiple},
          {"lx", number(h.lx)},
          {"collision_events", h.collisions.events},
          {"collision_step_pairs", h.collisions.step_pairs},
          {"diverged", h.diverged}};
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

struct Setup {
  RobotFleet fleet;
  ClosedLoop cl;
  VectorXd zeta0;
};

Setup build(const ExperimentConfig& cfg, const Controller& c) {
  RobotFleet fleet = make_fleet(cfg);
  ClosedLoop cl(fleet.plant, c);
  VectorXd z0 = closed_loop_initial_state(cl, fleet.initial_state);
  return {std::move(fleet), std::move(cl), std::move(z0)};
}

Setup build(const ExperimentConfig& cfg) { return build(cfg, Controller(controller_options(cfg))); }

int max_multiple(const ExperimentConfig& cfg) {
  return *std::max_element(cfg.evaluation.horizon_multiples.begin(), cfg.evaluation.horizon_multiples.end());
}

std::vector<int> eval_multiples(const ExperimentConfig& cfg) {
  std::vector<int> m = cfg.evaluation.horizon_multiples;
  if (std::find(m.begin(), m.end(), 1) == m.end()) m.insert(m.begin(), 1);
  return m;
}

EvaluationReport evaluate_setup(const ExperimentConfig& cfg, const Setup& s, Trajectory* longest = nullptr) {
  return evaluate_closed_loop(s.cl, s.zeta0, evaluation_loss(cfg), eval_multiples(cfg), evaluation_integrator(cfg),
                              longest);
}

void log_epoch(std::ostream& log, const std::string& tag, int epoch, const LossBreakdown& l) {
  log << tag << " epoch " << std::setw(4) << epoch << "  total " << fmt(l.total) << "  Lx " << fmt(l.lx) << "  Lca "
      << fmt(l.lca) << "  Rw " << fmt(l.rw) << '\n';
}

TrainResult run_training(const ClosedLoop& cl, const VectorXd& z0, const ExperimentConfig& cfg, int epochs,
                         std::ostream& log, const std::string& tag,
                         std::function<void(int, const Controller&)> snapshot = {}) {
  TrainOptions to;
  to.epochs = epochs;
  to.adam = adam_options(cfg);
  to.on_epoch = [&](int epoch, const Controller& c, const LossBreakdown& l) {
    if (epoch % 25 == 0 || epoch + 1 == epochs) log_epoch(log, tag, epoch, l);
    if (snapshot) snapshot(epoch, c);
  };
  TrainResult r = train(cl, z0, training_loss(cfg), to);
  if (r.diverged_epoch) log << tag << " diverged at epoch " << *r.diverged_epoch << '\n';
  return r;
}

}  // namespace

VectorXd closed_loop_initial_state(const ClosedLoop& cl, const VectorXd& plant_state) {
  if (plant_state.size() != cl.plant_dim()) throw DimensionError("plant state has wrong length");
  VectorXd z(cl.dim());
  z << plant_state, cl.controller().initial_state();
  return z;
}

const HorizonMetrics& EvaluationReport::at(int multiple) const {
  for (const auto& h : horizons)
    if (h.multiple == multiple) return h;
  throw ValidationError("horizon multiple " + std::to_string(multiple) + " was not evaluated");
}

EvaluationReport evaluate_closed_loop(const ClosedLoop& cl, const VectorXd& zeta0, const LossConfig& loss,
                                      const std::vector<int>& multiples, Integrator method, Trajectory* longest) {
  const int last = cl.controller().schedule_length() - 1;
  LayerSchedule sched;
  sched.freeze_after = last;
  const auto rollout = [&](int steps) { return integrate(cl, zeta0, steps, loss.h, method, sched); };
  EvaluationReport rep = evaluate_with(rollout, cl.plant(), loss, multiples, longest);
  const int steps = rep.horizons.back().multiple * loss.steps;
  try {
    rep.dissipation = check_dissipation(cl, zeta0, steps, loss.h, method, last);
  } catch (const DivergenceError&) {
    DissipationReport d;
    d.monotone = false;
    d.max_violation = std::numeric_limits<double>::infinity();
    rep.dissipation = d;
  }
  return rep;
}

EvaluationReport evaluate_mlp(const MlpClosedLoop& cl, const VectorXd& x0, const LossConfig& loss,
                              const std::vector<int>& multiples, Integrator method, Trajectory* longest) {
  const auto rollout = [&](int steps) { return integrate(cl, x0, steps, loss.h, method); };
  return evaluate_with(rollout, cl.plant(), loss, multiples, longest);
}

std::string evaluation_to_json(const EvaluationReport& rep, Eigen::Index trainable_parameters) {
  json doc;
  doc["schema_version"] = 1;
  doc["trainable_parameters"] = trainable_parameters;
  doc["horizons"] = json::array();
  for (const auto& h : rep.horizons) doc["horizons"].push_back(horizon_json(h));
  doc["stability_ratio"] = number(rep.stability_ratio);
  if (rep.dissipation)
    doc["dissipation"] = {{"passed", rep.dissipation->monotone}, {"max_violation", number(rep.dissipation->max_violation)}};
  else
    doc["dissipation"] = nullptr;
  return doc.dump(2);
}

int cmd_train(const ExperimentConfig& cfg, std::ostream& log) {
  ensure_dir(cfg.output_dir);
  write_text(join(cfg.output_dir, "config.json"), config_to_json(cfg));
  Setup s = build(cfg);
  const double horizon = cfg.training.steps * cfg.training.h;
  const ControllerOptions& o = s.cl.controller().options();
  log << "train: " << s.cl.plant().nodes() << " robots, " << s.cl.controller().trainable_count()
      << " trainable parameters, " << cfg.training.epochs << " epochs\n";

  Trajectory before;
  const EvaluationReport rep0 = evaluate_setup(cfg, s, &before);
  if (!before.states.empty()) {
    write_trajectory_csv(join(cfg.output_dir, "trajectory_before.csv"), before, s.cl.plant(), o.xi_dims);
    write_trajectory_svg(join(cfg.output_dir, "trajectory_before.svg"), before, s.cl.plant(), horizon,
                         "before training");
  }

  const TrainResult r = run_training(s.cl, s.zeta0, cfg, cfg.training.epochs, log, "train");
  save_controller(r.controller, join(cfg.output_dir, "controller.json"));
  write_loss_csv(join(cfg.output_dir, "loss_history.csv"), r.history);
  write_loss_svg(join(cfg.output_dir, "loss_history.svg"), r.history, "training loss");

  Setup t = build(cfg, r.controller);
  Trajectory after;
  const EvaluationReport rep = evaluate_setup(cfg, t, &after);
  if (!after.states.empty()) {
    write_trajectory_csv(join(cfg.output_dir, "trajectory_after.csv"), after, t.cl.plant(), o.xi_dims);
    write_trajectory_svg(join(cfg.output_dir, "trajectory_after.svg"), after, t.cl.plant(), horizon,
                         "after training");
  }
  json doc = json::parse(evaluation_to_json(rep, t.cl.controller().trainable_count()));
  doc["before_training"] = json::parse(evaluation_to_json(rep0, s.cl.controller().trainable_count()));
  doc["initial_loss"] = r.history.front().total;
  doc["final_loss"] = r.history.back().total;
  doc["diverged_epoch"] = r.diverged_epoch ? json(*r.diverged_epoch) : json(nullptr);
  write_text(join(cfg.output_dir, "metrics.json"), doc.dump(2));

  log << "loss " << fmt(r.history.front().total) << " -> " << fmt(r.history.back().total) << ", Lx(" << max_multiple(cfg)
      << "T)/Lx(T) = " << fmt(rep.stability_ratio) << '\n';
  if (r.diverged_epoch) return kExitDivergence;
  return rep.dissipation && rep.dissipation->monotone ? kExitOk : kExitCertification;
}

int cmd_evaluate(const ExperimentConfig& cfg, const std::string& controller_path, int horizon_mult,
                 std::ostream& log) {
  if (horizon_mult < 1) throw ValidationError("must be at least 1", "horizon_mult");
  if (!fs::exists(controller_path)) throw ValidationError("controller file not found", controller_path);
  const Controller c = load_controller(controller_path);
  Setup s = build(cfg, c);
  const EvaluationReport rep = evaluate_closed_loop(s.cl, s.zeta0, evaluation_loss(cfg), {1, horizon_mult},
                                                    evaluation_integrator(cfg));
  ensure_dir(cfg.output_dir);
  const std::string text = evaluation_to_json(rep, s.cl.controller().trainable_count());
  write_text(join(cfg.output_dir, "evaluation.json"), text);
  log << text << '\n';
  return rep.dissipation->monotone ? kExitOk : kExitCertification;
}

int cmd_compare_mlp(const ExperimentConfig& cfg, std::ostream& log) {
  ensure_dir(cfg.output_dir);
  const int big = max_multiple(cfg);
  std::ofstream csv(join(cfg.output_dir, "comparison.csv"));
  if (!csv) throw ValidationError("cannot open for writing", join(cfg.output_dir, "comparison.csv"));
  csv << "model,collision_avoidance,trainable_parameters,epochs,lx_T,lx_" << big
      << "T,ratio,collision_events,dissipation\n"
      << std::setprecision(10);
  bool certified = true;

  for (const bool with_ca : {true, false}) {
    ExperimentConfig c = cfg;
    if (!with_ca) c.training.alpha_ca = 0.0;
    const std::string ca = with_ca ? "yes" : "no";

    ExperimentConfig ti = c;
    ti.controller.variant = "deep_stack";
    ti.controller.widths.clear();
    ti.controller.time_invariant = true;

    for (const auto& [name, mc] : {std::pair<std::string, ExperimentConfig>{"pH-TV", c}, {"pH-TI", ti}}) {
      Setup s = build(mc);
      const TrainResult r = run_training(s.cl, s.zeta0, mc, mc.training.epochs, log, name + "/ca=" + ca);
      Setup t = build(mc, r.controller);
      const EvaluationReport rep = evaluate_setup(mc, t);
      const bool ok = rep.dissipation && rep.dissipation->monotone;
      certified = certified && ok;
      csv << name << ',' << ca << ',' << t.cl.controller().trainable_count() << ',' << mc.training.epochs << ','
          << rep.at(1).lx << ',' << rep.at(big).lx << ',' << rep.stability_ratio << ','
          << rep.at(big).collisions.events << ',' << (ok ? "pass" : "fail") << '\n';
      log << name << " ca=" << ca << ": Lx(T) " << fmt(rep.at(1).lx) << ", Lx(" << big << "T) " << fmt(rep.at(big).lx)
          << '\n';
    }

    RobotFleet fleet = make_fleet(c);
    MlpClosedLoop mcl(fleet.plant, MlpPolicy(mlp_options(c)));
    const MlpTrainResult mr = mlp_train(mcl, fleet.initial_state, training_loss(c), c.training.mlp_epochs, adam_options(c));
    for (std::size_t e = 0; e < mr.history.size(); e += 50) log_epoch(log, "MLP/ca=" + ca, static_cast<int>(e), mr.history[e]);
    const MlpClosedLoop trained(fleet.plant, mr.policy);
    const EvaluationReport rep =
        evaluate_mlp(trained, fleet.initial_state, evaluation_loss(c), eval_multiples(c), evaluation_integrator(c));
    csv << "MLP," << ca << ',' << trained.policy().trainable_count() << ',' << c.training.mlp_epochs << ','
        << rep.at(1).lx << ',' << rep.at(big).lx << ',' << rep.stability_ratio << ','
        << rep.at(big).collisions.events << ",n/a\n";
    log << "MLP ca=" << ca << ": Lx(T) " << fmt(rep.at(1).lx) << ", Lx(" << big << "T) " << fmt(rep.at(big).lx) << '\n';
  }
  return certified ? kExitOk : kExitCertification;
}

int cmd_early_stop(const ExperimentConfig& cfg, const std::vector<double>& fractions, std::ostream& log) {
  if (fractions.empty()) throw ValidationError("need at least one fraction", "fractions");
  std::vector<int> stops;
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw ValidationError("fractions must lie in (0, 1]", "fractions");
    stops.push_back(std::max(1, static_cast<int>(std::lround(f * cfg.training.epochs))));
  }
  if (cfg.training.epochs < 1) throw ValidationError("early stopping needs at least one epoch", "training.epochs");
  ensure_dir(cfg.output_dir);

  Setup s = build(cfg);
  std::map<int, Controller> snaps;
  const TrainResult r = run_training(s.cl, s.zeta0, cfg, cfg.training.epochs, log, "early-stop",
                                     [&](int epoch, const Controller& c) {
                                       if (std::find(stops.begin(), stops.end(), epoch + 1) != stops.end())
                                         snaps.insert_or_assign(epoch + 1, c);
                                     });
  if (r.diverged_epoch) return kExitDivergence;

  const int big = max_multiple(cfg);
  const double horizon = cfg.training.steps * cfg.training.h;
  std::ofstream csv(join(cfg.output_dir, "early_stop.csv"));
  if (!csv) throw ValidationError("cannot open for writing", join(cfg.output_dir, "early_stop.csv"));
  csv << "fraction,epochs,lx_T,lx_" << big << "T,collision_events,collision_step_pairs,dissipation\n"
      << std::setprecision(10);
  bool certified = true;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    const auto it = snaps.find(stops[i]);
    if (it == snaps.end()) continue;
    Setup t = build(cfg, it->second);
    Trajectory longest;
    const EvaluationReport rep = evaluate_setup(cfg, t, &longest);
    const bool ok = rep.dissipation && rep.dissipation->monotone;
    certified = certified && ok;
    csv << fractions[i] << ',' << stops[i] << ',' << rep.at(1).lx << ',' << rep.at(big).lx << ','
        << rep.at(big).collisions.events << ',' << rep.at(big).collisions.step_pairs << ',' << (ok ? "pass" : "fail")
        << '\n';
    const std::string pct = std::to_string(static_cast<int>(std::lround(100 * fractions[i])));
    if (!longest.states.empty())
      write_trajectory_svg(join(cfg.output_dir, "early_stop_" + pct + ".svg"), longest, t.cl.plant(), horizon,
                           pct + "% of training");
    log << pct << "%: Lx(T) " << fmt(rep.at(1).lx) << ", collisions " << rep.at(big).collisions.events
        << ", dissipation " << (ok ? "pass" : "fail") << '\n';
  }
  return certified ? kExitOk : kExitCertification;
}

int cmd_diagnose(const ExperimentConfig& cfg, const std::string& controller_path, std::ostream& log) {
  if (!fs::exists(controller_path)) throw ValidationError("controller file not found", controller_path);
  const Controller c = load_controller(controller_path);
  Setup s = build(cfg, c);
  ensure_dir(cfg.output_dir);

  const Trajectory tr = integrate(s.cl, s.zeta0, cfg.training.steps, cfg.training.h, Integrator::FE);
  BsmOptions bo;
  bo.all_pairs = false;
  const BsmMap bsm = bsm_map(s.cl, tr, bo);
  write_bsm_csv(join(cfg.output_dir, "bsm.csv"), bsm);
  write_bsm_svg(join(cfg.output_dir, "bsm.svg"), bsm, "backward sensitivity norms");

  // The deployment limits come from the config; the controller file must fit them.
  const ControllerSection& cs = cfg.controller;
  const int ry = cs.allowed_output_radius.value_or(cs.output_radius);
  const int rxi = cs.allowed_comm_radius.value_or(cs.output_radius + 2 * cs.energy_radius);
  const DistributedReport dist = verify_distributed(c, ry, rxi, 3, cs.seed);

  const int steps = max_multiple(cfg) * cfg.training.steps;
  const DissipationReport diss = check_dissipation(s.cl, s.zeta0, steps, cfg.training.h, evaluation_integrator(cfg),
                                                   c.schedule_length() - 1);

  json doc;
  doc["schema_version"] = 1;
  doc["bsm"] = {{"min_norm", bsm.min_norm}, {"max_norm", bsm.max_norm}, {"steps", bsm.steps}};
  doc["distributed"] = {{"passed", dist.passed()},
                        {"masks_ok", dist.masks_ok},
                        {"radii_ok", dist.radii_ok},
                        {"output_perturbation_ok", dist.output_perturbation_ok},
                        {"state_perturbation_ok", dist.state_perturbation_ok},
                        {"max_output_response", dist.max_output_response},
                        {"max_state_response", dist.max_state_response},
                        {"pairs_checked", dist.pairs_checked},
                        {"output_radius_limit", ry},
                        {"comm_radius_limit", rxi}};
  doc["dissipation"] = {{"passed", diss.monotone}, {"max_violation", diss.max_violation}, {"steps", steps}};
  const std::string text = doc.dump(2);
  write_text(join(cfg.output_dir, "diagnostics.json"), text);
  log << text << '\n';
  return dist.passed() && diss.monotone ? kExitOk : kExitCertification;
}

}  // namespace disco
