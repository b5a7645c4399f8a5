// Python bindings for the core library.
#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "disco/config.hpp"
#include "disco/controller.hpp"
#include "disco/diagnostics.hpp"
#include "disco/error.hpp"
#include "disco/experiment.hpp"
#include "disco/graph.hpp"
#include "disco/mlp.hpp"
#include "disco/plant.hpp"
#include "disco/simulate.hpp"
#include "disco/train.hpp"

namespace py = pybind11;
using namespace disco;

namespace {

// Commands log to a string that is handed back to Python.
template <class Fn>
py::tuple run_logged(Fn&& fn) {
  std::ostringstream log;
  const int code = fn(log);
  return py::make_tuple(code, log.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Distributed port-Hamiltonian neural controllers";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<DivergenceError>(m, "DivergenceError", base.ptr());

  py::class_<Graph>(m, "Graph")
      .def(py::init<const std::vector<std::vector<int>>&>(), py::arg("adjacency"))
      .def_static("ring", &Graph::ring)
      .def_static("complete", &Graph::complete)
      .def_static("isolated", &Graph::isolated)
      .def("size", &Graph::size)
      .def("edge", &Graph::edge)
      .def("rows", &Graph::rows)
      .def("power", [](const Graph& g, int k) { return Eigen::MatrixXi(g.power(k).cast<int>()); });
  m.def("k_hop_neighbors", &k_hop_neighbors, py::arg("graph"), py::arg("node"), py::arg("hops"));

  py::class_<RobotFleetParams>(m, "RobotFleetParams")
      .def_static("defaults", &RobotFleetParams::defaults, py::arg("nodes") = 12)
      .def_readwrite("nodes", &RobotFleetParams::nodes)
      .def_readwrite("masses", &RobotFleetParams::masses)
      .def_readwrite("springs", &RobotFleetParams::springs)
      .def_readwrite("dampings", &RobotFleetParams::dampings)
      .def_readwrite("targets", &RobotFleetParams::targets)
      .def_readwrite("initials", &RobotFleetParams::initials);

  py::class_<PHNetwork>(m, "PHNetwork")
      .def("nodes", &PHNetwork::nodes)
      .def("state_dim", &PHNetwork::state_dim)
      .def("port_dim", &PHNetwork::port_dim)
      .def("energy", &PHNetwork::energy)
      .def("gradient", &PHNetwork::gradient)
      .def("dynamics", &PHNetwork::dynamics)
      .def("output", &PHNetwork::output)
      .def("target", &PHNetwork::target);

  py::class_<RobotFleet>(m, "RobotFleet")
      .def_readonly("plant", &RobotFleet::plant)
      .def_readonly("initial_state", &RobotFleet::initial_state);
  m.def("robot_benchmark", &robot_benchmark, py::arg("params"));

  py::class_<Controller>(m, "Controller")
      .def("nodes", &Controller::nodes)
      .def("state_dim", &Controller::state_dim)
      .def("schedule_length", &Controller::schedule_length)
      .def("trainable_count", &Controller::trainable_count)
      .def("initial_state", &Controller::initial_state)
      .def("J", &Controller::J)
      .def("Rc", &Controller::Rc)
      .def("K", [](const Controller& c) { return Eigen::MatrixXd(c.K()); });
  m.def("controller_dynamics", &controller_dynamics);
  m.def("controller_output", &controller_output);
  m.def("controller_to_json", &controller_to_json);
  m.def("controller_from_json", &controller_from_json);
  m.def("load_controller", &load_controller);
  m.def("save_controller", &save_controller);

  py::enum_<Integrator>(m, "Integrator").value("FE", Integrator::FE).value("RK5", Integrator::RK5);

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("h", &Trajectory::h)
      .def_readonly("steps", &Trajectory::steps)
      .def_readonly("times", &Trajectory::times)
      .def_readonly("states", &Trajectory::states)
      .def_readonly("inputs", &Trajectory::inputs)
      .def("plant_state", &Trajectory::plant_state);

  py::class_<ClosedLoop>(m, "ClosedLoop")
      .def(py::init<PHNetwork, Controller>(), py::arg("plant"), py::arg("controller"))
      .def("dim", &ClosedLoop::dim)
      .def("psi", &ClosedLoop::psi)
      .def("dissipation", &ClosedLoop::dissipation)
      .def("total_energy", &ClosedLoop::total_energy)
      .def("vector_field", &ClosedLoop::vector_field)
      .def("controller", py::overload_cast<>(&ClosedLoop::controller, py::const_), py::return_value_policy::copy);
  m.def("closed_loop_initial_state", &closed_loop_initial_state);
  m.def(
      "integrate",
      [](const ClosedLoop& cl, const Eigen::VectorXd& z0, int steps, double h, Integrator method) {
        return integrate(cl, z0, steps, h, method);
      },
      py::arg("loop"), py::arg("zeta0"), py::arg("steps"), py::arg("h"), py::arg("method") = Integrator::FE);

  py::class_<LossConfig>(m, "LossConfig")
      .def(py::init<>())
      .def_readwrite("steps", &LossConfig::steps)
      .def_readwrite("h", &LossConfig::h)
      .def_readwrite("gamma", &LossConfig::gamma)
      .def_readwrite("safety_distance", &LossConfig::safety_distance)
      .def_readwrite("alpha_ca", &LossConfig::alpha_ca)
      .def_readwrite("alpha_w", &LossConfig::alpha_w);
  py::class_<LossBreakdown>(m, "LossBreakdown")
      .def_readonly("total", &LossBreakdown::total)
      .def_readonly("lx", &LossBreakdown::lx)
      .def_readonly("lca", &LossBreakdown::lca)
      .def_readonly("rw", &LossBreakdown::rw);
  m.def("evaluate_loss", &evaluate_loss);

  py::class_<BsmMap>(m, "BsmMap")
      .def_readonly("min_norm", &BsmMap::min_norm)
      .def_readonly("max_norm", &BsmMap::max_norm)
      .def_readonly("from_end", &BsmMap::from_end)
      .def_readonly("from_mid", &BsmMap::from_mid);
  m.def("bsm_map", [](const ClosedLoop& cl, const Trajectory& t) { return bsm_map(cl, t); });

  py::class_<DissipationReport>(m, "DissipationReport")
      .def_readonly("monotone", &DissipationReport::monotone)
      .def_readonly("max_violation", &DissipationReport::max_violation)
      .def_readonly("energy", &DissipationReport::energy);
  m.def(
      "check_dissipation",
      [](const ClosedLoop& cl, const Eigen::VectorXd& z0, int steps, double h, Integrator method, int layer) {
        return check_dissipation(cl, z0, steps, h, method, layer);
      },
      py::arg("loop"), py::arg("zeta0"), py::arg("steps"), py::arg("h"), py::arg("method"), py::arg("layer"));

  py::class_<DistributedReport>(m, "DistributedReport")
      .def_readonly("masks_ok", &DistributedReport::masks_ok)
      .def_readonly("radii_ok", &DistributedReport::radii_ok)
      .def_readonly("max_output_response", &DistributedReport::max_output_response)
      .def_readonly("max_state_response", &DistributedReport::max_state_response)
      .def("passed", &DistributedReport::passed);
  m.def("verify_distributed", &verify_distributed, py::arg("controller"), py::arg("output_radius_limit"),
        py::arg("comm_radius_limit"), py::arg("trials") = 3, py::arg("seed") = 0);

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def_readwrite("output_dir", &ExperimentConfig::output_dir)
      .def("to_json", &config_to_json);
  m.def("config_from_json", &config_from_json);
  m.def("load_config", &load_config);
  m.def("make_fleet", &make_fleet);
  m.def("build_controller", [](const ExperimentConfig& cfg) { return Controller(controller_options(cfg)); });
  m.def("training_loss", &training_loss);

  m.def("cmd_train", [](const ExperimentConfig& cfg) { return run_logged([&](auto& log) { return cmd_train(cfg, log); }); });
  m.def(
      "cmd_evaluate",
      [](const ExperimentConfig& cfg, const std::string& path, int mult) {
        return run_logged([&](auto& log) { return cmd_evaluate(cfg, path, mult, log); });
      },
      py::arg("config"), py::arg("controller_path"), py::arg("horizon_mult") = 10);
  m.def("cmd_diagnose", [](const ExperimentConfig& cfg, const std::string& path) {
    return run_logged([&](auto& log) { return cmd_diagnose(cfg, path, log); });
  });
}
