#pragma once

#include <string>
#include <vector>

#include "disco/diagnostics.hpp"
#include "disco/plant.hpp"
#include "disco/simulate.hpp"
#include "disco/train.hpp"

namespace disco {

/// Robot paths in the xy-plane. Starts are stars, targets are circles and
/// the part of each path after `solid_until` (seconds) is dashed.
std::string trajectory_svg(const Trajectory& traj, const PHNetwork& plant, double solid_until,
                           const std::string& title = {});
void write_trajectory_svg(const std::string& path, const Trajectory& traj, const PHNetwork& plant,
                          double solid_until, const std::string& title = {});

/// The two sensitivity families against the backward offset s, log-scale y.
std::string bsm_svg(const BsmMap& map, const std::string& title = {});
void write_bsm_svg(const std::string& path, const BsmMap& map, const std::string& title = {});

/// Loss components per epoch, log-scale y.
std::string loss_svg(const std::vector<LossBreakdown>& history, const std::string& title = {});
void write_loss_svg(const std::string& path, const std::vector<LossBreakdown>& history,
                    const std::string& title = {});

}  // namespace disco
