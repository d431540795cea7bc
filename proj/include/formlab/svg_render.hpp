#pragma once

#include <string>
#include <vector>

#include "formlab/dynamics.hpp"
#include "formlab/graph.hpp"

namespace formlab {

// Directed framework drawing: labelled vertices, arrowed edges. Standalone
// SVG document, viewport fitted to the configuration with a margin.
std::string framework_svg(const Framework& fw);

// One polyline per agent plus start/end markers; when a graph is given its
// edges are drawn at the final state.
std::string trajectory_svg(const std::vector<VecX>& states,
                           const FormationGraph* final_graph = nullptr);
std::string trajectory_svg(const Trajectory& traj,
                           const FormationGraph* final_graph = nullptr);

}  // namespace formlab
