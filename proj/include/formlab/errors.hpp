#pragma once

#include <stdexcept>
#include <string>

namespace formlab {

// Input fails a geometric precondition (coincident anchor points, too few
// agents, empty graphs where one is required).
struct DegenerateInput : std::invalid_argument {
  explicit DegenerateInput(const std::string& what) : std::invalid_argument(what) {}
};

// Vertex or edge index outside [1, n] / [1, m].
struct IndexOutOfRange : std::out_of_range {
  explicit IndexOutOfRange(const std::string& what) : std::out_of_range(what) {}
};

// Two containers that must agree in length or shape do not.
struct DimensionMismatch : std::invalid_argument {
  explicit DimensionMismatch(const std::string& what) : std::invalid_argument(what) {}
};

// A scenario is internally inconsistent (law incompatible with the graph,
// wrong gain count, polynomial over the wrong variable count, ...).
struct ConfigError : std::invalid_argument {
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// A trajectory left the divergence guard box or produced NaN/Inf.
struct NonFiniteError : std::runtime_error {
  explicit NonFiniteError(const std::string& what) : std::runtime_error(what) {}
};

// A point handed to a routine that requires an equilibrium is not one.
struct NotAnEquilibrium : std::invalid_argument {
  explicit NotAnEquilibrium(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace formlab
