#pragma once

#include <vector>

#include "formlab/types.hpp"

namespace formlab {

// Directed edge between agents, 1-based. An edge (i, j) means agent i
// observes agent j (observation graph) or agent i is responsible for the
// distance to agent j (objective graph).
struct Edge {
  int from = 0;
  int to = 0;

  Edge() = default;
  Edge(int f, int t) : from(f), to(t) {}

  bool operator==(const Edge& o) const { return from == o.from && to == o.to; }
};

// Directed graph over n agents. Edge order is meaningful: observation
// vectors, objective vectors, and per-edge gains all follow it.
struct FormationGraph {
  int n = 0;
  std::vector<Edge> edges;

  FormationGraph() = default;
  FormationGraph(int n_agents, std::vector<Edge> e) : n(n_agents), edges(std::move(e)) {}

  int m() const { return static_cast<int>(edges.size()); }

  // Throws IndexOutOfRange / DegenerateInput when the edge list is malformed.
  void validate() const;

  // Indices (into edges) of the out-edges of agent i, in edge-list order.
  std::vector<int> out_edge_indices(int i) const;
};

// Number of edges leaving / entering agent i. i is 1-based.
int outvalence(const FormationGraph& g, int i);
int invalence(const FormationGraph& g, int i);

// A graph together with an embedding of its vertices in the plane.
struct Framework {
  FormationGraph graph;
  Configuration config;

  Framework() = default;
  Framework(FormationGraph g, Configuration c) : graph(std::move(g)), config(std::move(c)) {}
};

}  // namespace formlab
