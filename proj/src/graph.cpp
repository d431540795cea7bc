#include "formlab/graph.hpp"

#include <set>
#include <utility>

#include "formlab/errors.hpp"

namespace formlab {

void FormationGraph::validate() const {
  if (n < 1) throw DegenerateInput("graph: need at least one agent");
  std::set<std::pair<int, int>> seen;
  for (const auto& e : edges) {
    if (e.from < 1 || e.from > n || e.to < 1 || e.to > n) {
      throw IndexOutOfRange("graph: edge endpoint outside [1, n]");
    }
    if (e.from == e.to) throw DegenerateInput("graph: self-loop");
    if (!seen.emplace(e.from, e.to).second) {
      throw DegenerateInput("graph: duplicate directed edge");
    }
  }
}

std::vector<int> FormationGraph::out_edge_indices(int i) const {
  if (i < 1 || i > n) throw IndexOutOfRange("out_edge_indices: agent id outside [1, n]");
  std::vector<int> idx;
  for (int k = 0; k < m(); ++k) {
    if (edges[k].from == i) idx.push_back(k);
  }
  return idx;
}

int outvalence(const FormationGraph& g, int i) {
  if (i < 1 || i > g.n) throw IndexOutOfRange("outvalence: agent id outside [1, n]");
  int c = 0;
  for (const auto& e : g.edges) c += (e.from == i);
  return c;
}

int invalence(const FormationGraph& g, int i) {
  if (i < 1 || i > g.n) throw IndexOutOfRange("invalence: agent id outside [1, n]");
  int c = 0;
  for (const auto& e : g.edges) c += (e.to == i);
  return c;
}

}  // namespace formlab
