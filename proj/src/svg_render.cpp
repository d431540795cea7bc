#include "formlab/svg_render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "formlab/errors.hpp"

namespace formlab {

namespace {

constexpr double kCanvas = 640.0;

struct Mapper {
  double sx = 1.0, sy = 1.0, scale = 1.0;
  double min_x = 0.0, min_y = 0.0;
  double width = kCanvas, height = kCanvas;

  // World box -> pixel box, y flipped so the plane reads the usual way up.
  static Mapper fit(double lo_x, double hi_x, double lo_y, double hi_y) {
    Mapper m;
    double w = hi_x - lo_x, h = hi_y - lo_y;
    const double pad = 0.08 * std::max({w, h, 1e-9});
    lo_x -= pad; hi_x += pad; lo_y -= pad; hi_y += pad;
    w = hi_x - lo_x; h = hi_y - lo_y;
    m.scale = kCanvas / std::max(w, h);
    m.min_x = lo_x;
    m.min_y = lo_y;
    m.width = w * m.scale;
    m.height = h * m.scale;
    return m;
  }

  double px(double x) const { return (x - min_x) * scale; }
  double py(double y) const { return height - (y - min_y) * scale; }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string svg_open(const Mapper& m) {
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
                  num(m.width) + "\" height=\"" + num(m.height) +
                  "\" viewBox=\"0 0 " + num(m.width) + " " + num(m.height) +
                  "\">\n";
  s += "<defs><marker id=\"arrow\" viewBox=\"0 0 10 10\" refX=\"9\" refY=\"5\""
       " markerWidth=\"7\" markerHeight=\"7\" orient=\"auto-start-reverse\">"
       "<path d=\"M 0 0 L 10 5 L 0 10 z\" fill=\"#555\"/></marker></defs>\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  return s;
}

void edge_lines(std::string& s, const FormationGraph& g,
                const std::vector<Vec2>& pts, const Mapper& m) {
  constexpr double kNodeR = 6.0;
  for (const auto& e : g.edges) {
    const Vec2 a = pts[e.from - 1], b = pts[e.to - 1];
    double ax = m.px(a.x()), ay = m.py(a.y());
    double bx = m.px(b.x()), by = m.py(b.y());
    // Stop short of the target disc so the arrowhead stays visible.
    const double dx = bx - ax, dy = by - ay;
    const double len = std::hypot(dx, dy);
    if (len > 2 * kNodeR) {
      bx -= dx / len * (kNodeR + 2.0);
      by -= dy / len * (kNodeR + 2.0);
    }
    s += "<line x1=\"" + num(ax) + "\" y1=\"" + num(ay) + "\" x2=\"" + num(bx) +
         "\" y2=\"" + num(by) +
         "\" stroke=\"#555\" stroke-width=\"1.5\" marker-end=\"url(#arrow)\"/>\n";
  }
}

void vertex_dots(std::string& s, const std::vector<Vec2>& pts, const Mapper& m,
                 bool labels) {
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double cx = m.px(pts[i].x()), cy = m.py(pts[i].y());
    const char* color = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
    s += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) +
         "\" r=\"6\" fill=\"" + color + "\" stroke=\"#333\"/>\n";
    if (labels) {
      s += "<text x=\"" + num(cx + 9) + "\" y=\"" + num(cy - 9) +
           "\" font-family=\"sans-serif\" font-size=\"14\">" +
           std::to_string(i + 1) + "</text>\n";
    }
  }
}

}  // namespace

std::string framework_svg(const Framework& fw) {
  const auto& pts = fw.config.points;
  if (pts.empty()) throw DegenerateInput("framework_svg: empty configuration");
  double lo_x = pts[0].x(), hi_x = pts[0].x();
  double lo_y = pts[0].y(), hi_y = pts[0].y();
  for (const auto& p : pts) {
    lo_x = std::min(lo_x, p.x()); hi_x = std::max(hi_x, p.x());
    lo_y = std::min(lo_y, p.y()); hi_y = std::max(hi_y, p.y());
  }
  const Mapper m = Mapper::fit(lo_x, hi_x, lo_y, hi_y);
  std::string s = svg_open(m);
  edge_lines(s, fw.graph, pts, m);
  vertex_dots(s, pts, m, true);
  s += "</svg>\n";
  return s;
}

std::string trajectory_svg(const std::vector<VecX>& states,
                           const FormationGraph* final_graph) {
  if (states.empty()) throw DegenerateInput("trajectory_svg: no states");
  const int dim = static_cast<int>(states.front().size());
  if (dim < 2 || dim % 2 != 0) {
    throw DimensionMismatch("trajectory_svg: states must be planar stacks");
  }
  const int n = dim / 2;
  double lo_x = states[0][0], hi_x = lo_x, lo_y = states[0][1], hi_y = lo_y;
  for (const auto& x : states) {
    for (int i = 0; i < n; ++i) {
      lo_x = std::min(lo_x, x[2 * i]); hi_x = std::max(hi_x, x[2 * i]);
      lo_y = std::min(lo_y, x[2 * i + 1]); hi_y = std::max(hi_y, x[2 * i + 1]);
    }
  }
  const Mapper m = Mapper::fit(lo_x, hi_x, lo_y, hi_y);
  std::string s = svg_open(m);

  std::vector<Vec2> final_pts(n);
  for (int i = 0; i < n; ++i) {
    final_pts[i] = Vec2(states.back()[2 * i], states.back()[2 * i + 1]);
  }
  if (final_graph != nullptr) {
    if (final_graph->n != n) {
      throw DimensionMismatch("trajectory_svg: graph size != agent count");
    }
    edge_lines(s, *final_graph, final_pts, m);
  }
  for (int i = 0; i < n; ++i) {
    const char* color = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
    std::string pl = "<polyline fill=\"none\" stroke=\"";
    pl += color;
    pl += "\" stroke-width=\"1.2\" points=\"";
    for (const auto& x : states) {
      pl += num(m.px(x[2 * i])) + "," + num(m.py(x[2 * i + 1])) + " ";
    }
    pl += "\"/>\n";
    s += pl;
    // Hollow circle at the start, filled at the end.
    s += "<circle cx=\"" + num(m.px(states.front()[2 * i])) + "\" cy=\"" +
         num(m.py(states.front()[2 * i + 1])) +
         "\" r=\"4\" fill=\"white\" stroke=\"" + color + "\"/>\n";
  }
  vertex_dots(s, final_pts, m, true);
  s += "</svg>\n";
  return s;
}

std::string trajectory_svg(const Trajectory& traj,
                           const FormationGraph* final_graph) {
  std::vector<VecX> flat;
  flat.reserve(traj.states.size());
  for (const auto& c : traj.states) flat.push_back(c.flat());
  return trajectory_svg(flat, final_graph);
}

}  // namespace formlab
