#include <cstdio>
#include <string>

#include "towplan/scenario.hpp"

namespace towplan {

namespace {

class SvgWriter {
 public:
  explicit SvgWriter(const Rect& b) : b_(b) {}

  // SVG y grows downwards; mirror about the world's horizontal midline.
  double sx(double x) const { return x; }
  double sy(double y) const { return b_.ymax + b_.ymin - y; }

  void raw(const std::string& s) { out_ += s; }

  void num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    out_ += buf;
  }

  void points(const std::vector<Vec2>& pts) {
    bool first = true;
    for (const Vec2& v : pts) {
      if (!first) out_ += ' ';
      num(sx(v.x));
      out_ += ',';
      num(sy(v.y));
      first = false;
    }
  }

  void polygon(const Polygon& poly, const char* cls) {
    out_ += "<polygon class=\"";
    out_ += cls;
    out_ += "\" points=\"";
    points(poly.vertices);
    out_ += "\"/>\n";
  }

  void polyline(const std::vector<Vec2>& pts, const char* cls) {
    if (pts.empty()) return;
    out_ += "<polyline class=\"";
    out_ += cls;
    out_ += "\" points=\"";
    points(pts);
    out_ += "\"/>\n";
  }

  void line(const Vec2& a, const Vec2& b, const std::string& cls) {
    out_ += "<line class=\"" + cls + "\" x1=\"";
    num(sx(a.x));
    out_ += "\" y1=\"";
    num(sy(a.y));
    out_ += "\" x2=\"";
    num(sx(b.x));
    out_ += "\" y2=\"";
    num(sy(b.y));
    out_ += "\"/>\n";
  }

  void circle(const Vec2& c, double r, const char* cls) {
    out_ += "<circle class=\"";
    out_ += cls;
    out_ += "\" cx=\"";
    num(sx(c.x));
    out_ += "\" cy=\"";
    num(sy(c.y));
    out_ += "\" r=\"";
    num(r);
    out_ += "\"/>\n";
  }

  std::string take() { return std::move(out_); }

 private:
  Rect b_;
  std::string out_;
};

}  // namespace

std::string render_svg(const Trajectory& traj, const Scenario& sc, const RenderOptions& opts) {
  const Rect& b = sc.world.bounds;
  SvgWriter w(b);
  w.raw("<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"");
  w.num(b.xmin);
  w.raw(" ");
  w.num(b.ymin);
  w.raw(" ");
  w.num(b.width());
  w.raw(" ");
  w.num(b.height());
  w.raw("\" width=\"");
  w.num(b.width() * opts.pixels_per_m);
  w.raw("\" height=\"");
  w.num(b.height() * opts.pixels_per_m);
  w.raw("\">\n");
  w.raw(
      "<style>"
      ".bounds{fill:#fafafa;stroke:#333;stroke-width:0.02}"
      ".obstacle{fill:#888;stroke:#222;stroke-width:0.01}"
      ".trailer-path{fill:none;stroke:#1f77b4;stroke-width:0.02}"
      ".tractor-path{fill:none;stroke:#d62728;stroke-width:0.02}"
      ".tractor{fill:#d62728;fill-opacity:0.25;stroke:#d62728;stroke-width:0.01}"
      ".trailer{fill:#1f77b4;fill-opacity:0.25;stroke:#1f77b4;stroke-width:0.01}"
      ".cable.taut{stroke:#2ca02c;stroke-width:0.015}"
      ".cable.slack{stroke:#ff7f0e;stroke-width:0.015;stroke-dasharray:0.04 0.03}"
      ".mode-change{fill:#9467bd}"
      ".goal{fill:none;stroke:#2ca02c;stroke-width:0.02}"
      "</style>\n");

  Polygon frame;
  frame.vertices = {{b.xmin, b.ymin}, {b.xmax, b.ymin}, {b.xmax, b.ymax}, {b.xmin, b.ymax}};
  w.polygon(frame, "bounds");
  for (const Polygon& ob : sc.world.obstacles) w.polygon(ob, "obstacle");
  w.circle({sc.goal.x, sc.goal.y}, 0.1, "goal");

  std::vector<Vec2> trailer_path, tractor_path;
  for (const HybridState& s : traj.states) {
    trailer_path.push_back({s.trailer.x, s.trailer.y});
    tractor_path.push_back({s.tractor.x, s.tractor.y});
  }
  w.polyline(trailer_path, "trailer-path");
  w.polyline(tractor_path, "tractor-path");

  const std::size_t stride = static_cast<std::size_t>(std::max(1, opts.stride));
  for (std::size_t k = 0; k < traj.states.size(); k += stride) {
    const HybridState& s = traj.states[k];
    const auto polys = system_polygons(s, sc.footprint, sc.params);
    w.raw("<g class=\"snapshot\" data-k=\"" + std::to_string(k) + "\">\n");
    w.polygon(polys[static_cast<int>(BodyPart::Tractor)], "tractor");
    w.polygon(polys[static_cast<int>(BodyPart::Trailer)], "trailer");
    const Polygon& cable = polys[static_cast<int>(BodyPart::Cable)];
    w.line(cable.vertices[0], cable.vertices[1],
           s.mode == CableMode::Taut ? "cable taut" : "cable slack");
    w.raw("</g>\n");
  }
  for (std::size_t k = 1; k < traj.states.size(); ++k) {
    if (traj.states[k].mode != traj.states[k - 1].mode) {
      w.circle({traj.states[k].trailer.x, traj.states[k].trailer.y}, 0.04, "mode-change");
    }
  }
  w.raw("</svg>\n");
  return w.take();
}

void render_svg(const Trajectory& traj, const Scenario& scenario,
                const std::filesystem::path& path, const RenderOptions& opts) {
  write_file(path, render_svg(traj, scenario, opts));
}

}  // namespace towplan
