#include "pedplan/render.hpp"

#include <cmath>
#include <map>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "pedplan/geometry.hpp"

namespace pedplan {

using nlohmann::json;

namespace {

struct Mapper {
  double min_x = 0, max_y = 0, scale = 8.0;  // px per meter
  double px(double x) const { return (x - min_x) * scale; }
  double py(double y) const { return (max_y - y) * scale; }  // flip y
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

const char* region_fill(const std::string& kind) {
  if (kind == "road") return "#9aa0a6";
  if (kind == "sidewalk") return "#d7c9a7";
  if (kind == "crosswalk") return "#e8e3c0";
  return "#bde0bd";  // goal
}

void emit_polygon(std::ostringstream& out, const json& poly, const Mapper& m,
                  const std::string& fill, const std::string& extra = "") {
  out << "<polygon points=\"";
  for (size_t i = 0; i < poly.size(); ++i) {
    if (i) out << ' ';
    out << fmt(m.px(poly[i][0].get<double>())) << ','
        << fmt(m.py(poly[i][1].get<double>()));
  }
  out << "\" fill=\"" << fill << "\"" << extra << "/>\n";
}

void emit_box(std::ostringstream& out, const Mapper& m, double cx, double cy,
              double heading, double hl, double hw, const std::string& fill) {
  Vec2 ax{std::cos(heading), std::sin(heading)};
  Vec2 ay = ax.perp();
  Vec2 c{cx, cy};
  Vec2 corners[4] = {c + ax * hl + ay * hw, c - ax * hl + ay * hw,
                     c - ax * hl - ay * hw, c + ax * hl - ay * hw};
  out << "<polygon points=\"";
  for (int i = 0; i < 4; ++i) {
    if (i) out << ' ';
    out << fmt(m.px(corners[i].x)) << ',' << fmt(m.py(corners[i].y));
  }
  out << "\" fill=\"" << fill << "\" stroke=\"#222\" stroke-width=\"0.8\"/>\n";
}

void emit_ellipse(std::ostringstream& out, const Mapper& m, double cx, double cy,
                  double sxx, double syy, double sxy, double mult,
                  const std::string& fill, double opacity) {
  // Principal axes from the eigendecomposition of the covariance.
  double tr = sxx + syy;
  double det = sxx * syy - sxy * sxy;
  double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
  double l1 = 0.5 * tr + disc;
  double l2 = 0.5 * tr - disc;
  double angle = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  double rx = mult * std::sqrt(std::max(l1, 0.0)) * m.scale;
  double ry = mult * std::sqrt(std::max(l2, 0.0)) * m.scale;
  out << "<ellipse cx=\"" << fmt(m.px(cx)) << "\" cy=\"" << fmt(m.py(cy))
      << "\" rx=\"" << fmt(rx) << "\" ry=\"" << fmt(ry) << "\" transform=\"rotate("
      << fmt(-angle * 180.0 / kPi) << ' ' << fmt(m.px(cx)) << ' ' << fmt(m.py(cy))
      << ")\" fill=\"" << fill << "\" fill-opacity=\"" << fmt(opacity) << "\"/>\n";
}

}  // namespace

std::string render_svg(const std::vector<std::string>& trace_lines, int tick) {
  json header;
  json target;
  std::vector<json> history;
  for (const std::string& line : trace_lines) {
    if (line.empty()) continue;
    json rec = json::parse(line);
    if (rec.value("type", "") == "header") {
      header = rec;
    } else if (rec.value("type", "") == "tick") {
      int t = rec["tick"].get<int>();
      if (t <= tick) history.push_back(rec);
      if (t == tick) target = rec;
    }
  }
  if (header.is_null()) throw std::runtime_error("render: trace has no header");
  if (target.is_null()) {
    throw std::runtime_error("render: tick " + std::to_string(tick) +
                             " not present in trace");
  }
  const json& scenario = header["scenario"];
  const json& bounds = scenario["bounds"];
  Mapper m;
  m.min_x = bounds["min"][0].get<double>();
  double min_y = bounds["min"][1].get<double>();
  double max_x = bounds["max"][0].get<double>();
  m.max_y = bounds["max"][1].get<double>();
  double w = (max_x - m.min_x) * m.scale;
  double h = (m.max_y - min_y) * m.scale;

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(w)
      << "\" height=\"" << fmt(h) << "\" viewBox=\"0 0 " << fmt(w) << ' '
      << fmt(h) << "\">\n";
  out << "<rect width=\"" << fmt(w) << "\" height=\"" << fmt(h)
      << "\" fill=\"#f4f4f2\"/>\n";

  for (const json& region : scenario["regions"]) {
    emit_polygon(out, region["polygon"], m,
                 region_fill(region["kind"].get<std::string>()));
  }
  emit_polygon(out, scenario["ego"]["goal_region"], m, "none",
               " stroke=\"#2ca02c\" stroke-width=\"1.5\" stroke-dasharray=\"6,4\"");
  for (const json& lane : scenario["lanes"]) {
    out << "<polyline points=\"";
    const json& line = lane["centerline"];
    for (size_t i = 0; i < line.size(); ++i) {
      if (i) out << ' ';
      out << fmt(m.px(line[i][0].get<double>())) << ','
          << fmt(m.py(line[i][1].get<double>()));
    }
    out << "\" fill=\"none\" stroke=\"#ffffff\" stroke-width=\"1\" "
           "stroke-dasharray=\"8,8\"/>\n";
  }

  // Uncertainty ellipses under the agents.
  if (target.contains("preds")) {
    struct Level {
      double mult;
      const char* fill;
      double opacity;
    };
    const Level levels[3] = {{3.0, "#f2d600", 0.18},
                             {1.0, "#ff8c00", 0.35},
                             {0.2, "#d62728", 0.6}};
    for (const json& agent : target["preds"]) {
      for (const json& st : agent["states"]) {
        for (const Level& lv : levels) {
          emit_ellipse(out, m, st[1].get<double>(), st[2].get<double>(),
                       st[3].get<double>(), st[4].get<double>(),
                       st[5].get<double>(), lv.mult, lv.fill, lv.opacity);
        }
      }
    }
  }

  // Pedestrian trails over the preceding ticks.
  out << "<g stroke=\"#1f77b4\" stroke-width=\"0.6\" stroke-opacity=\"0.35\" "
         "fill=\"none\">\n";
  if (history.size() > 1) {
    std::map<int, std::vector<std::pair<double, double>>> trails;
    for (const json& rec : history) {
      for (const json& p : rec["peds"]) {
        trails[p[0].get<int>()].push_back({p[1].get<double>(), p[2].get<double>()});
      }
    }
    for (const auto& [id, pts] : trails) {
      if (pts.size() < 2) continue;
      out << "<polyline points=\"";
      for (size_t i = 0; i < pts.size(); ++i) {
        if (i) out << ' ';
        out << fmt(m.px(pts[i].first)) << ',' << fmt(m.py(pts[i].second));
      }
      out << "\"/>\n";
    }
  }
  out << "</g>\n";

  for (const json& p : target["peds"]) {
    bool arrived = p[5].get<int>() != 0;
    out << "<circle cx=\"" << fmt(m.px(p[1].get<double>())) << "\" cy=\""
        << fmt(m.py(p[2].get<double>())) << "\" r=\"" << fmt(0.3 * m.scale)
        << "\" fill=\"" << (arrived ? "#7f7f7f" : "#1f77b4") << "\"/>\n";
  }
  for (const json& o : target["obstacles"]) {
    emit_box(out, m, o[1].get<double>(), o[2].get<double>(), o[3].get<double>(),
             o[5].get<double>(), o[6].get<double>(), "#8c564b");
  }
  const json& ego = target["ego"];
  double ego_hl = 0.5 * header["scenario"]["ego"].value("length", 4.5);
  double ego_hw = 0.5 * header["scenario"]["ego"].value("width", 1.8);
  emit_box(out, m, ego["x"].get<double>(), ego["y"].get<double>(),
           ego["heading"].get<double>(), ego_hl, ego_hw, "#1a6fbf");

  out << "</svg>\n";
  return out.str();
}

}  // namespace pedplan
