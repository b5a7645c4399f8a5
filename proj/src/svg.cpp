#include "disco/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#include "disco/error.hpp"

namespace disco {

namespace {

constexpr double kWidth = 640, kHeight = 640, kMargin = 48;

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
                                "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939"};

struct Frame {
  double x0, x1, y0, y1;
  double width = kWidth, height = kHeight;

  double sx(double x) const { return kMargin + (x - x0) / (x1 - x0) * (width - 2 * kMargin); }
  double sy(double y) const { return height - kMargin - (y - y0) / (y1 - y0) * (height - 2 * kMargin); }
};

void pad(double& lo, double& hi, double frac) {
  if (!(hi > lo)) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double d = (hi - lo) * frac;
  lo -= d;
  hi += d;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

void header(std::ostream& o, const Frame& f, const std::string& title) {
  o << std::fixed << std::setprecision(2);
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\"" << f.height
    << "\" viewBox=\"0 0 " << f.width << ' ' << f.height << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << f.width - 2 * kMargin << "\" height=\""
    << f.height - 2 * kMargin << "\" fill=\"none\" stroke=\"#888\"/>\n";
  if (!title.empty())
    o << "<text x=\"" << f.width / 2 << "\" y=\"" << kMargin / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" << escape(title) << "</text>\n";
}

void polyline(std::ostream& o, const std::vector<std::pair<double, double>>& pts, const char* color, bool dashed) {
  if (pts.size() < 2) return;
  o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
  if (dashed) o << " stroke-dasharray=\"5,4\"";
  o << " points=\"";
  for (const auto& [x, y] : pts) o << x << ',' << y << ' ';
  o << "\"/>\n";
}

void star(std::ostream& o, double cx, double cy, double r, const char* color) {
  o << "<polygon fill=\"" << color << "\" points=\"";
  for (int k = 0; k < 10; ++k) {
    const double a = -std::numbers::pi / 2 + k * std::numbers::pi / 5;
    const double rr = k % 2 == 0 ? r : 0.4 * r;
    o << cx + rr * std::cos(a) << ',' << cy + rr * std::sin(a) << ' ';
  }
  o << "\"/>\n";
}

void axis_labels(std::ostream& o, const Frame& f, const std::string& x, const std::string& y) {
  o << "<text x=\"" << f.width / 2 << "\" y=\"" << f.height - 12
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << escape(x) << "</text>\n";
  o << "<text x=\"14\" y=\"" << f.height / 2 << "\" transform=\"rotate(-90 14 " << f.height / 2
    << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << escape(y) << "</text>\n";
}

void tick_labels(std::ostream& o, const Frame& f, bool log_y) {
  o << "<g font-family=\"sans-serif\" font-size=\"10\" fill=\"#444\">\n";
  o << "<text x=\"" << kMargin << "\" y=\"" << f.height - kMargin + 14 << "\">" << f.x0 << "</text>\n";
  o << "<text x=\"" << f.width - kMargin << "\" y=\"" << f.height - kMargin + 14 << "\" text-anchor=\"end\">" << f.x1
    << "</text>\n";
  const auto fmt = [&](double v) {
    std::ostringstream s;
    s << std::setprecision(3) << (log_y ? std::pow(10.0, v) : v);
    return s.str();
  };
  o << "<text x=\"" << kMargin - 4 << "\" y=\"" << f.height - kMargin << "\" text-anchor=\"end\">" << fmt(f.y0)
    << "</text>\n";
  o << "<text x=\"" << kMargin - 4 << "\" y=\"" << kMargin + 10 << "\" text-anchor=\"end\">" << fmt(f.y1)
    << "</text>\n";
  o << "</g>\n";
}

void save(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open for writing", path);
  out << text;
}

struct Series {
  std::string label;
  std::vector<double> x, y;
};

std::string line_chart(const std::vector<Series>& series, const std::string& title, const std::string& xlabel,
                       const std::string& ylabel) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!(s.y[i] > 0) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, std::log10(s.y[i]));
      y1 = std::max(y1, std::log10(s.y[i]));
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (!(x1 > x0)) x1 = x0 + 1;
  pad(y0, y1, 0.05);
  const Frame f{x0, x1, y0, y1};
  std::ostringstream o;
  header(o, f, title);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = kPalette[k % 12];
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < series[k].x.size(); ++i) {
      const double v = series[k].y[i];
      if (v > 0 && std::isfinite(v)) pts.emplace_back(f.sx(series[k].x[i]), f.sy(std::log10(v)));
    }
    polyline(o, pts, color, false);
    o << "<text x=\"" << f.width - kMargin - 6 << "\" y=\"" << kMargin + 16 + 14 * k
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << color << "\">"
      << escape(series[k].label) << "</text>\n";
  }
  tick_labels(o, f, true);
  axis_labels(o, f, xlabel, ylabel);
  o << "</svg>\n";
  return o.str();
}

}  // namespace

std::string trajectory_svg(const Trajectory& traj, const PHNetwork& plant, double solid_until,
                           const std::string& title) {
  if (!plant.position_offset()) throw ValidationError("plant does not expose positions");
  const int m = plant.nodes();
  const Eigen::VectorXd target = plant.target();

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  const auto extend = [&](const Eigen::Vector2d& p) {
    x0 = std::min(x0, p.x());
    x1 = std::max(x1, p.x());
    y0 = std::min(y0, p.y());
    y1 = std::max(y1, p.y());
  };
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const Eigen::VectorXd x = traj.plant_state(static_cast<int>(k));
    for (int i = 0; i < m; ++i) extend(plant.position(x, i));
  }
  for (int i = 0; i < m; ++i) extend(plant.position(target, i));
  // equal aspect so circles stay circles
  const double span = std::max(x1 - x0, y1 - y0);
  const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
  x0 = cx - span / 2, x1 = cx + span / 2, y0 = cy - span / 2, y1 = cy + span / 2;
  pad(x0, x1, 0.05);
  pad(y0, y1, 0.05);
  const Frame f{x0, x1, y0, y1};

  std::ostringstream o;
  header(o, f, title);
  for (int i = 0; i < m; ++i) {
    const char* color = kPalette[i % 12];
    std::vector<std::pair<double, double>> solid, dashed;
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
      const Eigen::Vector2d p = plant.position(traj.plant_state(static_cast<int>(k)), i);
      const std::pair<double, double> s{f.sx(p.x()), f.sy(p.y())};
      if (traj.times[k] <= solid_until + 1e-12) {
        solid.push_back(s);
      } else {
        if (dashed.empty() && !solid.empty()) dashed.push_back(solid.back());
        dashed.push_back(s);
      }
    }
    polyline(o, solid, color, false);
    polyline(o, dashed, color, true);
    const Eigen::Vector2d start = plant.position(traj.plant_state(0), i);
    star(o, f.sx(start.x()), f.sy(start.y()), 7, color);
    const Eigen::Vector2d goal = plant.position(target, i);
    o << "<circle cx=\"" << f.sx(goal.x()) << "\" cy=\"" << f.sy(goal.y()) << "\" r=\"5\" fill=\"none\" stroke=\""
      << color << "\" stroke-width=\"1.5\"/>\n";
  }
  tick_labels(o, f, false);
  axis_labels(o, f, "x", "y");
  o << "</svg>\n";
  return o.str();
}

void write_trajectory_svg(const std::string& path, const Trajectory& traj, const PHNetwork& plant,
                          double solid_until, const std::string& title) {
  save(path, trajectory_svg(traj, plant, solid_until, title));
}

std::string bsm_svg(const BsmMap& map, const std::string& title) {
  Series end{"from zeta_N", {}, {}}, mid{"from zeta_N/2", {}, {}};
  for (std::size_t s = 0; s < map.from_end.size(); ++s) {
    end.x.push_back(static_cast<double>(s));
    end.y.push_back(map.from_end[s]);
  }
  for (std::size_t s = 0; s < map.from_mid.size(); ++s) {
    mid.x.push_back(static_cast<double>(s));
    mid.y.push_back(map.from_mid[s]);
  }
  return line_chart({end, mid}, title, "steps back s", "spectral norm");
}

void write_bsm_svg(const std::string& path, const BsmMap& map, const std::string& title) {
  save(path, bsm_svg(map, title));
}

std::string loss_svg(const std::vector<LossBreakdown>& history, const std::string& title) {
  Series total{"total", {}, {}}, lx{"Lx", {}, {}}, lca{"Lca", {}, {}}, rw{"Rw", {}, {}};
  for (std::size_t e = 0; e < history.size(); ++e) {
    const double x = static_cast<double>(e);
    for (auto* s : {&total, &lx, &lca, &rw}) s->x.push_back(x);
    total.y.push_back(history[e].total);
    lx.y.push_back(history[e].lx);
    lca.y.push_back(history[e].lca);
    rw.y.push_back(history[e].rw);
  }
  return line_chart({total, lx, lca, rw}, title, "epoch", "loss");
}

void write_loss_svg(const std::string& path, const std::vector<LossBreakdown>& history, const std::string& title) {
  save(path, loss_svg(history, title));
}

}  // namespace disco
