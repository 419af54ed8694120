#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "graphnotears/grid.hpp"

namespace gnt {

// Self-contained SVG emission; no plotting dependency needed for static
// line-with-band panels.
namespace svg {

class Canvas {
 public:
  Canvas(double width, double height) : w_(width), h_(height) {
    buf_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w_
         << "\" height=\"" << h_ << "\" viewBox=\"0 0 " << w_ << " " << h_
         << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  }

  void line(double x1, double y1, double x2, double y2, const std::string& color,
            double width = 1.0, bool dashed = false) {
    buf_ << "<line x1=\"" << x1 << "\" y1=\"" << y1 << "\" x2=\"" << x2
         << "\" y2=\"" << y2 << "\" stroke=\"" << color << "\" stroke-width=\""
         << width << "\"";
    if (dashed) buf_ << " stroke-dasharray=\"6,4\"";
    buf_ << "/>\n";
  }

  void polyline(const std::vector<std::pair<double, double>>& pts,
                const std::string& color, double width = 1.5,
                bool dashed = false) {
    if (pts.empty()) return;
    buf_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
         << width << "\"";
    if (dashed) buf_ << " stroke-dasharray=\"6,4\"";
    buf_ << " points=\"";
    for (const auto& [x, y] : pts) buf_ << x << ',' << y << ' ';
    buf_ << "\"/>\n";
  }

  void polygon(const std::vector<std::pair<double, double>>& pts,
               const std::string& color, double opacity) {
    if (pts.empty()) return;
    buf_ << "<polygon fill=\"" << color << "\" fill-opacity=\"" << opacity
         << "\" stroke=\"none\" points=\"";
    for (const auto& [x, y] : pts) buf_ << x << ',' << y << ' ';
    buf_ << "\"/>\n";
  }

  void circle(double x, double y, double r, const std::string& color) {
    buf_ << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"" << r
         << "\" fill=\"" << color << "\"/>\n";
  }

  void text(double x, double y, const std::string& s, int size = 12,
            const std::string& anchor = "start", const std::string& color = "#333") {
    buf_ << "<text x=\"" << x << "\" y=\"" << y << "\" font-size=\"" << size
         << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor
         << "\" fill=\"" << color << "\">" << s << "</text>\n";
  }

  void save(const fs::path& path) {
    buf_ << "</svg>\n";
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << buf_.str();
  }

 private:
  double w_, h_;
  std::ostringstream buf_;
};

}  // namespace svg

namespace detail {

inline const char* method_color(const std::string& method) {
  if (method == "graphnotears") return "#1f77b4";
  if (method == "dynotears") return "#ff7f0e";
  if (method == "notears_lasso") return "#2ca02c";
  return "#7f7f7f";
}

struct SeriesPoint {
  double x = 0.0;
  double mean = 0.0;
  double ci = 0.0;
};

}  // namespace detail

// One figure per (noise kind, n, metric): a 2x2 grid of panels with rows the
// inter-slice model and columns the intra-slice model, x the variable count d,
// one line per method; solid lines score W, dashed lines score P (pooled).
// Shaded bands are the 95% CI across seeds. Returns the written file names.
inline std::vector<std::string> write_grid_plots(
    const std::vector<GridRecord>& records, const fs::path& out_dir) {
  fs::create_directories(out_dir);

  // Aggregate mean/CI per (noise, n, intra, inter, method, d).
  struct Agg {
    std::vector<double> f1w, f1p, shdw, shdp;
  };
  std::map<std::string, Agg> agg;
  std::set<std::pair<std::string, int>> figures;  // (noise kind, n)
  std::set<int> d_values;
  std::set<std::string> methods;
  std::set<std::string> intra_seen, inter_seen;

  const auto agg_key = [](const GridCell& c) {
    return to_string(c.noise.kind) + "/" + std::to_string(c.n) + "/" +
           to_string(c.intra) + "/" + to_string(c.inter) + "/" + c.method + "/" +
           std::to_string(c.d);
  };
  for (const GridRecord& r : records) {
    if (!r.error.empty()) continue;
    Agg& a = agg[agg_key(r.cell)];
    a.f1w.push_back(r.w.f1);
    a.f1p.push_back(r.p_pooled.f1);
    a.shdw.push_back(static_cast<double>(r.w.shd));
    a.shdp.push_back(static_cast<double>(r.p_pooled.shd));
    figures.insert({to_string(r.cell.noise.kind), r.cell.n});
    d_values.insert(r.cell.d);
    methods.insert(r.cell.method);
    intra_seen.insert(to_string(r.cell.intra));
    inter_seen.insert(to_string(r.cell.inter));
  }

  std::vector<std::string> written;
  const std::vector<std::string> intras(intra_seen.begin(), intra_seen.end());
  const std::vector<std::string> inters(inter_seen.begin(), inter_seen.end());

  for (const std::string metric : {std::string("f1"), std::string("shd")}) {
    for (const auto& [noise_kind, n] : figures) {
      const double panel_w = 300, panel_h = 240, margin = 56, legend_h = 70;
      const auto cols = static_cast<double>(intras.size());
      const auto rows = static_cast<double>(inters.size());
      const double width = margin + cols * (panel_w + 24) + 24;
      const double height = 40 + rows * (panel_h + 48) + legend_h;
      svg::Canvas canvas(width, height);
      canvas.text(width / 2, 22,
                  metric + " vs d  (noise=" + noise_kind + ", n=" + std::to_string(n) + ")",
                  15, "middle");

      // y range: [0,1] for f1; data max for shd.
      double ymax = 1.0;
      if (metric == "shd") {
        ymax = 1.0;
        for (const auto& [key, a] : agg) {
          for (double v : a.shdw) ymax = std::max(ymax, v);
          for (double v : a.shdp) ymax = std::max(ymax, v);
        }
        ymax *= 1.05;
      }

      const std::vector<int> ds(d_values.begin(), d_values.end());
      const double dmin = ds.front(), dmax = ds.back();

      for (std::size_t ri = 0; ri < inters.size(); ++ri) {
        for (std::size_t ci = 0; ci < intras.size(); ++ci) {
          const double x0 = margin + static_cast<double>(ci) * (panel_w + 24);
          const double y0 = 40 + static_cast<double>(ri) * (panel_h + 48);
          const auto map_x = [&](double d) {
            if (dmax == dmin) return x0 + panel_w / 2;
            return x0 + (d - dmin) / (dmax - dmin) * panel_w;
          };
          const auto map_y = [&](double v) {
            return y0 + panel_h - std::clamp(v / ymax, 0.0, 1.0) * panel_h;
          };

          canvas.line(x0, y0 + panel_h, x0 + panel_w, y0 + panel_h, "#888");
          canvas.line(x0, y0, x0, y0 + panel_h, "#888");
          canvas.text(x0 + panel_w / 2, y0 - 6,
                      "intra=" + intras[ci] + ", inter=" + inters[ri], 12, "middle");
          for (int d : ds) {
            canvas.text(map_x(d), y0 + panel_h + 16, std::to_string(d), 10, "middle");
          }
          canvas.text(x0 + panel_w / 2, y0 + panel_h + 32, "d", 11, "middle");
          for (double frac : {0.0, 0.5, 1.0}) {
            char lab[32];
            std::snprintf(lab, sizeof lab, "%.3g", frac * ymax);
            canvas.text(x0 - 6, map_y(frac * ymax) + 4, lab, 10, "end");
          }

          for (const std::string& method : methods) {
            for (const bool inter_series : {false, true}) {
              std::vector<detail::SeriesPoint> pts;
              for (int d : ds) {
                const std::string key = noise_kind + "/" + std::to_string(n) + "/" +
                                        intras[ci] + "/" + inters[ri] + "/" +
                                        method + "/" + std::to_string(d);
                const auto it = agg.find(key);
                if (it == agg.end()) continue;
                const std::vector<double>& vals =
                    metric == "f1" ? (inter_series ? it->second.f1p : it->second.f1w)
                                   : (inter_series ? it->second.shdp : it->second.shdw);
                const auto mc = detail::mean_ci(vals);
                pts.push_back({static_cast<double>(d), mc.mean, mc.ci95});
              }
              if (pts.empty()) continue;
              const std::string color = detail::method_color(method);
              std::vector<std::pair<double, double>> band;
              for (const auto& pt : pts) band.emplace_back(map_x(pt.x), map_y(pt.mean + pt.ci));
              for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
                band.emplace_back(map_x(it->x), map_y(it->mean - it->ci));
              }
              canvas.polygon(band, color, 0.12);
              std::vector<std::pair<double, double>> lpts;
              for (const auto& pt : pts) lpts.emplace_back(map_x(pt.x), map_y(pt.mean));
              canvas.polyline(lpts, color, 1.8, inter_series);
              for (const auto& pt : lpts) canvas.circle(pt.first, pt.second, 2.4, color);
            }
          }
        }
      }

      // Legend.
      double lx = margin;
      const double ly = height - legend_h + 22;
      for (const std::string& method : methods) {
        canvas.line(lx, ly - 4, lx + 26, ly - 4, detail::method_color(method), 2.2);
        canvas.text(lx + 32, ly, method, 11);
        lx += 34 + 8.0 * static_cast<double>(method.size());
      }
      canvas.line(margin, ly + 20, margin + 26, ly + 20, "#555", 2.0);
      canvas.text(margin + 32, ly + 24, "intra-slice (W)", 11);
      canvas.line(margin + 180, ly + 20, margin + 206, ly + 20, "#555", 2.0, true);
      canvas.text(margin + 212, ly + 24, "inter-slice (P)", 11);

      const std::string name =
          "plot_" + metric + "_" + noise_kind + "_n" + std::to_string(n) + ".svg";
      canvas.save(out_dir / name);
      written.push_back(name);
    }
  }
  return written;
}

// Threshold study: estimated |weights| of the thresholded W and P in
// decreasing order, one panel per matrix.
inline std::string write_sorted_weights_plot(const fs::path& result_dir,
                                             const fs::path& out_dir) {
  const LoadedFit fit = load_fit_result(result_dir);
  fs::create_directories(out_dir);

  std::vector<std::pair<std::string, std::vector<double>>> panels;
  const auto sorted_abs = [](const Matrix& m) {
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(m.size()));
    for (Index i = 0; i < m.size(); ++i) v.push_back(std::abs(m(i)));
    std::sort(v.rbegin(), v.rend());
    return v;
  };
  panels.emplace_back("W~", sorted_abs(fit.W_thresh));
  for (std::size_t i = 0; i < fit.P_thresh.size(); ++i) {
    panels.emplace_back("P~ lag " + std::to_string(i + 1), sorted_abs(fit.P_thresh[i]));
  }

  const double panel_w = 260, panel_h = 200, margin = 48;
  const double width = margin + static_cast<double>(panels.size()) * (panel_w + 28);
  const double height = 40 + panel_h + 64;
  svg::Canvas canvas(width, height);
  canvas.text(width / 2, 20, "sorted estimated edge weights (decreasing)", 14, "middle");

  for (std::size_t pi = 0; pi < panels.size(); ++pi) {
    const auto& [label, vals] = panels[pi];
    const double x0 = margin + static_cast<double>(pi) * (panel_w + 28);
    const double y0 = 40;
    double vmax = 1e-12;
    for (double v : vals) vmax = std::max(vmax, v);
    canvas.line(x0, y0 + panel_h, x0 + panel_w, y0 + panel_h, "#888");
    canvas.line(x0, y0, x0, y0 + panel_h, "#888");
    canvas.text(x0 + panel_w / 2, y0 - 6, label, 12, "middle");
    char lab[32];
    std::snprintf(lab, sizeof lab, "%.3g", vmax);
    canvas.text(x0 - 4, y0 + 10, lab, 10, "end");
    canvas.text(x0 - 4, y0 + panel_h + 4, "0", 10, "end");
    std::vector<std::pair<double, double>> pts;
    const auto count = static_cast<double>(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double x = x0 + (count > 1 ? static_cast<double>(i) / (count - 1) : 0.5) * panel_w;
      const double y = y0 + panel_h - vals[i] / vmax * panel_h;
      pts.emplace_back(x, y);
    }
    canvas.polyline(pts, "#1f77b4", 1.6);
    for (const auto& pt : pts) canvas.circle(pt.first, pt.second, 2.0, "#1f77b4");
    canvas.text(x0 + panel_w / 2, y0 + panel_h + 20, "rank", 11, "middle");
  }

  const std::string name = "sorted_weights.svg";
  canvas.save(out_dir / name);
  return name;
}

}  // namespace gnt
