#pragma once

#include <span>
#include <string>
#include <vector>

namespace potts {

// Minimal chart writer emitting plain SVG primitives (polylines, filled
// polygons, tick marks, text), so plots are self-contained files with no
// external renderer, stylesheet, or font dependency.  Coordinates are given
// in data space; the plot maps them to pixels inside fixed margins.  All
// numbers are formatted with fixed precision so re-rendering the same data
// produces byte-identical output.
class SvgPlot {
public:
    SvgPlot(std::string title, std::string x_label, std::string y_label,
            int width = 760, int height = 520);

    // Data ranges must be set before adding elements.  A degenerate range
    // (x0 == x1 or y0 == y1) is widened symmetrically.
    void set_range(double x0, double x1, double y0, double y1);

    // Open curve through the given points, clipped by the SVG viewport.
    void add_polyline(std::span<const double> xs, std::span<const double> ys,
                      const std::string& color, double stroke_width = 2.0,
                      const std::string& dash = "");

    // Filled band between two curves sampled on a common x grid: the
    // polygon runs along y_high left to right and back along y_low.
    void add_band(std::span<const double> xs, std::span<const double> y_low,
                  std::span<const double> y_high, const std::string& fill,
                  double opacity);

    // Vertical bar chart column [x0, x1] x [0, y] (histograms).
    void add_column(double x0, double x1, double y, const std::string& fill,
                    double opacity = 1.0);

    void add_marker(double x, double y, const std::string& color, double radius = 3.5);

    // Short annotation anchored at a data-space point.
    void add_label(double x, double y, const std::string& text,
                   const std::string& color = "#333333");

    // Legend entries are stacked in the top-right corner at render time.
    void add_legend(const std::string& name, const std::string& color);

    std::string render() const;
    void save(const std::string& path) const;

private:
    double px(double x) const;  // data x -> pixel x
    double py(double y) const;  // data y -> pixel y (inverted axis)

    int width_, height_;
    double margin_left_ = 64.0, margin_right_ = 18.0;
    double margin_top_ = 40.0, margin_bottom_ = 52.0;
    double x0_ = 0.0, x1_ = 1.0, y0_ = 0.0, y1_ = 1.0;
    bool range_set_ = false;
    std::string title_, x_label_, y_label_;
    std::vector<std::string> elements_;
    std::vector<std::pair<std::string, std::string>> legend_;
};

}  // namespace potts
