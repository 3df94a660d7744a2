#include "potts/svg.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace potts {

namespace {

// Pixel coordinates carry two decimals: sub-pixel accuracy without
// letting printf round-trip noise into the byte-identical output.
std::string fpx(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

// Tick labels use %g with 6 significant digits, trimmed by printf itself.
std::string ftick(double v) {
    if (std::abs(v) < 1e-12) v = 0.0;  // avoid "-0" and stray 1e-17 labels
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string escape_text(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

// Largest "nice" step (1, 2 or 5 times a power of ten) giving at most
// max_ticks intervals across the span.
double nice_step(double span, int max_ticks) {
    if (!(span > 0.0)) return 1.0;
    double raw = span / max_ticks;
    double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * mag >= raw) return m * mag;
    return 10.0 * mag;
}

}  // namespace

SvgPlot::SvgPlot(std::string title, std::string x_label, std::string y_label,
                 int width, int height)
    : width_(width), height_(height), title_(std::move(title)),
      x_label_(std::move(x_label)), y_label_(std::move(y_label)) {
    if (width_ < 160 || height_ < 120)
        throw std::invalid_argument("SvgPlot: canvas too small");
}

void SvgPlot::set_range(double x0, double x1, double y0, double y1) {
    if (!(std::isfinite(x0) && std::isfinite(x1) && std::isfinite(y0) && std::isfinite(y1)))
        throw std::invalid_argument("SvgPlot: non-finite range");
    if (x1 < x0) std::swap(x0, x1);
    if (y1 < y0) std::swap(y0, y1);
    if (x1 - x0 < 1e-300) { x0 -= 0.5; x1 += 0.5; }
    if (y1 - y0 < 1e-300) { y0 -= 0.5; y1 += 0.5; }
    x0_ = x0; x1_ = x1; y0_ = y0; y1_ = y1;
    range_set_ = true;
}

double SvgPlot::px(double x) const {
    double w = width_ - margin_left_ - margin_right_;
    return margin_left_ + (x - x0_) / (x1_ - x0_) * w;
}

double SvgPlot::py(double y) const {
    double h = height_ - margin_top_ - margin_bottom_;
    return margin_top_ + (y1_ - y) / (y1_ - y0_) * h;
}

void SvgPlot::add_polyline(std::span<const double> xs, std::span<const double> ys,
                           const std::string& color, double stroke_width,
                           const std::string& dash) {
    if (!range_set_) throw std::logic_error("SvgPlot: set_range before adding elements");
    if (xs.size() != ys.size() || xs.empty())
        throw std::invalid_argument("SvgPlot: polyline needs matching nonempty coordinates");
    std::ostringstream el;
    el << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
       << fpx(stroke_width) << "\"";
    if (!dash.empty()) el << " stroke-dasharray=\"" << dash << "\"";
    el << " points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) el << ' ';
        el << fpx(px(xs[i])) << ',' << fpx(py(ys[i]));
    }
    el << "\"/>";
    elements_.push_back(el.str());
}

void SvgPlot::add_band(std::span<const double> xs, std::span<const double> y_low,
                       std::span<const double> y_high, const std::string& fill,
                       double opacity) {
    if (!range_set_) throw std::logic_error("SvgPlot: set_range before adding elements");
    if (xs.size() != y_low.size() || xs.size() != y_high.size() || xs.size() < 2)
        throw std::invalid_argument("SvgPlot: band needs >= 2 matching samples");
    std::ostringstream el;
    el << "<polygon fill=\"" << fill << "\" fill-opacity=\"" << fpx(opacity)
       << "\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) el << ' ';
        el << fpx(px(xs[i])) << ',' << fpx(py(y_high[i]));
    }
    for (std::size_t i = xs.size(); i-- > 0;)
        el << ' ' << fpx(px(xs[i])) << ',' << fpx(py(y_low[i]));
    el << "\"/>";
    elements_.push_back(el.str());
}

void SvgPlot::add_column(double x0, double x1, double y, const std::string& fill,
                         double opacity) {
    if (!range_set_) throw std::logic_error("SvgPlot: set_range before adding elements");
    double xa = px(x0), xb = px(x1);
    double ybase = py(std::max(0.0, y0_)), ytop = py(y);
    std::ostringstream el;
    el << "<rect x=\"" << fpx(xa) << "\" y=\"" << fpx(std::min(ytop, ybase))
       << "\" width=\"" << fpx(std::max(0.5, xb - xa)) << "\" height=\""
       << fpx(std::abs(ybase - ytop)) << "\" fill=\"" << fill
       << "\" fill-opacity=\"" << fpx(opacity) << "\" stroke=\"none\"/>";
    elements_.push_back(el.str());
}

void SvgPlot::add_marker(double x, double y, const std::string& color, double radius) {
    if (!range_set_) throw std::logic_error("SvgPlot: set_range before adding elements");
    std::ostringstream el;
    el << "<circle cx=\"" << fpx(px(x)) << "\" cy=\"" << fpx(py(y)) << "\" r=\""
       << fpx(radius) << "\" fill=\"" << color << "\"/>";
    elements_.push_back(el.str());
}

void SvgPlot::add_label(double x, double y, const std::string& text,
                        const std::string& color) {
    if (!range_set_) throw std::logic_error("SvgPlot: set_range before adding elements");
    std::ostringstream el;
    el << "<text x=\"" << fpx(px(x)) << "\" y=\"" << fpx(py(y))
       << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << color << "\">"
       << escape_text(text) << "</text>";
    elements_.push_back(el.str());
}

void SvgPlot::add_legend(const std::string& name, const std::string& color) {
    legend_.emplace_back(name, color);
}

std::string SvgPlot::render() const {
    if (!range_set_) throw std::logic_error("SvgPlot: set_range before rendering");
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_
        << "\" height=\"" << height_ << "\" viewBox=\"0 0 " << width_ << ' '
        << height_ << "\">\n";
    out << "<rect width=\"" << width_ << "\" height=\"" << height_
        << "\" fill=\"#ffffff\"/>\n";

    double plot_l = margin_left_, plot_r = width_ - margin_right_;
    double plot_t = margin_top_, plot_b = height_ - margin_bottom_;

    // Clip data elements to the plot rectangle.
    out << "<clipPath id=\"plot\"><rect x=\"" << fpx(plot_l) << "\" y=\"" << fpx(plot_t)
        << "\" width=\"" << fpx(plot_r - plot_l) << "\" height=\"" << fpx(plot_b - plot_t)
        << "\"/></clipPath>\n";

    // Grid and ticks underneath the data.
    double xstep = nice_step(x1_ - x0_, 6), ystep = nice_step(y1_ - y0_, 6);
    out << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#444444\">\n";
    for (double x = std::ceil(x0_ / xstep) * xstep; x <= x1_ + 1e-9 * xstep; x += xstep) {
        double X = px(x);
        out << "<line x1=\"" << fpx(X) << "\" y1=\"" << fpx(plot_t) << "\" x2=\"" << fpx(X)
            << "\" y2=\"" << fpx(plot_b) << "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n";
        out << "<text x=\"" << fpx(X) << "\" y=\"" << fpx(plot_b + 16)
            << "\" text-anchor=\"middle\">" << ftick(x) << "</text>\n";
    }
    for (double y = std::ceil(y0_ / ystep) * ystep; y <= y1_ + 1e-9 * ystep; y += ystep) {
        double Y = py(y);
        out << "<line x1=\"" << fpx(plot_l) << "\" y1=\"" << fpx(Y) << "\" x2=\"" << fpx(plot_r)
            << "\" y2=\"" << fpx(Y) << "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n";
        out << "<text x=\"" << fpx(plot_l - 6) << "\" y=\"" << fpx(Y + 4)
            << "\" text-anchor=\"end\">" << ftick(y) << "</text>\n";
    }
    out << "</g>\n";

    out << "<g clip-path=\"url(#plot)\">\n";
    for (const std::string& el : elements_) out << el << '\n';
    out << "</g>\n";

    // Frame on top of the data.
    out << "<rect x=\"" << fpx(plot_l) << "\" y=\"" << fpx(plot_t) << "\" width=\""
        << fpx(plot_r - plot_l) << "\" height=\"" << fpx(plot_b - plot_t)
        << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1.5\"/>\n";

    out << "<text x=\"" << fpx(0.5 * (plot_l + plot_r)) << "\" y=\"" << fpx(plot_t - 14)
        << "\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\" "
           "fill=\"#111111\">"
        << escape_text(title_) << "</text>\n";
    out << "<text x=\"" << fpx(0.5 * (plot_l + plot_r)) << "\" y=\"" << fpx(plot_b + 38)
        << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
           "fill=\"#111111\">"
        << escape_text(x_label_) << "</text>\n";
    out << "<text x=\"" << fpx(18.0) << "\" y=\"" << fpx(0.5 * (plot_t + plot_b))
        << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
           "fill=\"#111111\" transform=\"rotate(-90 " << fpx(18.0) << ' '
        << fpx(0.5 * (plot_t + plot_b)) << ")\">" << escape_text(y_label_) << "</text>\n";

    for (std::size_t i = 0; i < legend_.size(); ++i) {
        double ly = plot_t + 16 + 18.0 * static_cast<double>(i);
        double lx = plot_r - 150;
        out << "<line x1=\"" << fpx(lx) << "\" y1=\"" << fpx(ly - 4) << "\" x2=\""
            << fpx(lx + 24) << "\" y2=\"" << fpx(ly - 4) << "\" stroke=\""
            << legend_[i].second << "\" stroke-width=\"3\"/>\n";
        out << "<text x=\"" << fpx(lx + 30) << "\" y=\"" << fpx(ly)
            << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#111111\">"
            << escape_text(legend_[i].first) << "</text>\n";
    }

    out << "</svg>\n";
    return out.str();
}

void SvgPlot::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("SvgPlot: cannot open " + path);
    out << render();
    if (!out) throw std::runtime_error("SvgPlot: write failed for " + path);
}

}  // namespace potts
