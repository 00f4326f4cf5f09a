#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "clap/evaluate.hpp"

namespace clap::evaluate {

namespace {

constexpr double kWidth = 480;
constexpr double kHeight = 320;
constexpr double kMargin = 48;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

// Linear map of [lo, hi] onto pixel range [a, b]; a degenerate domain maps to the midpoint.
struct Axis {
    double lo, hi, a, b;
    [[nodiscard]] double operator()(double v) const {
        if (hi <= lo) return (a + b) / 2.0;
        return a + (v - lo) / (hi - lo) * (b - a);
    }
};

std::string open_svg(const std::string& title) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
           "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"11\">\n" +
           "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + "<text x=\"" + num(kWidth / 2) +
           "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">" + title + "</text>\n";
}

std::string frame(const Axis& x, const Axis& y, const std::string& x_name, const std::string& y_name) {
    std::string s;
    s += "<line x1=\"" + num(x.a) + "\" y1=\"" + num(y.a) + "\" x2=\"" + num(x.b) + "\" y2=\"" + num(y.a) +
         "\" stroke=\"black\"/>\n";
    s += "<line x1=\"" + num(x.a) + "\" y1=\"" + num(y.a) + "\" x2=\"" + num(x.a) + "\" y2=\"" + num(y.b) +
         "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double vx = x.lo + (x.hi - x.lo) * i / 4.0;
        const double vy = y.lo + (y.hi - y.lo) * i / 4.0;
        s += "<text x=\"" + num(x(vx)) + "\" y=\"" + num(y.a + 14) + "\" text-anchor=\"middle\">" + label(vx) + "</text>\n";
        s += "<text x=\"" + num(x.a - 4) + "\" y=\"" + num(y(vy) + 4) + "\" text-anchor=\"end\">" + label(vy) + "</text>\n";
    }
    s += "<text x=\"" + num((x.a + x.b) / 2) + "\" y=\"" + num(kHeight - 8) + "\" text-anchor=\"middle\">" + x_name +
         "</text>\n";
    s += "<text x=\"12\" y=\"" + num((y.a + y.b) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 12 " +
         num((y.a + y.b) / 2) + ")\">" + y_name + "</text>\n";
    return s;
}

std::pair<double, double> padded_range(double lo, double hi) {
    if (hi <= lo) return {lo - 0.5, hi + 0.5};
    const double pad = (hi - lo) * 0.05;
    return {lo - pad, hi + pad};
}

}  // namespace

std::string sweep_svg(const SweepResult& s) {
    double lo = s.points.empty() ? 0.0 : s.points.front().value;
    double hi = lo;
    for (const auto& p : s.points) {
        lo = std::min(lo, p.value);
        hi = std::max(hi, p.value);
    }
    auto [ylo, yhi] = padded_range(lo, hi);
    Axis x{0.0, 1.0, kMargin, kWidth - kMargin / 2};
    Axis y{ylo, yhi, kHeight - kMargin, kMargin};

    std::string svg = open_svg(s.metric + " vs alpha") + frame(x, y, "alpha", s.metric);
    std::string path;
    for (const auto& p : s.points) path += (path.empty() ? "" : " ") + num(x(p.alpha)) + "," + num(y(p.value));
    svg += "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"" + path + "\"/>\n";
    for (const auto& p : s.points)
        svg += "<circle cx=\"" + num(x(p.alpha)) + "\" cy=\"" + num(y(p.value)) + "\" r=\"2.5\" fill=\"steelblue\"/>\n";
    const double bx = x(s.best_alpha);
    const double by = y(s.best_value);
    constexpr double r = 6;
    svg += "<polygon fill=\"crimson\" points=\"" + num(bx) + "," + num(by - r) + " " + num(bx + r) + "," + num(by) +
           " " + num(bx) + "," + num(by + r) + " " + num(bx - r) + "," + num(by) + "\"/>\n";
    svg += "</svg>\n";
    return svg;
}

std::string gain_cdf_svg(std::span<const double> gains) {
    std::vector<double> sorted(gains.begin(), gains.end());
    std::sort(sorted.begin(), sorted.end());
    auto [xlo, xhi] = padded_range(sorted.empty() ? 0.0 : sorted.front(), sorted.empty() ? 0.0 : sorted.back());
    Axis x{xlo, xhi, kMargin, kWidth - kMargin / 2};
    Axis y{0.0, 1.0, kHeight - kMargin, kMargin};
    std::string svg = open_svg("similarity gain CDF") + frame(x, y, "gain", "fraction of pairs");
    std::string path;
    const double n = static_cast<double>(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double before = static_cast<double>(i) / n;
        const double after = static_cast<double>(i + 1) / n;
        path += (path.empty() ? "" : " ") + num(x(sorted[i])) + "," + num(y(before)) + " " + num(x(sorted[i])) + "," +
                num(y(after));
    }
    svg += "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"" + path + "\"/>\n";
    if (xlo < 0.0 && xhi > 0.0)
        svg += "<line x1=\"" + num(x(0.0)) + "\" y1=\"" + num(y.a) + "\" x2=\"" + num(x(0.0)) + "\" y2=\"" + num(y.b) +
               "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
    svg += "</svg>\n";
    return svg;
}

std::string gain_box_svg(const Description& d) {
    auto [ylo, yhi] = padded_range(d.min, d.max);
    Axis x{0.0, 1.0, kMargin, kWidth - kMargin / 2};
    Axis y{ylo, yhi, kHeight - kMargin, kMargin};
    const double cx = x(0.5);
    constexpr double half = 40;
    std::string svg = open_svg("similarity gain distribution");
    svg += "<line x1=\"" + num(x.a) + "\" y1=\"" + num(y.a) + "\" x2=\"" + num(x.a) + "\" y2=\"" + num(y.b) +
           "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double v = ylo + (yhi - ylo) * i / 4.0;
        svg += "<text x=\"" + num(x.a - 4) + "\" y=\"" + num(y(v) + 4) + "\" text-anchor=\"end\">" + label(v) + "</text>\n";
    }
    auto hline = [&](double v, double w, const char* color) {
        return "<line x1=\"" + num(cx - w) + "\" y1=\"" + num(y(v)) + "\" x2=\"" + num(cx + w) + "\" y2=\"" + num(y(v)) +
               "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    };
    svg += "<line x1=\"" + num(cx) + "\" y1=\"" + num(y(d.min)) + "\" x2=\"" + num(cx) + "\" y2=\"" + num(y(d.max)) +
           "\" stroke=\"black\"/>\n";
    svg += "<rect x=\"" + num(cx - half) + "\" y=\"" + num(y(d.q75)) + "\" width=\"" + num(2 * half) + "\" height=\"" +
           num(y(d.q25) - y(d.q75)) + "\" fill=\"lightsteelblue\" stroke=\"black\"/>\n";
    svg += hline(d.min, half / 2, "black") + hline(d.max, half / 2, "black") + hline(d.median, half, "crimson");
    svg += "<text x=\"" + num(cx + half + 6) + "\" y=\"" + num(y(d.mean) + 4) + "\">mean " + label(d.mean) + "</text>\n";
    svg += "</svg>\n";
    return svg;
}

}  // namespace clap::evaluate
