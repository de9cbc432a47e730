#include "ecx/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace ecx::svg {

namespace {

constexpr double kWidth = 640, kHeight = 640, kMargin = 60;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

void open(std::ostringstream& out, const std::string& title) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"30\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
        << escape(title) << "</text>\n";
}

// Plot area mapping for a grid.
struct Frame {
    const GridSpec& grid;
    double px(double x) const { return kMargin + (x - grid.x_min) / (grid.x_max - grid.x_min) * (kWidth - 2 * kMargin); }
    double py(double y) const {
        return kHeight - kMargin - (y - grid.y_min) / (grid.y_max - grid.y_min) * (kHeight - 2 * kMargin);
    }
};

void axes(std::ostringstream& out, const GridSpec& grid) {
    const Frame f{grid};
    out << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kWidth - 2 * kMargin << "\" height=\""
        << kHeight - 2 * kMargin << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double t : {0.0, 0.5, 1.0}) {
        const double x = grid.x_min + t * (grid.x_max - grid.x_min);
        const double y = grid.y_min + t * (grid.y_max - grid.y_min);
        out << "<text x=\"" << num(f.px(x)) << "\" y=\"" << kHeight - kMargin + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << num(x) << "</text>\n";
        out << "<text x=\"" << kMargin - 6 << "\" y=\"" << num(f.py(y) + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << num(y) << "</text>\n";
    }
}

std::string colour(double t) {
    static constexpr std::array<std::array<double, 3>, 5> stops{{{68, 1, 84}, {59, 82, 139}, {33, 145, 140},
                                                                 {94, 201, 98}, {253, 231, 37}}};
    t = std::clamp(t, 0.0, 1.0) * 4.0;
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), 3);
    const double u = t - static_cast<double>(i);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", static_cast<int>(std::lround(stops[i][0] + u * (stops[i + 1][0] - stops[i][0]))),
                  static_cast<int>(std::lround(stops[i][1] + u * (stops[i + 1][1] - stops[i][1]))),
                  static_cast<int>(std::lround(stops[i][2] + u * (stops[i + 1][2] - stops[i][2]))));
    return buf;
}

}  // namespace

std::string quiver(const PlaneField& v, const std::string& title, const std::vector<double>& overlay) {
    std::ostringstream out;
    open(out, title);
    axes(out, v.grid);
    const Frame f{v.grid};
    double longest = 0.0;
    for (std::size_t i = 0; i < v.grid.nx; ++i)
        for (std::size_t j = 0; j < v.grid.ny; ++j)
            if (std::isfinite(v.vx(i, j))) longest = std::max(longest, std::hypot(v.vx(i, j), v.vy(i, j)));
    const double cell = std::min(v.grid.cell_width(), v.grid.cell_height());
    const double scale = longest > 0.0 ? 0.9 * cell / longest : 0.0;
    out << "<g stroke=\"black\" stroke-width=\"1.2\">\n";
    for (std::size_t i = 0; i < v.grid.nx; ++i)
        for (std::size_t j = 0; j < v.grid.ny; ++j) {
            if (!std::isfinite(v.vx(i, j))) continue;
            const double x0 = v.grid.center_x(i), y0 = v.grid.center_y(j);
            const double x1 = x0 + scale * v.vx(i, j), y1 = y0 + scale * v.vy(i, j);
            const double ax = f.px(x0), ay = f.py(y0), bx = f.px(x1), by = f.py(y1);
            out << "<line x1=\"" << num(ax) << "\" y1=\"" << num(ay) << "\" x2=\"" << num(bx) << "\" y2=\"" << num(by)
                << "\"/>\n";
            const double len = std::hypot(bx - ax, by - ay);
            if (len > 0.0) {
                const double ux = (bx - ax) / len, uy = (by - ay) / len, head = std::min(5.0, 0.4 * len);
                out << "<polygon points=\"" << num(bx) << ',' << num(by) << ' ' << num(bx - head * ux + 0.5 * head * uy)
                    << ',' << num(by - head * uy - 0.5 * head * ux) << ' ' << num(bx - head * ux - 0.5 * head * uy)
                    << ',' << num(by - head * uy + 0.5 * head * ux) << "\"/>\n";
            }
        }
    out << "</g>\n";
    if (!overlay.empty()) {
        out << "<g fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\">\n";
        std::string path;
        for (std::size_t i = 0; i < overlay.size() && i < v.grid.nx; ++i) {
            if (!std::isfinite(overlay[i])) {
                if (!path.empty()) out << "<path d=\"" << path << "\"/>\n";
                path.clear();
                continue;
            }
            path += (path.empty() ? "M" : " L") + num(f.px(v.grid.center_x(i))) + ',' + num(f.py(overlay[i]));
        }
        if (!path.empty()) out << "<path d=\"" << path << "\"/>\n";
        out << "</g>\n";
    }
    out << "</svg>\n";
    return out.str();
}

std::string heatmap(const Matrix<double>& values, const GridSpec& grid, const std::string& title) {
    std::ostringstream out;
    open(out, title);
    const Frame f{grid};
    double lo = INFINITY, hi = -INFINITY;
    for (double v : values.data())
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    const double w = f.px(grid.x_min + grid.cell_width()) - f.px(grid.x_min);
    const double h = f.py(grid.y_min) - f.py(grid.y_min + grid.cell_height());
    for (std::size_t i = 0; i < grid.nx; ++i)
        for (std::size_t j = 0; j < grid.ny; ++j) {
            const double v = values(i, j);
            if (!std::isfinite(v)) continue;
            const double t = hi > lo ? (v - lo) / (hi - lo) : 0.5;
            out << "<rect x=\"" << num(f.px(grid.x_min + static_cast<double>(i) * grid.cell_width())) << "\" y=\""
                << num(f.py(grid.y_min + static_cast<double>(j + 1) * grid.cell_height())) << "\" width=\"" << num(w)
                << "\" height=\"" << num(h) << "\" fill=\"" << colour(t) << "\"/>\n";
        }
    axes(out, grid);
    if (std::isfinite(lo))
        out << "<text x=\"" << kWidth - kMargin << "\" y=\"" << kHeight - 20
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">range " << num(lo) << " .. "
            << num(hi) << "</text>\n";
    out << "</svg>\n";
    return out.str();
}

std::string bars(const std::vector<std::string>& labels, const std::vector<double>& values, const std::string& title,
                 const std::string& y_label) {
    std::ostringstream out;
    open(out, title);
    double top = 0.0;
    for (double v : values)
        if (std::isfinite(v)) top = std::max(top, v);
    if (top <= 0.0) top = 1.0;
    const double area_w = kWidth - 2 * kMargin, area_h = kHeight - 2 * kMargin;
    const double slot = labels.empty() ? area_w : area_w / static_cast<double>(labels.size());
    out << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\"" << kWidth - kMargin << "\" y2=\""
        << kHeight - kMargin << "\" stroke=\"black\"/>\n";
    out << "<text x=\"20\" y=\"" << kHeight / 2 << "\" transform=\"rotate(-90 20 " << kHeight / 2
        << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << escape(y_label) << "</text>\n";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double v = i < values.size() && std::isfinite(values[i]) ? values[i] : 0.0;
        const double bh = v / top * area_h;
        const double x = kMargin + static_cast<double>(i) * slot + 0.15 * slot;
        out << "<rect x=\"" << num(x) << "\" y=\"" << num(kHeight - kMargin - bh) << "\" width=\"" << num(0.7 * slot)
            << "\" height=\"" << num(bh) << "\" fill=\"" << colour(static_cast<double>(i + 1) / static_cast<double>(labels.size() + 1))
            << "\"/>\n";
        out << "<text x=\"" << num(x + 0.35 * slot) << "\" y=\"" << kHeight - kMargin + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << escape(labels[i]) << "</text>\n";
        out << "<text x=\"" << num(x + 0.35 * slot) << "\" y=\"" << num(kHeight - kMargin - bh - 6)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << num(v) << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace ecx::svg
