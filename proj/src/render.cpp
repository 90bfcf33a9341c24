#include "sdot/render.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "sdot/errors.hpp"
#include "sdot/potential.hpp"

namespace sdot::render {

namespace {

constexpr double kCanvas = 840.0;
constexpr double kMargin = 20.0;

struct Mapper {
    Vec2 lo;
    double scale = 1.0;
    double height = kCanvas;

    explicit Mapper(const ConvexPolygon& domain) {
        const auto [blo, bhi] = domain.bounding_box();
        lo = blo;
        const double w = bhi.x - blo.x;
        const double h = bhi.y - blo.y;
        scale = (kCanvas - 2 * kMargin) / std::max(w, h);
    }

    double x(double v) const { return kMargin + (v - lo.x) * scale; }
    double y(double v) const { return height - kMargin - (v - lo.y) * scale; }
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

// golden-angle hue walk keyed by site index
std::string index_color(int index) {
    const double h = std::fmod(static_cast<double>(index) * 137.508, 360.0) / 60.0;
    const double s = 0.65, l = 0.55;
    const double c = (1 - std::abs(2 * l - 1)) * s;
    const double x = c * (1 - std::abs(std::fmod(h, 2.0) - 1));
    double r = 0, g = 0, b = 0;
    if (h < 1) {
        r = c; g = x;
    } else if (h < 2) {
        r = x; g = c;
    } else if (h < 3) {
        g = c; b = x;
    } else if (h < 4) {
        g = x; b = c;
    } else if (h < 5) {
        r = x; b = c;
    } else {
        r = c; b = x;
    }
    const double m = l - c / 2;
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", static_cast<int>(255 * (r + m)),
                  static_cast<int>(255 * (g + m)), static_cast<int>(255 * (b + m)));
    return buf;
}

std::string heat_color(double t) {
    // dark blue -> yellow ramp
    t = std::min(1.0, std::max(0.0, t));
    const int r = static_cast<int>(255 * t);
    const int g = static_cast<int>(80 + 160 * t);
    const int b = static_cast<int>(200 * (1 - t) + 30);
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return buf;
}

void polygon_element(std::ostringstream& svg, const ConvexPolygon& poly, const Mapper& map,
                     const std::string& fill, const std::string& stroke, double width) {
    svg << "<polygon points=\"";
    for (std::size_t i = 0; i < poly.vertices.size(); ++i) {
        if (i) svg << ' ';
        svg << fmt(map.x(poly.vertices[i].x)) << ',' << fmt(map.y(poly.vertices[i].y));
    }
    svg << "\" fill=\"" << fill << "\" stroke=\"" << stroke << "\" stroke-width=\""
        << fmt(width) << "\"/>\n";
}

} // namespace

std::string render_svg(const io::SolveResult& result, const std::string& mode) {
    if (mode != "diagram" && mode != "potential")
        throw InvalidInputError("render mode must be \"diagram\" or \"potential\"");

    const Mapper map(result.domain);
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kCanvas << "\" height=\""
        << kCanvas << "\" viewBox=\"0 0 " << kCanvas << ' ' << kCanvas << "\">\n";

    io::json meta;
    meta["mode"] = mode;
    meta["site_count"] = result.sites.size();
    {
        io::json empties = io::json::array(), measures = io::json::array();
        for (const PowerCell& c : result.diagram.cells) {
            measures.push_back(c.measure);
            if (c.empty()) empties.push_back(c.site_index);
        }
        meta["cell_measures"] = std::move(measures);
        meta["empty_cells"] = std::move(empties);
    }

    if (mode == "diagram") {
        int drawn = 0;
        for (const PowerCell& c : result.diagram.cells) {
            if (c.empty()) continue;
            polygon_element(svg, *c.polygon, map, index_color(c.site_index), "#333333", 0.6);
            ++drawn;
        }
        meta["polygon_count"] = drawn;
        polygon_element(svg, result.domain, map, "none", "#000000", 1.5);
        for (const Site& s : result.sites) {
            svg << "<circle cx=\"" << fmt(map.x(s.position.x)) << "\" cy=\""
                << fmt(map.y(s.position.y)) << "\" r=\"3.000\" fill=\""
                << index_color(static_cast<int>(&s - result.sites.data()))
                << "\" stroke=\"#000000\" stroke-width=\"0.800\"/>\n";
        }
    } else {
        // heat map of u_h sampled on a grid over the domain
        const BrenierPotential pot{result.sites, result.heights};
        const int res = 96;
        const auto [blo, bhi] = result.domain.bounding_box();
        const double dx = (bhi.x - blo.x) / res;
        const double dy = (bhi.y - blo.y) / res;
        double umin = std::numeric_limits<double>::infinity();
        double umax = -umin;
        std::vector<double> values(static_cast<std::size_t>(res * res),
                                   std::numeric_limits<double>::quiet_NaN());
        const double tol = kGeomEps * std::max(1.0, result.domain.diameter());
        for (int iy = 0; iy < res; ++iy)
            for (int ix = 0; ix < res; ++ix) {
                const Vec2 p{blo.x + (ix + 0.5) * dx, blo.y + (iy + 0.5) * dy};
                if (!result.domain.contains(p, tol)) continue;
                const double u = u_eval(pot, p).value;
                values[static_cast<std::size_t>(iy * res + ix)] = u;
                umin = std::min(umin, u);
                umax = std::max(umax, u);
            }
        const double span = (umax > umin) ? umax - umin : 1.0;
        for (int iy = 0; iy < res; ++iy)
            for (int ix = 0; ix < res; ++ix) {
                const double u = values[static_cast<std::size_t>(iy * res + ix)];
                if (std::isnan(u)) continue;
                const double px = map.x(blo.x + ix * dx);
                const double py = map.y(blo.y + (iy + 1) * dy);
                svg << "<rect x=\"" << fmt(px) << "\" y=\"" << fmt(py) << "\" width=\""
                    << fmt(dx * map.scale + 0.5) << "\" height=\"" << fmt(dy * map.scale + 0.5)
                    << "\" fill=\"" << heat_color((u - umin) / span) << "\"/>\n";
            }
        meta["u_min"] = umin;
        meta["u_max"] = umax;
        polygon_element(svg, result.domain, map, "none", "#000000", 1.5);
    }

    svg << "<metadata id=\"sdot\">" << meta.dump() << "</metadata>\n";
    svg << "</svg>\n";
    return svg.str();
}

} // namespace sdot::render
