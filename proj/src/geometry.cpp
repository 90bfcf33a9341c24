#include "sdot/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sdot/errors.hpp"
#include "sdot/measure.hpp"

namespace sdot {

namespace {

// Polygon with per-edge provenance: label[e] tags the edge from vertex e to
// vertex e+1. Labels >= 0 name the clip plane (neighbor site index) that
// produced the edge; kDomainEdge marks a piece of the original boundary.
constexpr int kDomainEdge = -1;

struct LabeledPolygon {
    std::vector<Vec2> vertices;
    std::vector<int> labels;
};

// reusable buffers so the clip loop runs allocation-free
struct ClipScratch {
    std::vector<Vec2> vertices;
    std::vector<int> labels;
    std::vector<double> sd;
    std::vector<int> order;
};

// One Sutherland-Hodgman pass against { x : <n, x> >= off } with |n| = 1.
// `eps` is the absolute tolerance on signed distances. Returns false when the
// result degenerates to nothing.
bool clip_labeled(LabeledPolygon& poly, Vec2 n, double off, int label, double eps,
                  ClipScratch& scratch) {
    const std::size_t m = poly.vertices.size();
    auto& out_v = scratch.vertices;
    auto& out_l = scratch.labels;
    auto& sd = scratch.sd;
    out_v.clear();
    out_l.clear();
    sd.resize(m);
    for (std::size_t i = 0; i < m; ++i) sd[i] = dot(n, poly.vertices[i]) - off;

    // emit with on-the-fly dedup of near-identical consecutive vertices; the
    // surviving vertex inherits the outgoing edge of the dropped one
    const auto emit = [&](Vec2 p, int lab) {
        if (!out_v.empty() && dist(out_v.back(), p) <= eps) {
            out_l.back() = lab;
            return;
        }
        out_v.push_back(p);
        out_l.push_back(lab);
    };

    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t k = (i + 1 == m) ? 0 : i + 1;
        const bool in_a = sd[i] >= -eps;
        const bool in_b = sd[k] >= -eps;
        if (in_a) {
            emit(poly.vertices[i], poly.labels[i]);
            if (!in_b) {
                const double t = sd[i] / (sd[i] - sd[k]);
                emit(poly.vertices[i] + (poly.vertices[k] - poly.vertices[i]) * t,
                     label); // boundary now runs along the clip line
            }
        } else if (in_b) {
            const double t = sd[i] / (sd[i] - sd[k]);
            emit(poly.vertices[i] + (poly.vertices[k] - poly.vertices[i]) * t,
                 poly.labels[i]); // re-entry: remainder of the old edge
        }
    }

    while (out_v.size() >= 2 && dist(out_v.front(), out_v.back()) <= eps) {
        // the closing sliver edge disappears with its vertex
        out_v.pop_back();
        out_l.pop_back();
    }

    std::swap(poly.vertices, out_v);
    std::swap(poly.labels, out_l);
    if (poly.vertices.size() < 3) return false;

    double area2 = 0.0;
    for (std::size_t i = 0; i < poly.vertices.size(); ++i) {
        const std::size_t k = (i + 1 == poly.vertices.size()) ? 0 : i + 1;
        area2 += cross(poly.vertices[i], poly.vertices[k]);
    }
    return area2 > 2.0 * eps * eps;
}

// Internal frame: translate by the bbox center and scale by the bbox diagonal
// so the domain has unit diameter. Cells are clipped in this frame and mapped
// back afterwards.
struct Frame {
    Vec2 center;
    double scale = 1.0;

    Vec2 to_local(Vec2 p) const { return (p - center) / scale; }
    Vec2 to_world(Vec2 p) const { return center + p * scale; }
};

Frame domain_frame(const ConvexPolygon& domain) {
    const auto [lo, hi] = domain.bounding_box();
    Frame f;
    f.center = (lo + hi) * 0.5;
    f.scale = std::max(dist(lo, hi), std::numeric_limits<double>::min());
    return f;
}

LabeledPolygon to_local_polygon(const ConvexPolygon& domain, const Frame& f) {
    LabeledPolygon p;
    p.vertices.reserve(domain.vertices.size());
    for (Vec2 v : domain.vertices) p.vertices.push_back(f.to_local(v));
    p.labels.assign(p.vertices.size(), kDomainEdge);
    return p;
}

// Clip all planes of cell i in the local frame. Returns false when empty.
// Neighbors are visited nearest first and a bounding-box pre-test skips
// planes that cannot cut the current polygon, so most pairs cost O(1).
bool clip_cell(int i, const std::vector<Site>& sites, const std::vector<double>& shifted,
               const Frame& frame, const LabeledPolygon& local_domain, LabeledPolygon& out,
               ClipScratch& scratch) {
    out = local_domain;
    const Vec2 yi = sites[i].position;
    const int k = static_cast<int>(sites.size());

    auto& order = scratch.order;
    order.clear();
    order.reserve(static_cast<std::size_t>(k) - 1);
    for (int j = 0; j < k; ++j)
        if (j != i) order.push_back(j);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double da = norm2(yi - sites[static_cast<std::size_t>(a)].position);
        const double db = norm2(yi - sites[static_cast<std::size_t>(b)].position);
        return da < db || (da == db && a < b);
    });

    Vec2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    Vec2 hi = lo * -1.0;
    const auto refresh_bbox = [&] {
        lo = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
        hi = lo * -1.0;
        for (Vec2 v : out.vertices) {
            lo.x = std::min(lo.x, v.x);
            lo.y = std::min(lo.y, v.y);
            hi.x = std::max(hi.x, v.x);
            hi.y = std::max(hi.y, v.y);
        }
    };
    refresh_bbox();

    for (int j : order) {
        Vec2 n = yi - sites[static_cast<std::size_t>(j)].position;
        const double len = norm(n);
        // distinctness was validated; normalize so offsets are distances
        n = n / len;
        const double off =
            (shifted[static_cast<std::size_t>(j)] - shifted[static_cast<std::size_t>(i)]) /
            (frame.scale * len);
        const double bbox_min = n.x * (n.x >= 0 ? lo.x : hi.x) + n.y * (n.y >= 0 ? lo.y : hi.y);
        if (bbox_min >= off) continue; // polygon already inside this half-plane
        if (!clip_labeled(out, n, off, j, kGeomEps, scratch)) return false;
        refresh_bbox();
    }
    return true;
}

// Heights in the translated frame: cells of (sites, h) around x = c + s*x'
// coincide with cells of (sites, t) around x' where t_i = h_i + <c, y_i>.
std::vector<double> shifted_heights(const std::vector<Site>& sites, const HeightVector& h,
                                    const Frame& frame) {
    std::vector<double> t(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) t[i] = h[i] + dot(frame.center, sites[i].position);
    return t;
}

double triangle_integral(Vec2 a, Vec2 b, Vec2 c, const Quadratic& q) {
    // midpoint rule, exact for polynomials of degree <= 2
    const double area = 0.5 * cross(b - a, c - a);
    const Vec2 mab = (a + b) * 0.5, mbc = (b + c) * 0.5, mca = (c + a) * 0.5;
    return area * (q(mab) + q(mbc) + q(mca)) / 3.0;
}

// Intersection of poly with one triangle (three half-plane clips).
std::optional<ConvexPolygon> clip_to_triangle(const ConvexPolygon& poly, const DensityTriangle& t,
                                              double eps) {
    LabeledPolygon p;
    p.vertices = poly.vertices;
    p.labels.assign(p.vertices.size(), kDomainEdge);
    ClipScratch scratch;
    const Vec2 vs[3] = {t.a, t.b, t.c};
    for (int e = 0; e < 3; ++e) {
        const Vec2 a = vs[e], b = vs[(e + 1) % 3];
        Vec2 n{-(b - a).y, (b - a).x}; // inward normal for CCW triangle
        const double len = norm(n);
        if (len <= eps) return std::nullopt;
        n = n / len;
        if (!clip_labeled(p, n, dot(n, a), kDomainEdge, eps, scratch)) return std::nullopt;
    }
    return ConvexPolygon(p.vertices);
}

} // namespace

double ConvexPolygon::area() const {
    double a2 = 0.0;
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        const std::size_t k = (i + 1 == vertices.size()) ? 0 : i + 1;
        a2 += cross(vertices[i], vertices[k]);
    }
    return 0.5 * a2;
}

Vec2 ConvexPolygon::centroid() const {
    double a2 = 0.0;
    Vec2 c{0, 0};
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        const std::size_t k = (i + 1 == vertices.size()) ? 0 : i + 1;
        const double w = cross(vertices[i], vertices[k]);
        a2 += w;
        c = c + (vertices[i] + vertices[k]) * w;
    }
    return c / (3.0 * a2);
}

std::pair<Vec2, Vec2> ConvexPolygon::bounding_box() const {
    Vec2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    Vec2 hi{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (Vec2 v : vertices) {
        lo.x = std::min(lo.x, v.x);
        lo.y = std::min(lo.y, v.y);
        hi.x = std::max(hi.x, v.x);
        hi.y = std::max(hi.y, v.y);
    }
    return {lo, hi};
}

double ConvexPolygon::diameter() const {
    const auto [lo, hi] = bounding_box();
    return dist(lo, hi);
}

bool ConvexPolygon::contains(Vec2 p, double tol) const {
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        const std::size_t k = (i + 1 == vertices.size()) ? 0 : i + 1;
        const Vec2 e = vertices[k] - vertices[i];
        const double len = norm(e);
        if (len == 0) continue;
        if (cross(e, p - vertices[i]) / len < -tol) return false;
    }
    return true;
}

void ConvexPolygon::validate() const {
    if (vertices.size() < 3) throw InvalidInputError("polygon needs at least 3 vertices");
    for (Vec2 v : vertices)
        if (!v.finite()) throw InvalidInputError("polygon vertex is not finite");
    const double scale = std::max(1.0, diameter());
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        const std::size_t k = (i + 1 == vertices.size()) ? 0 : i + 1;
        if (dist(vertices[i], vertices[k]) <= kGeomEps * scale)
            throw InvalidInputError("polygon has repeated vertices");
    }
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        const std::size_t j = (i + 1 == vertices.size()) ? 0 : i + 1;
        const std::size_t k = (j + 1 == vertices.size()) ? 0 : j + 1;
        const double c = cross(vertices[j] - vertices[i], vertices[k] - vertices[j]);
        if (c < -kGeomEps * scale * scale)
            throw InvalidInputError("polygon is not convex (or not counterclockwise)");
    }
    if (area() <= 0) throw InvalidInputError("polygon area is not positive");
}

ConvexPolygon make_rectangle(double xmin, double ymin, double xmax, double ymax) {
    return ConvexPolygon({{xmin, ymin}, {xmax, ymin}, {xmax, ymax}, {xmin, ymax}});
}

ConvexPolygon make_regular_polygon(Vec2 center, double radius, int segments) {
    if (segments < 3) throw InvalidInputError("regular polygon needs at least 3 segments");
    if (!(radius > 0)) throw InvalidInputError("regular polygon needs positive radius");
    std::vector<Vec2> v;
    v.reserve(static_cast<std::size_t>(segments));
    for (int i = 0; i < segments; ++i) {
        const double a = 2.0 * M_PI * static_cast<double>(i) / segments;
        v.push_back({center.x + radius * std::cos(a), center.y + radius * std::sin(a)});
    }
    return ConvexPolygon(std::move(v));
}

void gauge_normalize(HeightVector& h) {
    if (h.empty()) return;
    double mean = 0.0;
    for (double v : h) mean += v;
    mean /= static_cast<double>(h.size());
    for (double& v : h) v -= mean;
}

double PowerDiagram::total_measure() const {
    double s = 0.0;
    for (const auto& c : cells) s += c.measure;
    return s;
}

std::vector<double> PowerDiagram::cell_measures() const {
    std::vector<double> w(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) w[i] = cells[i].measure;
    return w;
}

bool PowerDiagram::all_nonempty() const {
    return std::all_of(cells.begin(), cells.end(), [](const PowerCell& c) { return !c.empty(); });
}

std::optional<ConvexPolygon> half_plane_clip(const ConvexPolygon& poly, Vec2 normal,
                                             double offset) {
    poly.validate();
    const double len = norm(normal);
    const double scale = std::max(1.0, poly.diameter());
    if (len < kGeomEps) throw InvalidInputError("degenerate clip normal");
    LabeledPolygon p;
    p.vertices = poly.vertices;
    p.labels.assign(p.vertices.size(), kDomainEdge);
    ClipScratch scratch;
    if (!clip_labeled(p, normal / len, offset / len, kDomainEdge, kGeomEps * scale, scratch))
        return std::nullopt;
    return ConvexPolygon(std::move(p.vertices));
}

void validate_sites_and_heights(const std::vector<Site>& sites, const HeightVector& h) {
    if (sites.empty()) throw InvalidInputError("need at least one site");
    if (sites.size() != h.size()) throw InvalidInputError("|sites| != |heights|");
    for (const Site& s : sites) {
        if (!s.position.finite()) throw InvalidInputError("site position is not finite");
        if (!(s.mass > 0) || !std::isfinite(s.mass))
            throw InvalidInputError("site mass must be positive and finite");
    }
    for (double v : h)
        if (!std::isfinite(v)) throw InvalidInputError("height is not finite");
    for (std::size_t i = 0; i < sites.size(); ++i)
        for (std::size_t j = i + 1; j < sites.size(); ++j)
            if (dist(sites[i].position, sites[j].position) <= kGeomEps)
                throw InvalidInputError("duplicate sites");
}

std::vector<std::optional<ConvexPolygon>> power_cell_polygons(const std::vector<Site>& sites,
                                                              const HeightVector& h,
                                                              const ConvexPolygon& domain) {
    validate_sites_and_heights(sites, h);
    domain.validate();
    const Frame frame = domain_frame(domain);
    const LabeledPolygon local_domain = to_local_polygon(domain, frame);
    const std::vector<double> shifted = shifted_heights(sites, h, frame);

    std::vector<std::optional<ConvexPolygon>> cells(sites.size());
    LabeledPolygon cell;
    ClipScratch scratch;
    for (int i = 0; i < static_cast<int>(sites.size()); ++i) {
        if (!clip_cell(i, sites, shifted, frame, local_domain, cell, scratch)) continue;
        ConvexPolygon poly;
        poly.vertices.reserve(cell.vertices.size());
        for (Vec2 v : cell.vertices) poly.vertices.push_back(frame.to_world(v));
        cells[i] = std::move(poly);
    }
    return cells;
}

PowerDiagram build_power_diagram(const std::vector<Site>& sites, const HeightVector& h,
                                 const ConvexPolygon& domain, const SourceDensity& density) {
    validate_sites_and_heights(sites, h);
    domain.validate();
    {
        const ConvexPolygon& dd = density.domain();
        if (std::abs(dd.area() - domain.area()) > 1e-9 * std::abs(domain.area()) ||
            dist(dd.centroid(), domain.centroid()) > 1e-9 * std::max(1.0, domain.diameter()))
            throw InvalidInputError("density domain does not match diagram domain");
    }

    const Frame frame = domain_frame(domain);
    const LabeledPolygon local_domain = to_local_polygon(domain, frame);
    const std::vector<double> shifted = shifted_heights(sites, h, frame);
    const int k = static_cast<int>(sites.size());

    PowerDiagram diagram;
    diagram.cells.resize(static_cast<std::size_t>(k));

    // shared boundary segments found while building cell i, keyed by neighbor
    struct FacePiece {
        Vec2 a, b;
    };
    std::vector<std::vector<std::pair<int, FacePiece>>> faces(static_cast<std::size_t>(k));

    LabeledPolygon cell;
    ClipScratch scratch;
    for (int i = 0; i < k; ++i) {
        PowerCell& out = diagram.cells[static_cast<std::size_t>(i)];
        out.site_index = i;
        if (!clip_cell(i, sites, shifted, frame, local_domain, cell, scratch)) continue;

        ConvexPolygon poly;
        poly.vertices.reserve(cell.vertices.size());
        for (Vec2 v : cell.vertices) poly.vertices.push_back(frame.to_world(v));

        for (std::size_t e = 0; e < cell.vertices.size(); ++e) {
            const int j = cell.labels[e];
            if (j < 0 || j < i) continue; // dual edges recorded once, from the lower index
            const std::size_t f = (e + 1 == cell.vertices.size()) ? 0 : e + 1;
            faces[static_cast<std::size_t>(i)].push_back(
                {j, FacePiece{poly.vertices[e], poly.vertices[f]}});
        }
        out.measure = polygon_moment(poly, Quadratic::one(), density);
        out.polygon = std::move(poly);
    }

    for (int i = 0; i < k; ++i) {
        // aggregate pieces per neighbor (collinear splits sum up)
        std::vector<double> length(static_cast<std::size_t>(k), 0.0);
        std::vector<double> integral(static_cast<std::size_t>(k), 0.0);
        for (const auto& [j, piece] : faces[static_cast<std::size_t>(i)]) {
            length[static_cast<std::size_t>(j)] += dist(piece.a, piece.b);
            integral[static_cast<std::size_t>(j)] += segment_density_integral(piece.a, piece.b, density);
        }
        for (int j = i + 1; j < k; ++j) {
            if (length[static_cast<std::size_t>(j)] <= kGeomEps * frame.scale) continue;
            DualEdge edge;
            edge.i = i;
            edge.j = j;
            edge.face_measure = integral[static_cast<std::size_t>(j)];
            edge.site_distance = dist(sites[static_cast<std::size_t>(i)].position,
                                      sites[static_cast<std::size_t>(j)].position);
            if (edge.face_measure <= 0) continue; // zero-density boundary carries no coupling
            diagram.dual_edges.push_back(edge);
        }
    }
    return diagram;
}

double polygon_integral(const ConvexPolygon& poly, const Quadratic& q) {
    double s = 0.0;
    for (std::size_t i = 1; i + 1 < poly.vertices.size(); ++i)
        s += triangle_integral(poly.vertices[0], poly.vertices[i], poly.vertices[i + 1], q);
    return s;
}

double polygon_moment(const ConvexPolygon& poly, const Quadratic& integrand,
                      const SourceDensity& density) {
    if (poly.vertices.size() < 3) return 0.0;
    if (density.is_uniform()) return density.uniform_value() * polygon_integral(poly, integrand);

    const double eps = kGeomEps * std::max(1.0, density.domain().diameter());
    double s = 0.0;
    for (const DensityTriangle& t : density.pieces()) {
        if (t.value == 0.0) continue;
        const auto piece = clip_to_triangle(poly, t, eps);
        if (piece) s += t.value * polygon_integral(*piece, integrand);
    }
    return s;
}

double segment_density_integral(Vec2 a, Vec2 b, const SourceDensity& density) {
    const double len = dist(a, b);
    if (len == 0) return 0.0;
    if (density.is_uniform()) return density.uniform_value() * len;

    // clip the parameter interval [0,1] against each triangle
    double covered = 0.0;
    double integral = 0.0;
    for (const DensityTriangle& t : density.pieces()) {
        double t0 = 0.0, t1 = 1.0;
        const Vec2 vs[3] = {t.a, t.b, t.c};
        bool empty = false;
        for (int e = 0; e < 3 && !empty; ++e) {
            const Vec2 p = vs[e], q = vs[(e + 1) % 3];
            Vec2 n{-(q - p).y, (q - p).x};
            const double nl = norm(n);
            if (nl == 0) {
                empty = true;
                break;
            }
            n = n / nl;
            const double sa = dot(n, a - p);
            const double sb = dot(n, b - p);
            const double d = sb - sa;
            if (std::abs(d) < 1e-300) {
                if (sa < 0) empty = true;
                continue;
            }
            const double tc = -sa / d;
            if (d > 0)
                t0 = std::max(t0, tc);
            else
                t1 = std::min(t1, tc);
            if (t0 >= t1) empty = true;
        }
        if (!empty && t1 > t0) {
            covered += t1 - t0;
            integral += t.value * (t1 - t0) * len;
        }
    }
    // a segment on a shared triangle edge is covered from both sides; average
    if (covered > 1.0 + 1e-9) integral /= covered;
    return integral;
}

std::vector<double> legendre_dual_values(const std::vector<Site>& sites, const HeightVector& h,
                                         const ConvexPolygon& domain) {
    const auto cells = power_cell_polygons(sites, h, domain);
    const std::size_t k = sites.size();

    // g_i(x) = <x, y_i> - u_h(x) is affine on every cell, so its supremum over
    // the domain is attained at a cell vertex (or anywhere on cell i, where it
    // equals -h_i exactly).
    std::vector<double> dual(k, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < k; ++i) {
        if (cells[i]) {
            dual[i] = -h[i];
            continue;
        }
        const Vec2 yi = sites[i].position;
        for (std::size_t j = 0; j < k; ++j) {
            if (!cells[j]) continue;
            for (Vec2 v : cells[j]->vertices) {
                const double g = dot(v, yi - sites[j].position) - h[j];
                dual[i] = std::max(dual[i], g);
            }
        }
    }
    return dual;
}

} // namespace sdot
