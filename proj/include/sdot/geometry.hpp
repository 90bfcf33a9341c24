#pragma once

#include <cmath>
#include <optional>
#include <vector>

namespace sdot {

class SourceDensity; // measure.hpp

/// Absolute geometric tolerance. All point/plane comparisons happen in
/// internally rescaled coordinates (domain scaled to unit diameter), where
/// this threshold is meaningful for double precision.
inline constexpr double kGeomEps = 1e-12;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator/(double s) const { return {x / s, y / s}; }
    bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm2(Vec2 a) { return dot(a, a); }
inline double norm(Vec2 a) { return std::sqrt(norm2(a)); }
inline double dist(Vec2 a, Vec2 b) { return norm(a - b); }

/// Closed convex polygon, vertices in counterclockwise order.
struct ConvexPolygon {
    std::vector<Vec2> vertices;

    ConvexPolygon() = default;
    explicit ConvexPolygon(std::vector<Vec2> v) : vertices(std::move(v)) {}

    double area() const;
    Vec2 centroid() const;
    /// Axis-aligned bounding box as (min, max) corners.
    std::pair<Vec2, Vec2> bounding_box() const;
    /// Diagonal length of the bounding box; used as the internal scaling unit.
    double diameter() const;
    /// Point membership with absolute tolerance `tol` on the signed edge distances.
    bool contains(Vec2 p, double tol) const;

    /// Throws InvalidInputError unless the polygon has >= 3 finite vertices,
    /// is convex up to tolerance, has no repeated vertices and positive area.
    void validate() const;
};

/// Axis-aligned rectangle helper.
ConvexPolygon make_rectangle(double xmin, double ymin, double xmax, double ymax);
/// Regular polygon inscribed in the circle (center, radius).
ConvexPolygon make_regular_polygon(Vec2 center, double radius, int segments);

/// Target atom: position y_i with mass nu_i > 0.
struct Site {
    Vec2 position;
    double mass = 0.0;
};

/// Heights h parameterizing the piecewise linear potential max_i <x,y_i> + h_i.
using HeightVector = std::vector<double>;

/// Shift to the canonical gauge sum(h) = 0.
void gauge_normalize(HeightVector& h);

/// Polynomial of total degree <= 2:
/// q(x, y) = c0 + cx*x + cy*y + cxx*x^2 + cxy*x*y + cyy*y^2.
struct Quadratic {
    double c0 = 0, cx = 0, cy = 0, cxx = 0, cxy = 0, cyy = 0;

    double operator()(Vec2 p) const {
        return c0 + cx * p.x + cy * p.y + cxx * p.x * p.x + cxy * p.x * p.y + cyy * p.y * p.y;
    }

    static Quadratic one() { return {1, 0, 0, 0, 0, 0}; }
    static Quadratic linear(double c0, double cx, double cy) { return {c0, cx, cy, 0, 0, 0}; }
    /// 0.5 * |x - y|^2 as a polynomial in x.
    static Quadratic half_sq_dist(Vec2 y) {
        return {0.5 * norm2(y), -y.x, -y.y, 0.5, 0, 0.5};
    }
    /// 0.5 * |x|^2.
    static Quadratic half_sq_norm() { return {0, 0, 0, 0.5, 0, 0.5}; }
};

struct PowerCell {
    int site_index = -1;
    std::optional<ConvexPolygon> polygon; // nullopt <=> empty cell
    double measure = 0.0;

    bool empty() const { return !polygon.has_value(); }
};

/// Dual (weighted Delaunay) edge between cells i and j. face_measure is the
/// density line integral over the shared boundary segment.
struct DualEdge {
    int i = 0;
    int j = 0;
    double face_measure = 0.0;
    double site_distance = 0.0;
};

struct PowerDiagram {
    std::vector<PowerCell> cells;
    std::vector<DualEdge> dual_edges;

    double total_measure() const;
    std::vector<double> cell_measures() const;
    bool all_nonempty() const;
};

/// Intersection of `poly` with the half-plane { x : <normal, x> >= offset }.
/// Returns nullopt when the intersection is empty (or degenerate).
std::optional<ConvexPolygon> half_plane_clip(const ConvexPolygon& poly, Vec2 normal,
                                             double offset);

/// Power diagram of (sites, h) restricted to `domain`, with per-cell measures
/// and dual edges populated from `density`. Cell i is the domain clipped by
/// <x, y_i - y_j> >= h_j - h_i for all j != i. Deterministic.
PowerDiagram build_power_diagram(const std::vector<Site>& sites, const HeightVector& h,
                                 const ConvexPolygon& domain, const SourceDensity& density);

/// Cell polygons only (no measures); nullopt entries are empty cells.
std::vector<std::optional<ConvexPolygon>> power_cell_polygons(const std::vector<Site>& sites,
                                                              const HeightVector& h,
                                                              const ConvexPolygon& domain);

/// Exact integral of `integrand` against the density over `poly`
/// (fan triangulation + degree-2 midpoint quadrature per piece).
double polygon_moment(const ConvexPolygon& poly, const Quadratic& integrand,
                      const SourceDensity& density);

/// Exact integral of `integrand` over `poly` against Lebesgue measure.
double polygon_integral(const ConvexPolygon& poly, const Quadratic& integrand);

/// Density line integral along segment [a, b].
double segment_density_integral(Vec2 a, Vec2 b, const SourceDensity& density);

/// Legendre transform of u_h evaluated at every site:
/// u*(y_i) = sup_{x in domain} (<x, y_i> - u_h(x)).
/// Equals -h_i exactly when cell i is nonempty, strictly less otherwise.
std::vector<double> legendre_dual_values(const std::vector<Site>& sites, const HeightVector& h,
                                         const ConvexPolygon& domain);

/// Consistency checks shared by diagram builders and the solver:
/// throws InvalidInputError on size mismatch, non-finite data or duplicate sites.
void validate_sites_and_heights(const std::vector<Site>& sites, const HeightVector& h);

} // namespace sdot
