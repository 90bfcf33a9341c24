#include "sdot/measure.hpp"

#include <algorithm>
#include <cmath>

#include "sdot/errors.hpp"

namespace sdot {

void CounterRng::normal_pair(double& z0, double& z1) {
    const double u1 = uniform01_open();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    z0 = r * std::cos(2.0 * M_PI * u2);
    z1 = r * std::sin(2.0 * M_PI * u2);
}

double CounterRng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double z0, z1;
    normal_pair(z0, z1);
    spare_ = z1;
    have_spare_ = true;
    return z0;
}

SourceDensity SourceDensity::uniform(ConvexPolygon domain, double total_mass) {
    domain.validate();
    if (!(total_mass > 0) || !std::isfinite(total_mass))
        throw InvalidInputError("total mass must be positive and finite");
    SourceDensity d;
    d.kind_ = Kind::Uniform;
    d.domain_ = std::move(domain);
    d.total_mass_ = total_mass;
    return d;
}

SourceDensity SourceDensity::piecewise(ConvexPolygon domain, std::vector<DensityTriangle> pieces) {
    domain.validate();
    if (pieces.empty()) throw InvalidInputError("piecewise density needs at least one triangle");
    const double scale = std::max(1.0, domain.diameter());
    double area_sum = 0.0;
    double mass = 0.0;
    for (DensityTriangle& t : pieces) {
        if (!t.a.finite() || !t.b.finite() || !t.c.finite())
            throw InvalidInputError("density triangle vertex is not finite");
        if (!(t.value >= 0) || !std::isfinite(t.value))
            throw InvalidInputError("density value must be nonnegative and finite");
        if (cross(t.b - t.a, t.c - t.a) < 0) std::swap(t.b, t.c); // normalize to CCW
        for (Vec2 v : {t.a, t.b, t.c})
            if (!domain.contains(v, kGeomEps * scale))
                throw InvalidInputError("density triangle outside the domain");
        area_sum += t.area();
        mass += t.mass();
    }
    if (std::abs(area_sum - domain.area()) > 1e-9 * domain.area())
        throw InvalidInputError("density triangulation does not cover the domain");
    if (!(mass > 0)) throw InvalidInputError("density total mass must be positive");

    SourceDensity d;
    d.kind_ = Kind::PiecewiseConstant;
    d.domain_ = std::move(domain);
    d.total_mass_ = mass;
    d.pieces_ = std::move(pieces);
    return d;
}

double SourceDensity::uniform_value() const {
    return total_mass_ / domain_.area();
}

double SourceDensity::value_at(Vec2 p) const {
    if (is_uniform()) {
        const double scale = std::max(1.0, domain_.diameter());
        return domain_.contains(p, kGeomEps * scale) ? uniform_value() : 0.0;
    }
    for (const DensityTriangle& t : pieces_) {
        const double s0 = cross(t.b - t.a, p - t.a);
        const double s1 = cross(t.c - t.b, p - t.b);
        const double s2 = cross(t.a - t.c, p - t.c);
        if (s0 >= 0 && s1 >= 0 && s2 >= 0) return t.value;
    }
    return 0.0;
}

double EmpiricalMeasure::total_mass() const {
    double s = 0.0;
    for (double m : masses) s += m;
    return s;
}

void EmpiricalMeasure::validate() const {
    if (points.size() != masses.size()) throw InvalidInputError("|points| != |masses|");
    if (points.empty()) throw InvalidInputError("empirical measure needs at least one atom");
    const std::size_t d = points[0].size();
    if (d == 0) throw InvalidInputError("atoms need at least one coordinate");
    for (const auto& p : points) {
        if (p.size() != d) throw InvalidInputError("atoms have mixed dimensions");
        for (double c : p)
            if (!std::isfinite(c)) throw InvalidInputError("atom coordinate is not finite");
    }
    for (double m : masses)
        if (!(m > 0) || !std::isfinite(m))
            throw InvalidInputError("atom mass must be positive and finite");
}

std::vector<Site> EmpiricalMeasure::to_sites() const {
    validate();
    if (dimension() != 2) throw InvalidInputError("sites require 2D atoms");
    std::vector<Site> sites(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        sites[i] = Site{{points[i][0], points[i][1]}, masses[i]};
    return sites;
}

EmpiricalMeasure EmpiricalMeasure::from_sites(const std::vector<Site>& sites) {
    EmpiricalMeasure m;
    m.points.reserve(sites.size());
    m.masses.reserve(sites.size());
    for (const Site& s : sites) {
        m.points.push_back({s.position.x, s.position.y});
        m.masses.push_back(s.mass);
    }
    return m;
}

void GaussianMixtureSpec::validate() const {
    if (components.empty()) throw InvalidInputError("mixture needs at least one component");
    const std::size_t d = components[0].center.size();
    double wsum = 0.0;
    for (const GaussianComponent& c : components) {
        if (c.center.size() != d) throw InvalidInputError("mixture centers have mixed dimensions");
        for (double v : c.center)
            if (!std::isfinite(v)) throw InvalidInputError("mixture center is not finite");
        if (!(c.sigma > 0) || !std::isfinite(c.sigma))
            throw InvalidInputError("mixture sigma must be positive");
        if (!(c.weight >= 0) || !std::isfinite(c.weight))
            throw InvalidInputError("mixture weight must be nonnegative");
        wsum += c.weight;
    }
    if (std::abs(wsum - 1.0) > 1e-12) throw InvalidInputError("mixture weights must sum to 1");
}

namespace {

struct TrianglePicker {
    std::vector<DensityTriangle> triangles;
    std::vector<double> cdf; // normalized cumulative masses

    explicit TrianglePicker(const SourceDensity& density) {
        if (density.is_uniform()) {
            const auto& v = density.domain().vertices;
            const double rho = density.uniform_value();
            for (std::size_t i = 1; i + 1 < v.size(); ++i)
                triangles.push_back({v[0], v[i], v[i + 1], rho});
        } else {
            triangles = density.pieces();
        }
        double total = 0.0;
        for (const auto& t : triangles) total += t.mass();
        double acc = 0.0;
        cdf.reserve(triangles.size());
        for (const auto& t : triangles) {
            acc += t.mass() / total;
            cdf.push_back(acc);
        }
        cdf.back() = 1.0;
    }

    Vec2 draw(CounterRng& rng) const {
        const double u = rng.uniform01();
        const std::size_t idx = static_cast<std::size_t>(
            std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        const DensityTriangle& t = triangles[std::min(idx, triangles.size() - 1)];
        double a = rng.uniform01();
        double b = rng.uniform01();
        if (a + b > 1.0) {
            a = 1.0 - a;
            b = 1.0 - b;
        }
        return t.a + (t.b - t.a) * a + (t.c - t.a) * b;
    }
};

} // namespace

std::vector<Vec2> sample_source(const SourceDensity& density, std::size_t n, RandomSeed seed) {
    if (n == 0) throw InvalidInputError("need at least one sample");
    const TrianglePicker picker(density);
    std::vector<Vec2> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        CounterRng rng(seed, i);
        out[i] = picker.draw(rng);
    }
    return out;
}

EmpiricalMeasure sample_gaussian_mixture(const GaussianMixtureSpec& spec, std::size_t n,
                                         RandomSeed seed) {
    spec.validate();
    if (n == 0) throw InvalidInputError("need at least one sample");
    std::vector<double> cdf;
    cdf.reserve(spec.components.size());
    double acc = 0.0;
    for (const auto& c : spec.components) {
        acc += c.weight;
        cdf.push_back(acc);
    }
    cdf.back() = 1.0;

    const std::size_t d = spec.components[0].center.size();
    EmpiricalMeasure m;
    m.points.resize(n);
    m.masses.assign(n, 1.0 / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        CounterRng rng(seed, i);
        const double u = rng.uniform01();
        const std::size_t idx = std::min(
            static_cast<std::size_t>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin()),
            spec.components.size() - 1);
        const GaussianComponent& c = spec.components[idx];
        std::vector<double> p(d);
        for (std::size_t a = 0; a < d; ++a) p[a] = c.center[a] + c.sigma * rng.normal();
        m.points[i] = std::move(p);
    }
    return m;
}

double measure_total(const SourceDensity& density) { return density.total_mass(); }

double measure_total(const EmpiricalMeasure& measure) { return measure.total_mass(); }

EmpiricalMeasure grid_discretize(const SourceDensity& density, int resolution) {
    if (resolution < 1) throw InvalidInputError("grid resolution must be positive");
    const ConvexPolygon& domain = density.domain();
    const auto [lo, hi] = domain.bounding_box();
    const double dx = (hi.x - lo.x) / resolution;
    const double dy = (hi.y - lo.y) / resolution;
    const double tol = kGeomEps * std::max(1.0, domain.diameter());

    EmpiricalMeasure out;
    for (int iy = 0; iy < resolution; ++iy) {
        for (int ix = 0; ix < resolution; ++ix) {
            ConvexPolygon cell = make_rectangle(lo.x + ix * dx, lo.y + iy * dy,
                                                lo.x + (ix + 1) * dx, lo.y + (iy + 1) * dy);
            bool inside = true;
            for (Vec2 v : cell.vertices) inside = inside && domain.contains(v, tol);
            if (!inside) {
                // clip against the domain edges
                std::optional<ConvexPolygon> clipped = cell;
                const auto& dv = domain.vertices;
                for (std::size_t e = 0; e < dv.size() && clipped; ++e) {
                    const Vec2 a = dv[e], b = dv[(e + 1) % dv.size()];
                    const Vec2 n{-(b - a).y, (b - a).x};
                    clipped = half_plane_clip(*clipped, n, dot(n, a));
                }
                if (!clipped) continue;
                cell = std::move(*clipped);
            }
            const double mass = polygon_moment(cell, Quadratic::one(), density);
            if (mass <= 0) continue;
            const double mx = polygon_moment(cell, Quadratic::linear(0, 1, 0), density);
            const double my = polygon_moment(cell, Quadratic::linear(0, 0, 1), density);
            out.points.push_back({mx / mass, my / mass});
            out.masses.push_back(mass);
        }
    }
    if (out.points.empty()) throw InvalidInputError("grid discretization produced no atoms");
    return out;
}

} // namespace sdot
