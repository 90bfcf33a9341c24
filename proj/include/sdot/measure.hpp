#pragma once

#include <cstddef>
#include <vector>

#include "sdot/geometry.hpp"
#include "sdot/rng.hpp"

namespace sdot {

struct DensityTriangle {
    Vec2 a, b, c;
    double value = 0.0; // constant density on the triangle

    double area() const { return 0.5 * std::abs(cross(b - a, c - a)); }
    double mass() const { return value * area(); }
};

/// Absolutely continuous source measure on a convex polygonal domain:
/// either uniform or piecewise constant on a triangulation of the domain.
class SourceDensity {
public:
    enum class Kind { Uniform, PiecewiseConstant };

    /// Uniform density with the given total mass over `domain`.
    static SourceDensity uniform(ConvexPolygon domain, double total_mass = 1.0);

    /// Piecewise-constant density. The triangles must tile `domain`:
    /// all inside, areas summing to the domain area (1e-9 relative).
    static SourceDensity piecewise(ConvexPolygon domain, std::vector<DensityTriangle> pieces);

    Kind kind() const { return kind_; }
    bool is_uniform() const { return kind_ == Kind::Uniform; }
    const ConvexPolygon& domain() const { return domain_; }
    double total_mass() const { return total_mass_; }
    /// Density value for the uniform kind.
    double uniform_value() const;
    const std::vector<DensityTriangle>& pieces() const { return pieces_; }

    /// Pointwise density (first matching triangle for the piecewise kind).
    double value_at(Vec2 p) const;

private:
    SourceDensity() = default;

    Kind kind_ = Kind::Uniform;
    ConvexPolygon domain_;
    double total_mass_ = 1.0;
    std::vector<DensityTriangle> pieces_; // piecewise kind only
};

/// Finite atomic measure in ambient dimension d (d arbitrary).
struct EmpiricalMeasure {
    std::vector<std::vector<double>> points;
    std::vector<double> masses;

    std::size_t size() const { return points.size(); }
    std::size_t dimension() const { return points.empty() ? 0 : points[0].size(); }
    double total_mass() const;

    /// Throws InvalidInputError on inconsistent sizes, non-finite data or
    /// non-positive masses.
    void validate() const;

    /// View as 2D sites (requires dimension 2).
    std::vector<Site> to_sites() const;

    static EmpiricalMeasure from_sites(const std::vector<Site>& sites);
};

struct GaussianComponent {
    std::vector<double> center;
    double sigma = 1.0;
    double weight = 1.0;
};

struct GaussianMixtureSpec {
    std::vector<GaussianComponent> components;

    void validate() const; // weights sum to 1, sigmas positive, equal dims
};

/// n i.i.d. samples from density / total_mass. Sample i is drawn from
/// substream i, so the value of sample i does not depend on n.
std::vector<Vec2> sample_source(const SourceDensity& density, std::size_t n, RandomSeed seed);

/// n atoms of mass 1/n: component picked by weight, then an isotropic
/// Gaussian draw around its center.
EmpiricalMeasure sample_gaussian_mixture(const GaussianMixtureSpec& spec, std::size_t n,
                                         RandomSeed seed);

double measure_total(const SourceDensity& density);
double measure_total(const EmpiricalMeasure& measure);

/// Grid discretization of the density: resolution^2 bounding-box cells
/// clipped to the domain, one atom per nonempty cell at its mass centroid.
EmpiricalMeasure grid_discretize(const SourceDensity& density, int resolution);

} // namespace sdot
