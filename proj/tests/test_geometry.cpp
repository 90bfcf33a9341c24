#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "sdot/errors.hpp"
#include "sdot/geometry.hpp"
#include "sdot/measure.hpp"

using namespace sdot;

namespace {

ConvexPolygon unit_square() { return make_rectangle(0, 0, 1, 1); }
ConvexPolygon sym_square() { return make_rectangle(-1, -1, 1, 1); }

std::vector<Site> two_sites() {
    return {Site{{-1, 0}, 0.5}, Site{{1, 0}, 0.5}};
}

std::vector<Site> random_sites(std::size_t k, std::uint64_t seed, const ConvexPolygon& domain,
                               double total_mass = 1.0) {
    CounterRng rng({seed}, 0);
    const auto [lo, hi] = domain.bounding_box();
    std::vector<Site> sites(k);
    for (auto& s : sites) {
        s.position = {lo.x + (hi.x - lo.x) * rng.uniform01(),
                      lo.y + (hi.y - lo.y) * rng.uniform01()};
        s.mass = total_mass / static_cast<double>(k);
    }
    return sites;
}

// Length of the overlap between the boundaries of two cell polygons;
// independent recomputation used to cross-check dual edge extraction.
double shared_boundary_length(const ConvexPolygon& a, const ConvexPolygon& b, double tol) {
    double total = 0.0;
    const auto edges = [](const ConvexPolygon& p) {
        std::vector<std::pair<Vec2, Vec2>> e;
        for (std::size_t i = 0; i < p.vertices.size(); ++i)
            e.push_back({p.vertices[i], p.vertices[(i + 1) % p.vertices.size()]});
        return e;
    };
    for (const auto& [a0, a1] : edges(a)) {
        const Vec2 da = a1 - a0;
        const double la = norm(da);
        if (la < tol) continue;
        const Vec2 ua = da / la;
        for (const auto& [b0, b1] : edges(b)) {
            // collinearity within tolerance
            if (std::abs(cross(ua, b0 - a0)) > tol || std::abs(cross(ua, b1 - a0)) > tol)
                continue;
            const double t0 = dot(ua, b0 - a0);
            const double t1 = dot(ua, b1 - a0);
            const double lo = std::max(0.0, std::min(t0, t1));
            const double hi = std::min(la, std::max(t0, t1));
            if (hi > lo) total += hi - lo;
        }
    }
    return total;
}

} // namespace

TEST_CASE("half_plane_clip: containing half-plane leaves the square unchanged") {
    const auto out = half_plane_clip(unit_square(), {1, 0}, -1.0);
    REQUIRE(out.has_value());
    CHECK(out->vertices.size() == 4);
    CHECK(out->area() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("half_plane_clip: disjoint half-plane empties the square") {
    CHECK_FALSE(half_plane_clip(unit_square(), {1, 0}, 2.0).has_value());
}

TEST_CASE("half_plane_clip: analytic rectangle with Monte Carlo cross-check") {
    const auto out = half_plane_clip(sym_square(), {1, 0}, 0.5);
    REQUIRE(out.has_value());
    CHECK(out->area() == doctest::Approx(1.0).epsilon(1e-12));
    for (Vec2 v : out->vertices) {
        CHECK(v.x >= 0.5 - 1e-12);
        CHECK(v.x <= 1.0 + 1e-12);
    }
    // oracle: point counting in the clip region
    const double mc = oracles::mc_region_area(
        sym_square(), [](Vec2 p) { return p.x >= 0.5; }, 200000, 11);
    CHECK(std::abs(mc - out->area()) < 4.0 * std::sqrt(0.25 * 0.75 / 200000.0) * 4.0);
}

TEST_CASE("half_plane_clip: degenerate normal is rejected") {
    CHECK_THROWS_AS((void)half_plane_clip(unit_square(), {0, 0}, 0.0), InvalidInputError);
}

TEST_CASE("polygon validation catches bad inputs") {
    CHECK_THROWS_AS(ConvexPolygon({{0, 0}, {1, 0}}).validate(), InvalidInputError);
    CHECK_THROWS_AS(ConvexPolygon({{0, 0}, {1, 0}, {1, 1}, {0.9, 0.2}}).validate(),
                    InvalidInputError);
    // clockwise = negative area
    CHECK_THROWS_AS(ConvexPolygon({{0, 0}, {0, 1}, {1, 1}, {1, 0}}).validate(), InvalidInputError);
    CHECK_NOTHROW(unit_square().validate());
}

TEST_CASE("build_power_diagram: single site owns the whole domain") {
    const auto density = SourceDensity::uniform(sym_square(), 1.0);
    const auto diagram =
        build_power_diagram({Site{{0.3, -0.4}, 1.0}}, {2.5}, sym_square(), density);
    REQUIRE(diagram.cells.size() == 1);
    CHECK(diagram.cells[0].measure == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(diagram.dual_edges.empty());
}

TEST_CASE("build_power_diagram: symmetric two-site split") {
    const auto density = SourceDensity::uniform(sym_square(), 1.0);
    const auto diagram = build_power_diagram(two_sites(), {0, 0}, sym_square(), density);
    CHECK(diagram.cells[0].measure == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(diagram.cells[1].measure == doctest::Approx(0.5).epsilon(1e-12));
    REQUIRE(diagram.dual_edges.size() == 1);
}

TEST_CASE("build_power_diagram: shifted two-site instance, analytic + Monte Carlo") {
    const auto density = SourceDensity::uniform(sym_square(), 1.0);
    const auto diagram = build_power_diagram(two_sites(), {0, 0.5}, sym_square(), density);
    // bisector: <x, y1-y2> >= h2-h1  =>  -2x >= 0.5  =>  x <= -0.25
    CHECK(diagram.cells[0].measure == doctest::Approx(0.375).epsilon(1e-12));
    CHECK(diagram.cells[1].measure == doctest::Approx(0.625).epsilon(1e-12));
    REQUIRE(diagram.dual_edges.size() == 1);
    CHECK(diagram.dual_edges[0].face_measure == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(diagram.dual_edges[0].site_distance == doctest::Approx(2.0).epsilon(1e-12));

    const double mc = oracles::mc_region_area(
        sym_square(), [](Vec2 p) { return p.x <= -0.25; }, 1000000, 7);
    // mc estimates area (4 * measure under rho = 1/4)
    CHECK(std::abs(mc / 4.0 - diagram.cells[0].measure) <
          4.0 * std::sqrt(0.375 * 0.625 / 1000000.0));
}

TEST_CASE("build_power_diagram rejects duplicate sites and size mismatch") {
    const auto density = SourceDensity::uniform(sym_square(), 1.0);
    CHECK_THROWS_AS(build_power_diagram({Site{{0, 0}, 0.5}, Site{{0, 0}, 0.5}}, {0, 0},
                                        sym_square(), density),
                    InvalidInputError);
    CHECK_THROWS_AS(build_power_diagram(two_sites(), {0}, sym_square(), density),
                    InvalidInputError);
}

TEST_CASE("polygon_moment: normalized area, quadratic moment, odd symmetry") {
    const auto density = SourceDensity::uniform(sym_square(), 1.0); // rho = 1/4
    CHECK(polygon_moment(sym_square(), Quadratic::one(), density) ==
          doctest::Approx(1.0).epsilon(1e-13));
    CHECK(polygon_moment(sym_square(), Quadratic::half_sq_norm(), density) ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-13));
    CHECK(polygon_moment(sym_square(), Quadratic::linear(0, 1, 0), density) ==
          doctest::Approx(0.0).epsilon(1e-13));

    const double mc =
        oracles::mc_polygon_integral(sym_square(), [](Vec2 p) { return 0.5 * norm2(p); },
                                     400000, 3) /
        4.0;
    CHECK(std::abs(mc - 1.0 / 3.0) < 2e-3);
}

TEST_CASE("polygon_moment handles piecewise-constant densities") {
    // two triangles with different densities over the unit square
    std::vector<DensityTriangle> pieces = {{{0, 0}, {1, 0}, {1, 1}, 0.5},
                                           {{0, 0}, {1, 1}, {0, 1}, 1.5}};
    const auto density = SourceDensity::piecewise(unit_square(), pieces);
    CHECK(density.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(polygon_moment(unit_square(), Quadratic::one(), density) ==
          doctest::Approx(1.0).epsilon(1e-12));
    // left half [0,0.5]x[0,1] splits as area 1/8 under rho=0.5, 3/8 under 1.5
    const auto left = make_rectangle(0, 0, 0.5, 1);
    CHECK(polygon_moment(left, Quadratic::one(), density) ==
          doctest::Approx(0.5 * 0.125 + 1.5 * 0.375).epsilon(1e-12));
}

TEST_CASE("legendre_dual_values: single plane and two-site instance") {
    CHECK(legendre_dual_values({Site{{0, 0}, 1.0}}, {0.7}, sym_square())[0] ==
          doctest::Approx(-0.7).epsilon(1e-15));

    const auto dual = legendre_dual_values(two_sites(), {0, 0.5}, sym_square());
    CHECK(dual[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(dual[1] == doctest::Approx(-0.5).epsilon(1e-15));

    // grid oracle
    const std::vector<Site> sites = two_sites();
    const HeightVector h = {0, 0.5};
    for (std::size_t i = 0; i < sites.size(); ++i) {
        const double oracle = oracles::grid_max(
            sym_square(),
            [&](Vec2 p) {
                double u = -std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j < sites.size(); ++j)
                    u = std::max(u, dot(p, sites[j].position) + h[j]);
                return dot(p, sites[i].position) - u;
            },
            600);
        CHECK(dual[i] == doctest::Approx(oracle).epsilon(1e-9));
    }
}

TEST_CASE("legendre_dual_values: dominated plane sits strictly below -h_i") {
    // site 0 far below the others in height: its plane never wins on the domain
    std::vector<Site> sites = {Site{{0, 0}, 1.0 / 3}, Site{{-1, 0}, 1.0 / 3},
                               Site{{1, 0}, 1.0 / 3}};
    const HeightVector h = {-10.0, 0.0, 0.0};
    const auto cells = power_cell_polygons(sites, h, sym_square());
    CHECK_FALSE(cells[0].has_value());
    const auto dual = legendre_dual_values(sites, h, sym_square());
    CHECK(dual[0] < -h[0] - 1e-6);
    // grid oracle agrees (the sup sits at a cell vertex)
    const double oracle = oracles::grid_max(
        sym_square(),
        [&](Vec2 p) {
            double u = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < sites.size(); ++j)
                u = std::max(u, dot(p, sites[j].position) + h[j]);
            return dot(p, sites[0].position) - u;
        },
        800);
    CHECK(dual[0] == doctest::Approx(oracle).epsilon(1e-3));
}

TEST_CASE("partition invariant: cell measures sum to the domain mass") {
    const auto domain = sym_square();
    const auto density = SourceDensity::uniform(domain, 1.0);
    CounterRng rng({42}, 0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t k = 2 + static_cast<std::size_t>(rng.uniform01() * 62);
        auto sites = random_sites(k, 1000 + static_cast<std::uint64_t>(trial), domain);
        HeightVector h(k);
        for (std::size_t i = 0; i < k; ++i)
            h[i] = -0.5 * norm2(sites[i].position) + 0.3 * (rng.uniform01() - 0.5);
        const auto diagram = build_power_diagram(sites, h, domain, density);
        CHECK(diagram.total_measure() == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("monotonicity: raising h_i never shrinks cell i") {
    const auto domain = sym_square();
    const auto density = SourceDensity::uniform(domain, 1.0);
    auto sites = random_sites(12, 77, domain);
    HeightVector h(12);
    for (std::size_t i = 0; i < 12; ++i) h[i] = -0.5 * norm2(sites[i].position);
    const auto base = build_power_diagram(sites, h, domain, density);
    CounterRng rng({5}, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t i = static_cast<std::size_t>(rng.uniform01() * 12);
        const double delta = 0.05 + rng.uniform01();
        HeightVector h2 = h;
        h2[i] += delta;
        const auto bumped = build_power_diagram(sites, h2, domain, density);
        CHECK(bumped.cells[i].measure >= base.cells[i].measure - 1e-12);
    }
}

TEST_CASE("dual consistency: edges match shared boundary segments and densities") {
    const auto domain = sym_square();
    const auto density = SourceDensity::uniform(domain, 1.0);
    const double rho = density.uniform_value();
    auto sites = random_sites(16, 123, domain);
    HeightVector h(16);
    for (std::size_t i = 0; i < 16; ++i) h[i] = -0.5 * norm2(sites[i].position);
    const auto diagram = build_power_diagram(sites, h, domain, density);
    REQUIRE(diagram.all_nonempty());

    // every recorded edge corresponds to a real shared segment with matching
    // density integral
    for (const auto& e : diagram.dual_edges) {
        const double len = shared_boundary_length(*diagram.cells[e.i].polygon,
                                                  *diagram.cells[e.j].polygon, 1e-9);
        CHECK(len > kGeomEps);
        CHECK(e.face_measure == doctest::Approx(rho * len).epsilon(1e-8));
    }
    // and no shared segment was missed
    for (std::size_t i = 0; i < 16; ++i)
        for (std::size_t j = i + 1; j < 16; ++j) {
            const double len = shared_boundary_length(*diagram.cells[i].polygon,
                                                      *diagram.cells[j].polygon, 1e-9);
            const bool recorded =
                std::any_of(diagram.dual_edges.begin(), diagram.dual_edges.end(),
                            [&](const DualEdge& e) {
                                return e.i == static_cast<int>(i) && e.j == static_cast<int>(j);
                            });
            if (len > 1e-7) CHECK(recorded);
            if (!recorded) CHECK(len < 1e-7);
        }
}

TEST_CASE("Voronoi specialization: h_i = -|y_i|^2/2 reproduces nearest-site cells") {
    const auto domain = sym_square();
    auto sites = random_sites(10, 2024, domain);
    HeightVector h(10);
    for (std::size_t i = 0; i < 10; ++i) h[i] = -0.5 * norm2(sites[i].position);

    for (int iy = 0; iy <= 40; ++iy)
        for (int ix = 0; ix <= 40; ++ix) {
            const Vec2 p{-1.0 + 2.0 * ix / 40.0, -1.0 + 2.0 * iy / 40.0};
            std::size_t plane_best = 0, vor_best = 0;
            double bv = -std::numeric_limits<double>::infinity();
            double bd = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < 10; ++i) {
                const double v = dot(p, sites[i].position) + h[i];
                if (v > bv) {
                    bv = v;
                    plane_best = i;
                }
                const double d = norm2(p - sites[i].position);
                if (d < bd) {
                    bd = d;
                    vor_best = i;
                }
            }
            CHECK(plane_best == vor_best);
        }
}

TEST_CASE("clipping order independence: permuted sites give identical cells") {
    const auto domain = sym_square();
    const auto density = SourceDensity::uniform(domain, 1.0);
    auto sites = random_sites(9, 321, domain);
    HeightVector h(9);
    for (std::size_t i = 0; i < 9; ++i) h[i] = -0.5 * norm2(sites[i].position);
    const auto base = build_power_diagram(sites, h, domain, density);

    // reversed order
    std::vector<Site> perm_sites(sites.rbegin(), sites.rend());
    HeightVector perm_h(h.rbegin(), h.rend());
    const auto perm = build_power_diagram(perm_sites, perm_h, domain, density);

    for (std::size_t i = 0; i < 9; ++i) {
        const auto& a = *base.cells[i].polygon;
        const auto& b = *perm.cells[8 - i].polygon;
        REQUIRE(a.vertices.size() == b.vertices.size());
        CHECK(base.cells[i].measure == doctest::Approx(perm.cells[8 - i].measure).epsilon(1e-12));
        // match up to rotation of the vertex cycle
        const std::size_t nv = a.vertices.size();
        std::size_t shift = nv;
        for (std::size_t s = 0; s < nv; ++s)
            if (dist(a.vertices[0], b.vertices[s]) < 1e-12) {
                shift = s;
                break;
            }
        REQUIRE(shift < nv);
        for (std::size_t t = 0; t < nv; ++t)
            CHECK(dist(a.vertices[t], b.vertices[(shift + t) % nv]) < 1e-12);
    }
}

TEST_CASE("dual graph: connected when all cells are nonempty, size within planar bound") {
    const auto domain = sym_square();
    const auto density = SourceDensity::uniform(domain, 1.0);
    auto sites = random_sites(24, 555, domain);
    HeightVector h(24);
    for (std::size_t i = 0; i < 24; ++i) h[i] = -0.5 * norm2(sites[i].position);
    const auto diagram = build_power_diagram(sites, h, domain, density);
    REQUIRE(diagram.all_nonempty());
    CHECK(diagram.dual_edges.size() <= 3 * 24 - 6);

    std::vector<std::vector<int>> adj(24);
    for (const auto& e : diagram.dual_edges) {
        adj[static_cast<std::size_t>(e.i)].push_back(e.j);
        adj[static_cast<std::size_t>(e.j)].push_back(e.i);
    }
    std::vector<bool> seen(24, false);
    std::vector<int> stack{0};
    seen[0] = true;
    std::size_t count = 0;
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        ++count;
        for (int v : adj[static_cast<std::size_t>(u)])
            if (!seen[static_cast<std::size_t>(v)]) {
                seen[static_cast<std::size_t>(v)] = true;
                stack.push_back(v);
            }
    }
    CHECK(count == 24);
}

TEST_CASE("empty cells stay represented and aligned with site indices") {
    const auto domain = sym_square();
    const auto density = SourceDensity::uniform(domain, 1.0);
    std::vector<Site> sites = {Site{{0, 0}, 1.0 / 3}, Site{{-1, 0}, 1.0 / 3},
                               Site{{1, 0}, 1.0 / 3}};
    const auto diagram = build_power_diagram(sites, {-10.0, 0.0, 0.0}, domain, density);
    REQUIRE(diagram.cells.size() == 3);
    CHECK(diagram.cells[0].empty());
    CHECK(diagram.cells[0].measure == 0.0);
    CHECK(diagram.cells[0].site_index == 0);
    CHECK(diagram.cells[1].measure + diagram.cells[2].measure == doctest::Approx(1.0));
}
