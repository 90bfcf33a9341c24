#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sdot/errors.hpp"
#include "sdot/genmodel.hpp"

using namespace sdot;

namespace {

LatentEmbedding random_embedding(std::size_t n, std::uint64_t seed) {
    CounterRng rng({seed}, 0);
    LatentEmbedding emb;
    emb.latent_points.resize(n);
    for (auto& p : emb.latent_points)
        p = {-0.8 + 1.6 * rng.uniform01(), -0.8 + 1.6 * rng.uniform01()};
    return emb;
}

SourceDensity unit_zeta() {
    return SourceDensity::uniform(make_rectangle(-1, -1, 1, 1), 1.0);
}

} // namespace

TEST_CASE("fit: single latent point owns the whole domain; generation is constant") {
    LatentEmbedding emb;
    emb.latent_points = {{0.25, -0.5}};
    const auto model = fit(emb, unit_zeta());
    CHECK(model.transport.solved);
    CHECK(model.transport.diagram.cells[0].measure == doctest::Approx(1.0).epsilon(1e-12));

    const auto out = generate(model, 50, {3});
    for (const auto& p : out) {
        CHECK(p[0] == 0.25);
        CHECK(p[1] == -0.5);
    }
    const auto report = pushforward_check(model, 1000, {4});
    CHECK(report.max_deviation == 0.0);
    CHECK(report.within_bounds);
}

TEST_CASE("fit: equalizes cell masses; pushforward frequencies hit 1/n") {
    const auto emb = random_embedding(16, 99);
    const auto model = fit(emb, unit_zeta());
    REQUIRE(model.transport.solved);
    for (const auto& c : model.transport.diagram.cells)
        CHECK(c.measure == doctest::Approx(1.0 / 16).epsilon(1e-6));

    const auto report = pushforward_check(model, 1000000, {5});
    CHECK(report.within_bounds);
    for (std::size_t i = 0; i < 16; ++i) {
        CHECK(std::abs(report.frequencies[i] - 1.0 / 16) <= report.bounds[i]);
    }
}

TEST_CASE("fit rejects duplicate latent points and non-probability densities") {
    LatentEmbedding dup;
    dup.latent_points = {{0, 0}, {0, 0}};
    CHECK_THROWS_AS(fit(dup, unit_zeta()), InvalidInputError);

    const auto emb = random_embedding(4, 1);
    const auto heavy = SourceDensity::uniform(make_rectangle(-1, -1, 1, 1), 2.0);
    CHECK_THROWS_AS(fit(emb, heavy), InvalidInputError);
}

TEST_CASE("generate: outputs are exactly target atoms; determinism holds") {
    const auto emb = random_embedding(9, 77);
    const auto model = fit(emb, unit_zeta());

    const auto a = generate(model, 500, {42});
    const auto b = generate(model, 500, {42});
    REQUIRE(a.size() == 500);
    for (std::size_t s = 0; s < 500; ++s) {
        CHECK(a[s] == b[s]);
        bool is_atom = false;
        for (const Vec2 z : emb.latent_points)
            if (a[s][0] == z.x && a[s][1] == z.y) is_atom = true;
        CHECK(is_atom);
    }
    const auto c = generate(model, 500, {43});
    CHECK(a != c);
}

TEST_CASE("generate: decoder table lifts indices to ambient points") {
    auto emb = random_embedding(5, 31);
    emb.decoder_table = std::vector<std::vector<double>>{
        {0, 0, 1}, {1, 0, 2}, {2, 0, 3}, {3, 0, 4}, {4, 0, 5}};
    const auto model = fit(emb, unit_zeta());
    const auto idx = generate_indices(model, 200, {8});
    const auto out = generate(model, 200, {8});
    for (std::size_t s = 0; s < 200; ++s) {
        REQUIRE(out[s].size() == 3);
        CHECK(out[s] == (*emb.decoder_table)[static_cast<std::size_t>(idx[s])]);
    }
}

TEST_CASE("decoder table must cover every latent index") {
    auto emb = random_embedding(4, 13);
    emb.decoder_table = std::vector<std::vector<double>>{{0, 0}, {1, 1}};
    CHECK_THROWS_AS(emb.validate(), InvalidInputError);
}

TEST_CASE("pushforward_check flags an unsolved skewed model") {
    // Voronoi heights with very skewed target masses: cells are far from the
    // prescribed masses, the report must notice
    std::vector<Site> sites = {Site{{-0.5, 0}, 0.9}, Site{{0.5, 0}, 0.1}};
    const auto zeta = unit_zeta();
    HeightVector h = {0.0, 0.0};
    const auto diagram = build_power_diagram(sites, h, zeta.domain(), zeta);
    GenerativeModel model{LatentEmbedding{{{-0.5, 0}, {0.5, 0}}, std::nullopt}, zeta,
                          make_transport_model(sites, h, diagram, zeta, 1e-7), {}};
    CHECK_FALSE(model.transport.solved);

    const auto report = pushforward_check(model, 100000, {21});
    CHECK_FALSE(report.within_bounds);
    CHECK(report.max_deviation > 0.3); // cells split 50/50 but masses are 90/10
}

TEST_CASE("two-cluster mixture: equal cells and balanced generated clusters") {
    GaussianMixtureSpec spec;
    spec.components = {{{0.0, 0.0}, 3.0, 0.5}, {{40.0, 40.0}, 3.0, 0.5}};
    const auto atoms = sample_gaussian_mixture(spec, 128, {2029});

    LatentEmbedding emb;
    for (const auto& p : atoms.points) emb.latent_points.push_back({p[0], p[1]});
    const auto zeta = SourceDensity::uniform(make_rectangle(1000, 1000, 3000, 3000), 1.0);

    SolverConfig config;
    config.tol_gradient_inf = 1e-6 / 128;
    const auto model = fit(emb, zeta, config);
    CHECK(model.transport.solved);
    for (const auto& c : model.transport.diagram.cells)
        CHECK(c.measure == doctest::Approx(1.0 / 128).epsilon(1e-6));

    // both mixture modes receive their share of generated samples
    const auto out = generate(model, 10000, {1});
    std::size_t near_origin = 0;
    for (const auto& p : out)
        if (p[0] + p[1] < 40.0) ++near_origin;
    const double freq = static_cast<double>(near_origin) / 10000.0;
    CHECK(std::abs(freq - 0.5) <= 4.0 * std::sqrt(0.25 / 10000.0));
}
