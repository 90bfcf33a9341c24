#include "sdot/genmodel.hpp"

#include <cmath>

#include "sdot/errors.hpp"

namespace sdot {

void LatentEmbedding::validate() const {
    if (latent_points.empty()) throw InvalidInputError("embedding needs at least one point");
    for (Vec2 p : latent_points)
        if (!p.finite()) throw InvalidInputError("latent point is not finite");
    for (std::size_t i = 0; i < latent_points.size(); ++i)
        for (std::size_t j = i + 1; j < latent_points.size(); ++j)
            if (dist(latent_points[i], latent_points[j]) <= kGeomEps)
                throw InvalidInputError("latent points must be distinct");
    if (decoder_table) {
        if (decoder_table->size() != latent_points.size())
            throw InvalidInputError("decoder table must cover every latent index");
        const std::size_t d = decoder_table->empty() ? 0 : (*decoder_table)[0].size();
        for (const auto& p : *decoder_table) {
            if (p.empty() || p.size() != d)
                throw InvalidInputError("decoder table rows have mixed dimensions");
            for (double c : p)
                if (!std::isfinite(c)) throw InvalidInputError("decoder point is not finite");
        }
    }
}

GenerativeModel fit(const LatentEmbedding& embedding, const SourceDensity& zeta,
                    const SolverConfig& config) {
    embedding.validate();
    if (std::abs(zeta.total_mass() - 1.0) > 1e-9)
        throw InvalidInputError("fit requires a probability density (total mass 1)");

    const std::size_t n = embedding.latent_points.size();
    std::vector<Site> sites(n);
    for (std::size_t i = 0; i < n; ++i)
        sites[i] = Site{embedding.latent_points[i], 1.0 / static_cast<double>(n)};

    NewtonResult solved = newton_solve(sites, zeta, config);
    GenerativeModel model{embedding, zeta,
                          make_transport_model(sites, solved.heights, std::move(solved.diagram),
                                               zeta, config.tol_gradient_inf),
                          std::move(solved.report)};
    return model;
}

std::vector<int> generate_indices(const GenerativeModel& model, std::size_t n_samples,
                                  RandomSeed seed) {
    const std::vector<Vec2> zs = n_samples == 0
                                     ? std::vector<Vec2>{}
                                     : sample_source(model.zeta, n_samples, seed);
    std::vector<int> idx(n_samples);
    for (std::size_t s = 0; s < n_samples; ++s)
        idx[s] = u_eval(model.transport.potential, zs[s]).index;
    return idx;
}

std::vector<std::vector<double>> generate(const GenerativeModel& model, std::size_t n_samples,
                                          RandomSeed seed) {
    const std::vector<int> idx = generate_indices(model, n_samples, seed);
    std::vector<std::vector<double>> out(idx.size());
    for (std::size_t s = 0; s < idx.size(); ++s) {
        const std::size_t i = static_cast<std::size_t>(idx[s]);
        if (model.embedding.decoder_table)
            out[s] = (*model.embedding.decoder_table)[i];
        else {
            const Vec2 z = model.embedding.latent_points[i];
            out[s] = {z.x, z.y};
        }
    }
    return out;
}

PushforwardReport pushforward_check(const GenerativeModel& model, std::size_t n_samples,
                                    RandomSeed seed) {
    if (n_samples == 0) throw InvalidInputError("pushforward_check needs samples");
    const std::vector<int> idx = generate_indices(model, n_samples, seed);
    const auto& sites = model.transport.potential.sites;
    const std::size_t k = sites.size();

    PushforwardReport report;
    report.n_samples = n_samples;
    report.frequencies.assign(k, 0.0);
    for (int i : idx) report.frequencies[static_cast<std::size_t>(i)] += 1.0;
    for (double& f : report.frequencies) f /= static_cast<double>(n_samples);

    double total = 0.0;
    for (const Site& s : sites) total += s.mass;
    report.masses.resize(k);
    report.deviations.resize(k);
    report.bounds.resize(k);
    report.within_bounds = true;
    for (std::size_t i = 0; i < k; ++i) {
        const double p = sites[i].mass / total;
        report.masses[i] = p;
        report.deviations[i] = std::abs(report.frequencies[i] - p);
        report.bounds[i] = 4.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(n_samples));
        report.max_deviation = std::max(report.max_deviation, report.deviations[i]);
        if (report.deviations[i] > report.bounds[i]) report.within_bounds = false;
    }
    return report;
}

} // namespace sdot
