#pragma once

#include <optional>
#include <vector>

#include "sdot/measure.hpp"
#include "sdot/potential.hpp"
#include "sdot/rng.hpp"
#include "sdot/solver.hpp"

namespace sdot {

/// Latent codes z_i of the target samples, with an optional decoder table
/// mapping latent index -> ambient-space point.
struct LatentEmbedding {
    std::vector<Vec2> latent_points;
    std::optional<std::vector<std::vector<double>>> decoder_table;

    void validate() const; // distinct points; total decoder table
};

struct GenerativeModel {
    LatentEmbedding embedding;
    SourceDensity zeta;
    TransportModel transport;
    SolverReport report;
};

/// Solves the semi-discrete transport from zeta to the uniform empirical
/// measure on the latent points.
GenerativeModel fit(const LatentEmbedding& embedding, const SourceDensity& zeta,
                    const SolverConfig& config = {});

/// Draws z ~ zeta (substream = sample index), pushes it through T and emits
/// the decoded point (or the latent point when no decoder is present).
/// Every output equals some target atom exactly.
std::vector<std::vector<double>> generate(const GenerativeModel& model, std::size_t n_samples,
                                          RandomSeed seed);

/// Indices of T(z) per sample; the raw pushforward before decoding.
std::vector<int> generate_indices(const GenerativeModel& model, std::size_t n_samples,
                                  RandomSeed seed);

struct PushforwardReport {
    std::vector<double> frequencies; // empirical hit rate per target index
    std::vector<double> masses;      // expected rate nu_i / total
    std::vector<double> deviations;  // |frequency - mass|
    std::vector<double> bounds;      // 4 sqrt(p(1-p)/N)
    double max_deviation = 0.0;
    bool within_bounds = false;
    std::size_t n_samples = 0;
};

/// Monte Carlo measure-preservation check: per-index frequency vs target
/// mass, with the 4-sigma multinomial bound.
PushforwardReport pushforward_check(const GenerativeModel& model, std::size_t n_samples,
                                    RandomSeed seed);

} // namespace sdot
