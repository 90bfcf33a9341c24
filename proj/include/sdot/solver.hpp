#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/SparseCore>

#include "sdot/geometry.hpp"
#include "sdot/measure.hpp"

namespace sdot {

struct SolverConfig {
    double tol_gradient_inf = 1e-7;
    int max_iterations = 100;
    double line_search_shrink = 0.5;
    /// Line search rejects steps where any cell mass drops below
    /// min_cell_fraction * nu_i.
    double min_cell_fraction = 0.1;
    /// Tikhonov term added to the reduced Newton system diagonal.
    double regularization_eps = 1e-12;

    void validate() const;
};

struct SolverReport {
    int iterations = 0;         // accepted steps, both phases
    int newton_iterations = 0;
    int fallback_iterations = 0; // gradient-ascent steps used to reach admissibility
    std::vector<double> gradient_inf_norms; // per iterate, including the initial one
    std::vector<double> energies;
    std::vector<double> step_sizes;         // per accepted step
    std::vector<HeightVector> heights_trace; // iterates, including the initial one
    bool converged = false;
    double wall_time_seconds = 0.0;
};

struct NewtonResult {
    HeightVector heights;
    PowerDiagram diagram;
    SolverReport report;
};

/// Concave objective E(h) = sum_i h_i nu_i - integral of u_h d(mu), with the
/// integration constant fixed to zero.
double energy(const std::vector<Site>& sites, const HeightVector& h, const SourceDensity& density);

/// Convex potential A(h) = integral of u_h d(mu); grad A = cell masses w(h).
double alexandrov_potential(const std::vector<Site>& sites, const HeightVector& h,
                            const SourceDensity& density);

/// grad E = (nu_i - w_i(h))_i.
std::vector<double> gradient(const std::vector<Site>& sites, const HeightVector& h,
                             const SourceDensity& density);

/// Hessian of E: off-diagonal (i,j) = +face_measure(i,j)/|y_i - y_j| on dual
/// edges, diagonal = negated row sum. Negative semidefinite; kernel is the
/// constant vector. Throws NotAdmissibleError when some cell is empty.
Eigen::SparseMatrix<double> hessian(const std::vector<Site>& sites, const HeightVector& h,
                                    const SourceDensity& density);

/// Same, assembled from an existing diagram.
Eigen::SparseMatrix<double> hessian_from_diagram(std::size_t k, const PowerDiagram& diagram);

/// Damped Newton maximization of E. Starts from the Voronoi heights
/// h_i = -|y_i|^2/2; if that leaves cells empty (or below the line-search
/// floor), runs safeguarded gradient ascent first. Accepted steps keep every
/// cell mass >= min_cell_fraction * nu_i and never decrease E. The returned
/// heights satisfy sum(h) = 0.
NewtonResult newton_solve(const std::vector<Site>& sites, const SourceDensity& density,
                          const SolverConfig& config = {});

using SourceSampler = std::function<std::vector<double>(std::uint64_t sample_index)>;

struct SgdResult {
    HeightVector heights;
    SolverReport report;
    std::vector<double> estimated_masses; // final Monte Carlo estimate of w(h)
};

/// Stochastic gradient ascent on E in arbitrary dimension. Cell masses are
/// estimated by assigning each sampled point to argmax_i <x, y_i> + h_i.
/// Deterministic: randomness comes only from the sampler's substream index.
SgdResult sgd_solve(const EmpiricalMeasure& targets, const SourceSampler& sampler,
                    const SolverConfig& config, int samples_per_iteration);

struct DiscreteTransportPlan {
    struct Entry {
        int source = 0;
        int target = 0;
        double mass = 0.0;
    };
    std::size_t n_source = 0;
    std::size_t n_target = 0;
    std::vector<Entry> entries;
    double cost = 0.0;

    std::vector<double> row_sums() const;
    std::vector<double> column_sums() const;
};

/// Exact optimal transport plan between two finite measures of equal total
/// mass (transportation simplex). cost_exponent 2 means c = 0.5|x-y|^2;
/// other exponents p use c = |x-y|^p.
DiscreteTransportPlan lp_oracle(const EmpiricalMeasure& source, const EmpiricalMeasure& target,
                                double cost_exponent = 2.0);

} // namespace sdot
