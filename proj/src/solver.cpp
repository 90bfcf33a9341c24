#include "sdot/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <Eigen/SparseCholesky>

#include "sdot/errors.hpp"

namespace sdot {

void SolverConfig::validate() const {
    if (!(tol_gradient_inf > 0)) throw InvalidInputError("tol_gradient_inf must be positive");
    if (max_iterations <= 0) throw InvalidInputError("max_iterations must be positive");
    if (!(line_search_shrink > 0) || !(line_search_shrink < 1))
        throw InvalidInputError("line_search_shrink must be in (0,1)");
    if (!(min_cell_fraction > 0) || !(min_cell_fraction < 1))
        throw InvalidInputError("min_cell_fraction must be in (0,1)");
    if (!(regularization_eps > 0)) throw InvalidInputError("regularization_eps must be positive");
}

namespace {

double inf_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// One evaluation of the variational state at h.
struct State {
    PowerDiagram diagram;
    std::vector<double> masses;
    double energy = 0.0;
};

double energy_from_diagram(const std::vector<Site>& sites, const HeightVector& h,
                           const PowerDiagram& diagram, const SourceDensity& density) {
    double linear = 0.0;
    double potential = 0.0;
    for (std::size_t i = 0; i < sites.size(); ++i) {
        linear += h[i] * sites[i].mass;
        const PowerCell& cell = diagram.cells[i];
        if (cell.empty()) continue;
        const Vec2 y = sites[i].position;
        // integral of <x, y_i> + h_i over the cell
        potential += polygon_moment(*cell.polygon, Quadratic::linear(h[i], y.x, y.y), density);
    }
    return linear - potential;
}

State evaluate(const std::vector<Site>& sites, const HeightVector& h,
               const SourceDensity& density) {
    State s;
    s.diagram = build_power_diagram(sites, h, density.domain(), density);
    s.masses = s.diagram.cell_measures();
    s.energy = energy_from_diagram(sites, h, s.diagram, density);
    return s;
}

std::vector<double> masses_to_gradient(const std::vector<Site>& sites,
                                       const std::vector<double>& w) {
    std::vector<double> g(sites.size());
    for (std::size_t i = 0; i < sites.size(); ++i) g[i] = sites[i].mass - w[i];
    return g;
}

} // namespace

double alexandrov_potential(const std::vector<Site>& sites, const HeightVector& h,
                            const SourceDensity& density) {
    const PowerDiagram diagram = build_power_diagram(sites, h, density.domain(), density);
    double potential = 0.0;
    for (std::size_t i = 0; i < sites.size(); ++i) {
        const PowerCell& cell = diagram.cells[i];
        if (cell.empty()) continue;
        const Vec2 y = sites[i].position;
        potential += polygon_moment(*cell.polygon, Quadratic::linear(h[i], y.x, y.y), density);
    }
    return potential;
}

double energy(const std::vector<Site>& sites, const HeightVector& h,
              const SourceDensity& density) {
    double linear = 0.0;
    for (std::size_t i = 0; i < sites.size(); ++i) linear += h[i] * sites[i].mass;
    return linear - alexandrov_potential(sites, h, density);
}

std::vector<double> gradient(const std::vector<Site>& sites, const HeightVector& h,
                             const SourceDensity& density) {
    const PowerDiagram diagram = build_power_diagram(sites, h, density.domain(), density);
    return masses_to_gradient(sites, diagram.cell_measures());
}

Eigen::SparseMatrix<double> hessian_from_diagram(std::size_t k, const PowerDiagram& diagram) {
    for (const PowerCell& cell : diagram.cells)
        if (cell.empty())
            throw NotAdmissibleError("hessian undefined: cell " +
                                     std::to_string(cell.site_index) + " is empty");
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(diagram.dual_edges.size() * 4 + k);
    std::vector<double> diag(k, 0.0);
    for (const DualEdge& e : diagram.dual_edges) {
        const double v = e.face_measure / e.site_distance;
        triplets.emplace_back(e.i, e.j, v);
        triplets.emplace_back(e.j, e.i, v);
        diag[static_cast<std::size_t>(e.i)] -= v;
        diag[static_cast<std::size_t>(e.j)] -= v;
    }
    for (std::size_t i = 0; i < k; ++i)
        triplets.emplace_back(static_cast<int>(i), static_cast<int>(i), diag[i]);
    Eigen::SparseMatrix<double> H(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    H.setFromTriplets(triplets.begin(), triplets.end());
    return H;
}

Eigen::SparseMatrix<double> hessian(const std::vector<Site>& sites, const HeightVector& h,
                                    const SourceDensity& density) {
    const PowerDiagram diagram = build_power_diagram(sites, h, density.domain(), density);
    return hessian_from_diagram(sites.size(), diagram);
}

namespace {

// Reduced Newton system: pin the last coordinate (gauge), solve the SPD
// system (-H + eps I) d = g on the first k-1 coordinates.
HeightVector newton_direction(const Eigen::SparseMatrix<double>& H, const std::vector<double>& g,
                              double regularization_eps) {
    const Eigen::Index k = H.rows();
    if (k == 1) return HeightVector{0.0};
    const Eigen::Index m = k - 1;
    Eigen::SparseMatrix<double> M(m, m);
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(H.nonZeros()));
    for (Eigen::Index col = 0; col < m; ++col)
        for (Eigen::SparseMatrix<double>::InnerIterator it(H, col); it; ++it)
            if (it.row() < m) triplets.emplace_back(it.row(), col, -it.value());
    for (Eigen::Index i = 0; i < m; ++i) triplets.emplace_back(i, i, regularization_eps);
    M.setFromTriplets(triplets.begin(), triplets.end());

    Eigen::VectorXd rhs(m);
    for (Eigen::Index i = 0; i < m; ++i) rhs[i] = g[static_cast<std::size_t>(i)];

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(M);
    if (solver.info() != Eigen::Success)
        throw NotAdmissibleError("Newton system factorization failed");
    const Eigen::VectorXd d = solver.solve(rhs);

    HeightVector dir(static_cast<std::size_t>(k), 0.0);
    for (Eigen::Index i = 0; i < m; ++i) dir[static_cast<std::size_t>(i)] = d[i];
    return dir;
}

HeightVector stepped(const HeightVector& h, const HeightVector& d, double t) {
    HeightVector out(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) out[i] = h[i] + t * d[i];
    gauge_normalize(out);
    return out;
}

bool masses_above_floor(const std::vector<double>& w, const std::vector<double>& floors) {
    for (std::size_t i = 0; i < w.size(); ++i)
        if (w[i] < floors[i]) return false;
    return true;
}

void record(SolverReport& report, const HeightVector& h, const State& s,
            const std::vector<Site>& sites) {
    std::vector<double> g = masses_to_gradient(sites, s.masses);
    report.gradient_inf_norms.push_back(inf_norm(g));
    report.energies.push_back(s.energy);
    report.heights_trace.push_back(h);
}

} // namespace

NewtonResult newton_solve(const std::vector<Site>& sites, const SourceDensity& density,
                          const SolverConfig& config) {
    config.validate();
    validate_sites_and_heights(sites, HeightVector(sites.size(), 0.0));
    double nu_total = 0.0;
    for (const Site& s : sites) nu_total += s.mass;
    if (std::abs(nu_total - density.total_mass()) > 1e-9 * std::abs(density.total_mass()))
        throw InvalidInputError("site masses must sum to the source total mass");

    const auto t_start = std::chrono::steady_clock::now();
    const std::size_t k = sites.size();

    // Voronoi initialization, written in the internally centered frame: the
    // cells of (y, h) over the domain equal the Voronoi cells of the
    // recentred site cloud placed at the domain center, so they all meet the
    // domain whenever the cloud is not wider than the domain itself. Reduces
    // to h_i = -|y_i|^2/2 when both centroids sit at the origin.
    Vec2 site_center{0, 0};
    for (const Site& s : sites) site_center = site_center + s.position;
    site_center = site_center / static_cast<double>(k);
    const auto [dom_lo, dom_hi] = density.domain().bounding_box();
    const Vec2 domain_center = (dom_lo + dom_hi) * 0.5;

    HeightVector h(k);
    for (std::size_t i = 0; i < k; ++i)
        h[i] = -0.5 * norm2(sites[i].position - site_center) -
               dot(domain_center, sites[i].position);
    gauge_normalize(h);

    State state = evaluate(sites, h, density);
    NewtonResult result;
    SolverReport& report = result.report;
    record(report, h, state, sites);

    const int max_fallback = 50 * config.max_iterations;
    double ascent_step = 1.0;

    // Phase 1 (rare): safeguarded gradient ascent until every cell is
    // nonempty, for site clouds whose recentred Voronoi cells still miss the
    // domain.
    while (!state.diagram.all_nonempty() && report.fallback_iterations < max_fallback) {
        const std::vector<double> g = masses_to_gradient(sites, state.masses);
        const double g2 = [&] {
            double s = 0.0;
            for (double v : g) s += v * v;
            return s;
        }();
        if (g2 == 0.0) break;

        double t = ascent_step;
        bool accepted = false;
        while (t > 1e-14 * ascent_step) {
            const HeightVector trial = stepped(h, g, t);
            State trial_state = evaluate(sites, trial, density);
            if (trial_state.energy >= state.energy + 1e-4 * t * g2) {
                h = trial;
                state = std::move(trial_state);
                accepted = true;
                break;
            }
            t *= config.line_search_shrink;
        }
        if (!accepted) break;
        ascent_step = 2.0 * t; // grow while steps keep being accepted
        ++report.fallback_iterations;
        ++report.iterations;
        report.step_sizes.push_back(t);
        record(report, h, state, sites);
    }

    // Line-search floor: min_cell_fraction of nu_i, capped by the masses at
    // the Newton entry point so the starting state itself is acceptable.
    std::vector<double> floor_masses(k, 0.0);
    for (std::size_t i = 0; i < k; ++i)
        floor_masses[i] = config.min_cell_fraction * std::min(sites[i].mass, state.masses[i]);

    // Phase 2: damped Newton.
    while (report.newton_iterations < config.max_iterations) {
        const std::vector<double> g = masses_to_gradient(sites, state.masses);
        if (inf_norm(g) <= config.tol_gradient_inf) {
            report.converged = true;
            break;
        }
        if (!state.diagram.all_nonempty()) break; // fallback failed to open all cells

        const Eigen::SparseMatrix<double> H = hessian_from_diagram(k, state.diagram);
        const HeightVector direction = newton_direction(H, g, config.regularization_eps);

        double t = 1.0;
        bool accepted = false;
        while (t > 1e-14) {
            const HeightVector trial = stepped(h, direction, t);
            State trial_state = evaluate(sites, trial, density);
            if (masses_above_floor(trial_state.masses, floor_masses)) {
                // Near the optimum the energy gain drops below one ulp of |E|;
                // accept ties there as long as the gradient keeps contracting.
                const double slack = 4.0 * std::numeric_limits<double>::epsilon() *
                                     std::max(std::abs(state.energy), 1.0);
                const bool energy_ok = trial_state.energy >= state.energy;
                const bool tie_ok =
                    trial_state.energy >= state.energy - slack &&
                    inf_norm(masses_to_gradient(sites, trial_state.masses)) < inf_norm(g);
                if (energy_ok || tie_ok) {
                    h = trial;
                    state = std::move(trial_state);
                    accepted = true;
                    break;
                }
            }
            t *= config.line_search_shrink;
        }
        if (!accepted) break; // no acceptable damped step remains
        ++report.newton_iterations;
        ++report.iterations;
        report.step_sizes.push_back(t);
        record(report, h, state, sites);
    }

    if (!report.converged) {
        const std::vector<double> g = masses_to_gradient(sites, state.masses);
        report.converged = inf_norm(g) <= config.tol_gradient_inf;
    }

    report.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    result.heights = h;
    result.diagram = std::move(state.diagram);
    return result;
}

SgdResult sgd_solve(const EmpiricalMeasure& targets, const SourceSampler& sampler,
                    const SolverConfig& config, int samples_per_iteration) {
    config.validate();
    targets.validate();
    if (samples_per_iteration <= 0)
        throw InvalidInputError("samples_per_iteration must be positive");

    const auto t_start = std::chrono::steady_clock::now();
    const std::size_t k = targets.size();
    const std::size_t d = targets.dimension();
    const auto& y = targets.points;

    HeightVector h(k);
    for (std::size_t i = 0; i < k; ++i) {
        double n2 = 0.0;
        for (double c : y[i]) n2 += c * c;
        h[i] = -0.5 * n2;
    }
    gauge_normalize(h);

    SgdResult result;
    SolverReport& report = result.report;

    const auto estimate_masses = [&](const HeightVector& heights, int n_samples,
                                     std::uint64_t stream_base) {
        std::vector<double> w(k, 0.0);
        for (int s = 0; s < n_samples; ++s) {
            const std::vector<double> x = sampler(stream_base + static_cast<std::uint64_t>(s));
            if (x.size() != d) throw InvalidInputError("sampler dimension mismatch");
            std::size_t best = 0;
            double best_v = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < k; ++i) {
                double v = heights[i];
                for (std::size_t a = 0; a < d; ++a) v += x[a] * y[i][a];
                if (v > best_v) {
                    best_v = v;
                    best = i;
                }
            }
            w[best] += 1.0;
        }
        const double total = targets.total_mass() / static_cast<double>(n_samples);
        for (double& v : w) v *= total;
        return w;
    };

    // Step scale: heights live on the scale of <x, y> variations, so couple
    // the RMS spreads of the two point clouds.
    double site_spread = 0.0;
    {
        std::vector<double> mean(d, 0.0);
        for (const auto& p : y)
            for (std::size_t a = 0; a < d; ++a) mean[a] += p[a];
        for (double& v : mean) v /= static_cast<double>(k);
        for (const auto& p : y)
            for (std::size_t a = 0; a < d; ++a) site_spread += (p[a] - mean[a]) * (p[a] - mean[a]);
        site_spread = std::sqrt(site_spread / static_cast<double>(k));
    }
    double source_spread = 0.0;
    {
        const int probe = std::min(samples_per_iteration, 1024);
        std::vector<std::vector<double>> xs(static_cast<std::size_t>(probe));
        std::vector<double> mean(d, 0.0);
        for (int s = 0; s < probe; ++s) {
            xs[static_cast<std::size_t>(s)] = sampler(static_cast<std::uint64_t>(s));
            for (std::size_t a = 0; a < d; ++a) mean[a] += xs[static_cast<std::size_t>(s)][a];
        }
        for (double& v : mean) v /= probe;
        for (const auto& x : xs)
            for (std::size_t a = 0; a < d; ++a)
                source_spread += (x[a] - mean[a]) * (x[a] - mean[a]);
        source_spread = std::sqrt(source_spread / probe);
    }
    const double base_step =
        4.0 * std::max(site_spread * source_spread, 1e-12) * static_cast<double>(k);

    HeightVector h_avg(k, 0.0);
    int avg_count = 0;
    const int iterations = config.max_iterations;
    std::uint64_t stream = 1 << 20; // probe batch used streams [0, 1024)
    for (int n = 0; n < iterations; ++n) {
        const std::vector<double> w = estimate_masses(h, samples_per_iteration, stream);
        stream += static_cast<std::uint64_t>(samples_per_iteration);
        std::vector<double> g(k);
        for (std::size_t i = 0; i < k; ++i) g[i] = targets.masses[i] - w[i];

        report.gradient_inf_norms.push_back(inf_norm(g));
        report.heights_trace.push_back(h);

        const double t = base_step / std::sqrt(1.0 + n);
        for (std::size_t i = 0; i < k; ++i) h[i] += t * g[i];
        gauge_normalize(h);
        report.step_sizes.push_back(t);
        ++report.iterations;

        if (n >= iterations / 2) { // tail averaging
            for (std::size_t i = 0; i < k; ++i) h_avg[i] += h[i];
            ++avg_count;
        }
    }
    if (avg_count > 0)
        for (std::size_t i = 0; i < k; ++i) h_avg[i] /= avg_count;
    else
        h_avg = h;
    gauge_normalize(h_avg);

    // final high-precision residual estimate on fresh substreams
    const int final_batch = 4 * samples_per_iteration;
    result.estimated_masses = estimate_masses(h_avg, final_batch, stream);
    std::vector<double> g(k);
    for (std::size_t i = 0; i < k; ++i) g[i] = targets.masses[i] - result.estimated_masses[i];
    report.gradient_inf_norms.push_back(inf_norm(g));
    report.heights_trace.push_back(h_avg);

    // Monte-Carlo-limited tolerance: 4 binomial sigmas on the largest atom
    double sigma = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double p = targets.masses[i] / targets.total_mass();
        sigma = std::max(sigma, std::sqrt(p * (1 - p) / final_batch));
    }
    report.converged = inf_norm(g) <= std::max(4.0 * sigma * targets.total_mass(),
                                               config.tol_gradient_inf);
    report.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    result.heights = h_avg;
    return result;
}

} // namespace sdot
