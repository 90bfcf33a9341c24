#include "sdot/potential.hpp"

#include <cmath>
#include <limits>

#include "sdot/errors.hpp"

namespace sdot {

UEval u_eval(const BrenierPotential& potential, Vec2 x) {
    if (potential.sites.empty() || potential.sites.size() != potential.heights.size())
        throw InvalidInputError("potential has inconsistent sites/heights");
    UEval best;
    best.value = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < potential.sites.size(); ++i) {
        const double v = dot(x, potential.sites[i].position) + potential.heights[i];
        if (v > best.value) {
            best.value = v;
            best.index = static_cast<int>(i);
        }
    }
    return best;
}

double kantorovich_eval(const BrenierPotential& potential, Vec2 x) {
    return 0.5 * norm2(x) - u_eval(potential, x).value;
}

double c_transform_discrete(const std::vector<Site>& sites, const std::vector<double>& psi,
                            Vec2 x) {
    if (sites.empty() || sites.size() != psi.size())
        throw InvalidInputError("c-transform needs matching sites/weights");
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < sites.size(); ++j)
        best = std::min(best, 0.5 * norm2(x - sites[j].position) - psi[j]);
    return best;
}

double power_distance(Vec2 x, const Site& site, double psi_i) {
    return 0.5 * norm2(x - site.position) - psi_i;
}

std::vector<double> weights_from_heights(const std::vector<Site>& sites, const HeightVector& h) {
    if (sites.size() != h.size()) throw InvalidInputError("|sites| != |heights|");
    std::vector<double> psi(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) psi[i] = h[i] + 0.5 * norm2(sites[i].position);
    return psi;
}

HeightVector heights_from_weights(const std::vector<Site>& sites, const std::vector<double>& psi) {
    if (sites.size() != psi.size()) throw InvalidInputError("|sites| != |weights|");
    HeightVector h(psi.size());
    for (std::size_t i = 0; i < psi.size(); ++i) h[i] = psi[i] - 0.5 * norm2(sites[i].position);
    return h;
}

double transport_cost(const TransportModel& model) {
    const auto& sites = model.potential.sites;
    double cost = 0.0;
    for (std::size_t i = 0; i < sites.size(); ++i) {
        const PowerCell& cell = model.diagram.cells[i];
        if (cell.empty()) continue;
        cost += polygon_moment(*cell.polygon, Quadratic::half_sq_dist(sites[i].position),
                               model.density);
    }
    return cost;
}

double dual_energy(const std::vector<Site>& sites, const std::vector<double>& psi,
                   const std::vector<double>& nu, const SourceDensity& density) {
    if (sites.size() != psi.size() || sites.size() != nu.size())
        throw InvalidInputError("dual_energy needs matching sites/psi/nu");
    const HeightVector h = heights_from_weights(sites, psi);
    const PowerDiagram diagram = build_power_diagram(sites, h, density.domain(), density);
    double value = 0.0;
    for (std::size_t i = 0; i < sites.size(); ++i) {
        value += psi[i] * (nu[i] - diagram.cells[i].measure);
        if (diagram.cells[i].empty()) continue;
        value += polygon_moment(*diagram.cells[i].polygon,
                                Quadratic::half_sq_dist(sites[i].position), density);
    }
    return value;
}

TransportModel make_transport_model(const std::vector<Site>& sites, const HeightVector& h,
                                    PowerDiagram diagram, SourceDensity density, double tol) {
    TransportModel model{BrenierPotential{sites, h}, std::move(diagram), std::move(density),
                         0.0, 0.0, 0.0, false};
    double residual = 0.0;
    for (std::size_t i = 0; i < sites.size(); ++i)
        residual = std::max(residual, std::abs(sites[i].mass - model.diagram.cells[i].measure));
    model.gradient_inf_norm = residual;
    model.solved = residual <= tol;
    model.transport_cost = transport_cost(model);

    // dual objective E_D(psi(h)); the cost integral is already available
    const std::vector<double> psi = weights_from_heights(sites, h);
    double coupling = 0.0;
    for (std::size_t i = 0; i < sites.size(); ++i)
        coupling += psi[i] * (sites[i].mass - model.diagram.cells[i].measure);
    model.wasserstein = coupling + model.transport_cost;
    return model;
}

Vec2 transport_apply(const TransportModel& model, Vec2 x) {
    const ConvexPolygon& domain = model.domain();
    if (!domain.contains(x, kGeomEps * std::max(1.0, domain.diameter())))
        throw OutOfDomainError("transport_apply: point outside the source domain");
    const UEval e = u_eval(model.potential, x);
    return model.potential.sites[static_cast<std::size_t>(e.index)].position;
}

KernelGradient quadratic_kernel_gradient() {
    return [](Vec2 z) { return z; };
}

KernelGradient quadratic_kernel_gradient_inverse() {
    return [](Vec2 z) { return z; };
}

Vec2 dg_map(const TransportModel& model, Vec2 x, const KernelGradient& kernel_gradient,
            const KernelGradient& kernel_gradient_inverse) {
    const ConvexPolygon& domain = model.domain();
    const double scale = std::max(1.0, domain.diameter());
    if (!domain.contains(x, kGeomEps * scale))
        throw OutOfDomainError("dg_map: point outside the source domain");

    const auto& sites = model.potential.sites;
    const auto& h = model.potential.heights;
    const UEval best = u_eval(model.potential, x);
    const Vec2 yb = sites[static_cast<std::size_t>(best.index)].position;

    // geometric distance from x to the nearest cell boundary
    for (std::size_t j = 0; j < sites.size(); ++j) {
        if (static_cast<int>(j) == best.index) continue;
        const double vj = dot(x, sites[j].position) + h[j];
        const double margin = (best.value - vj) / dist(yb, sites[j].position);
        if (margin <= kGeomEps * scale)
            throw UndefinedGradientError("dg_map: gradient undefined on a cell boundary");
    }

    const Vec2 grad_phi = x - yb; // analytic gradient of 0.5|x|^2 - u_h
    const Vec2 step = kernel_gradient_inverse(grad_phi);
    const Vec2 check = kernel_gradient(step);
    if (dist(check, grad_phi) > 1e-6 * (norm(grad_phi) + 1.0))
        throw InvalidInputError("dg_map: kernel gradient pair is not mutually inverse");
    return x - step;
}

double wasserstein(const TransportModel& model, const SourceDensity& zeta_density) {
    if (!model.solved)
        throw InvalidStateError("wasserstein: model is not solved to tolerance");
    const auto& sites = model.potential.sites;
    const std::size_t n = sites.size();
    const double uniform = zeta_density.total_mass() / static_cast<double>(n);
    for (const Site& s : sites)
        if (std::abs(s.mass - uniform) > 1e-9 * uniform)
            throw InvalidInputError("wasserstein formula requires target masses 1/n");
    {
        const ConvexPolygon& a = model.domain();
        const ConvexPolygon& b = zeta_density.domain();
        if (std::abs(a.area() - b.area()) > 1e-9 * std::abs(a.area()) ||
            dist(a.centroid(), b.centroid()) > 1e-9 * std::max(1.0, a.diameter()))
            throw InvalidInputError("wasserstein: zeta domain differs from the model domain");
    }

    // integral of phi = 0.5|x|^2 - u_h over each cell, against zeta
    double phi_integral = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const PowerCell& cell = model.diagram.cells[i];
        if (cell.empty()) continue;
        Quadratic q = Quadratic::half_sq_norm();
        const Vec2 y = sites[i].position;
        q.cx -= y.x;
        q.cy -= y.y;
        q.c0 -= model.potential.heights[i];
        phi_integral += polygon_moment(*cell.polygon, q, zeta_density);
    }

    const std::vector<double> psi = weights_from_heights(sites, model.potential.heights);
    double psi_mean = 0.0;
    for (double p : psi) psi_mean += p;
    psi_mean /= static_cast<double>(n);
    return phi_integral + psi_mean;
}

} // namespace sdot
