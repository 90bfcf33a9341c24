#pragma once

#include <functional>
#include <vector>

#include "sdot/geometry.hpp"
#include "sdot/measure.hpp"
#include "sdot/solver.hpp"

namespace sdot {

/// Convex piecewise-linear potential u_h(x) = max_i <x, y_i> + h_i.
struct BrenierPotential {
    std::vector<Site> sites;
    HeightVector heights;
};

struct UEval {
    double value = 0.0;
    int index = -1; // argmax plane; ties break to the lowest index
};

UEval u_eval(const BrenierPotential& potential, Vec2 x);

/// Kantorovich potential phi(x) = 0.5|x|^2 - u_h(x).
double kantorovich_eval(const BrenierPotential& potential, Vec2 x);

/// Discrete c-transform psi^c(x) = min_j (0.5|x - y_j|^2 - psi_j).
double c_transform_discrete(const std::vector<Site>& sites, const std::vector<double>& psi,
                            Vec2 x);

/// pow(x, y_i) = 0.5|x - y_i|^2 - psi_i.
double power_distance(Vec2 x, const Site& site, double psi_i);

/// psi_i = h_i + 0.5|y_i|^2 and its inverse; exact round trip.
std::vector<double> weights_from_heights(const std::vector<Site>& sites, const HeightVector& h);
HeightVector heights_from_weights(const std::vector<Site>& sites, const std::vector<double>& psi);

/// Solved transport bundle: T = grad u_h maps cell i to site i.
struct TransportModel {
    BrenierPotential potential;
    PowerDiagram diagram;
    SourceDensity density;
    double transport_cost = 0.0;
    /// Dual objective E_D(psi); equals transport_cost at the optimum. For
    /// uniform target masses this is the explicit Wasserstein formula value.
    double wasserstein = 0.0;
    double gradient_inf_norm = 0.0;
    bool solved = false;

    const ConvexPolygon& domain() const { return density.domain(); }
};

/// Assembles the bundle and computes cost / Wasserstein / residual. `tol`
/// decides the solved flag (||nu - w||_inf <= tol).
TransportModel make_transport_model(const std::vector<Site>& sites, const HeightVector& h,
                                    PowerDiagram diagram, SourceDensity density,
                                    double tol = 1e-7);

/// T(x) = site of the argmax plane at x. Throws OutOfDomainError outside the
/// source domain.
Vec2 transport_apply(const TransportModel& model, Vec2 x);

using KernelGradient = std::function<Vec2(Vec2)>;

/// Transport map through the discriminator-generator bridge
/// T(x) = x - (grad kernel)^{-1}(grad phi(x)); grad phi is evaluated
/// analytically as x - y_argmax. Throws UndefinedGradientError within
/// tolerance of a cell boundary.
Vec2 dg_map(const TransportModel& model, Vec2 x, const KernelGradient& kernel_gradient,
            const KernelGradient& kernel_gradient_inverse);

/// Built-in quadratic kernel h(z) = 0.5|z|^2: gradient and inverse are the
/// identity.
KernelGradient quadratic_kernel_gradient();
KernelGradient quadratic_kernel_gradient_inverse();

/// C(psi) = sum_j integral over W_j of 0.5|x - y_j|^2 d(mu), exact.
double transport_cost(const TransportModel& model);

/// E_D(psi) = sum_i psi_i (nu_i - w_i(psi)) + sum_j integral over W_j of c d(mu).
double dual_energy(const std::vector<Site>& sites, const std::vector<double>& psi,
                   const std::vector<double>& nu, const SourceDensity& density);

/// Explicit Wasserstein value W = integral of phi d(zeta) + (1/n) sum_j psi_j.
/// Requires a solved model with uniform target masses 1/n.
double wasserstein(const TransportModel& model, const SourceDensity& zeta_density);

} // namespace sdot
