#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "sdot/errors.hpp"
#include "sdot/solver.hpp"

namespace sdot {

std::vector<double> DiscreteTransportPlan::row_sums() const {
    std::vector<double> r(n_source, 0.0);
    for (const Entry& e : entries) r[static_cast<std::size_t>(e.source)] += e.mass;
    return r;
}

std::vector<double> DiscreteTransportPlan::column_sums() const {
    std::vector<double> c(n_target, 0.0);
    for (const Entry& e : entries) c[static_cast<std::size_t>(e.target)] += e.mass;
    return c;
}

namespace {

double atom_cost(const std::vector<double>& x, const std::vector<double>& y, double exponent) {
    double d2 = 0.0;
    for (std::size_t a = 0; a < x.size(); ++a) d2 += (x[a] - y[a]) * (x[a] - y[a]);
    if (exponent == 2.0) return 0.5 * d2;
    return std::pow(std::sqrt(d2), exponent);
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    int find(int x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    }
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[static_cast<std::size_t>(a)] = b;
        return true;
    }
};

// Transportation simplex on the complete bipartite graph. Nodes are sources
// 0..m-1 and targets m..m+n-1; the basis is a spanning tree of m+n-1 arcs.
class TransportSimplex {
public:
    TransportSimplex(const std::vector<std::vector<double>>& sx,
                     const std::vector<std::vector<double>>& tx, std::vector<double> supply,
                     std::vector<double> demand, double exponent)
        : m_(static_cast<int>(supply.size())),
          n_(static_cast<int>(demand.size())),
          supply_(std::move(supply)),
          demand_(std::move(demand)) {
        cost_.resize(static_cast<std::size_t>(m_) * static_cast<std::size_t>(n_));
        cost_scale_ = 0.0;
        for (int i = 0; i < m_; ++i)
            for (int j = 0; j < n_; ++j) {
                const double c = atom_cost(sx[static_cast<std::size_t>(i)],
                                           tx[static_cast<std::size_t>(j)], exponent);
                cost_[idx(i, j)] = c;
                cost_scale_ = std::max(cost_scale_, std::abs(c));
            }
        build_initial_basis();
    }

    void solve() {
        const double tol = 1e-11 * std::max(cost_scale_, 1.0);
        const long max_pivots = 1000L * (m_ + n_) + 100000L;
        std::vector<int> candidates;
        long pivots = 0;
        compute_duals();
        while (pivots < max_pivots) {
            if (candidates.empty()) {
                scan_candidates(tol, candidates);
                if (candidates.empty()) break; // dual feasible: optimal
            }
            // best still-violating candidate under current duals; prune stale
            int best_arc = -1;
            double best_rc = -tol;
            std::size_t keep = 0;
            for (const int arc : candidates) {
                const double rc = reduced_cost(arc / n_, arc % n_);
                if (rc < -tol) {
                    candidates[keep++] = arc;
                    if (rc < best_rc) {
                        best_rc = rc;
                        best_arc = arc;
                    }
                }
            }
            candidates.resize(keep);
            if (best_arc < 0) continue; // list went stale; rescan next round
            pivot(best_arc / n_, best_arc % n_);
            compute_duals();
            ++pivots;
        }
    }

    DiscreteTransportPlan plan() const {
        DiscreteTransportPlan p;
        p.n_source = static_cast<std::size_t>(m_);
        p.n_target = static_cast<std::size_t>(n_);
        double total = 0.0;
        for (std::size_t b = 0; b < basis_i_.size(); ++b) {
            if (basis_flow_[b] <= 0.0) continue;
            p.entries.push_back({basis_i_[b], basis_j_[b], basis_flow_[b]});
            total += basis_flow_[b] * cost_[idx(basis_i_[b], basis_j_[b])];
        }
        p.cost = total;
        return p;
    }

    /// Max dual infeasibility; <= 0 within tolerance certifies optimality.
    double optimality_residual() {
        compute_duals();
        double worst = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < m_; ++i)
            for (int j = 0; j < n_; ++j) worst = std::max(worst, -reduced_cost(i, j));
        return worst;
    }

private:
    std::size_t idx(int i, int j) const {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) +
               static_cast<std::size_t>(j);
    }

    double reduced_cost(int i, int j) const {
        return cost_[idx(i, j)] - pot_[static_cast<std::size_t>(i)] -
               pot_[static_cast<std::size_t>(m_ + j)];
    }

    // Greedy cheapest-column allocation per source, then zero-flow arcs to
    // stitch the forest into a spanning tree.
    void build_initial_basis() {
        std::vector<double> a = supply_;
        std::vector<double> b = demand_;
        UnionFind uf(m_ + n_);
        for (int i = 0; i < m_; ++i) {
            while (a[static_cast<std::size_t>(i)] > 0.0) {
                int best_j = -1;
                double best_c = std::numeric_limits<double>::infinity();
                for (int j = 0; j < n_; ++j) {
                    if (b[static_cast<std::size_t>(j)] <= 0.0) continue;
                    const double c = cost_[idx(i, j)];
                    if (c < best_c) {
                        best_c = c;
                        best_j = j;
                    }
                }
                if (best_j < 0) break; // demand exhausted by earlier rounding
                const double f = std::min(a[static_cast<std::size_t>(i)],
                                          b[static_cast<std::size_t>(best_j)]);
                add_basic(i, best_j, f);
                uf.unite(i, m_ + best_j);
                a[static_cast<std::size_t>(i)] -= f;
                b[static_cast<std::size_t>(best_j)] -= f;
                if (a[static_cast<std::size_t>(i)] <= 0.0) break;
            }
        }
        // connect leftover components through target 0
        for (int i = 0; i < m_; ++i)
            if (uf.unite(i, m_)) add_basic(i, 0, 0.0);
        for (int j = 1; j < n_; ++j)
            if (uf.unite(m_ + j, m_)) add_basic(0, j, 0.0);
    }

    void add_basic(int i, int j, double f) {
        basis_i_.push_back(i);
        basis_j_.push_back(j);
        basis_flow_.push_back(f);
    }

    // Root the basis tree at node m_ (target 0); parents + dual potentials.
    void compute_duals() {
        const int nodes = m_ + n_;
        adj_.assign(static_cast<std::size_t>(nodes), {});
        for (int b = 0; b < static_cast<int>(basis_i_.size()); ++b) {
            adj_[static_cast<std::size_t>(basis_i_[b])].push_back(b);
            adj_[static_cast<std::size_t>(m_ + basis_j_[b])].push_back(b);
        }
        pot_.assign(static_cast<std::size_t>(nodes), 0.0);
        parent_node_.assign(static_cast<std::size_t>(nodes), -1);
        parent_arc_.assign(static_cast<std::size_t>(nodes), -1);
        depth_.assign(static_cast<std::size_t>(nodes), -1);

        std::vector<int> stack{m_};
        depth_[static_cast<std::size_t>(m_)] = 0;
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            for (int b : adj_[static_cast<std::size_t>(u)]) {
                const int v = (u < m_) ? m_ + basis_j_[b] : basis_i_[b];
                if (depth_[static_cast<std::size_t>(v)] >= 0) continue;
                depth_[static_cast<std::size_t>(v)] = depth_[static_cast<std::size_t>(u)] + 1;
                parent_node_[static_cast<std::size_t>(v)] = u;
                parent_arc_[static_cast<std::size_t>(v)] = b;
                const double c = cost_[idx(basis_i_[b], basis_j_[b])];
                pot_[static_cast<std::size_t>(v)] = c - pot_[static_cast<std::size_t>(u)];
                stack.push_back(v);
            }
        }
    }

    void scan_candidates(double tol, std::vector<int>& out) {
        // keep the most negative arc per source row; cheap and effective
        for (int i = 0; i < m_; ++i) {
            double best_rc = -tol;
            int best = -1;
            const double pi = pot_[static_cast<std::size_t>(i)];
            const std::size_t row = idx(i, 0);
            for (int j = 0; j < n_; ++j) {
                const double rc = cost_[row + static_cast<std::size_t>(j)] - pi -
                                  pot_[static_cast<std::size_t>(m_ + j)];
                if (rc < best_rc) {
                    best_rc = rc;
                    best = j;
                }
            }
            if (best >= 0) out.push_back(i * n_ + best);
        }
    }

    void pivot(int ei, int ej) {
        // cycle: entering arc + tree path between its endpoints
        std::vector<int> arcs_e, arcs_t; // from source ei / target ej up to the LCA
        int u = ei;
        int v = m_ + ej;
        while (depth_[static_cast<std::size_t>(u)] > depth_[static_cast<std::size_t>(v)]) {
            arcs_e.push_back(parent_arc_[static_cast<std::size_t>(u)]);
            u = parent_node_[static_cast<std::size_t>(u)];
        }
        while (depth_[static_cast<std::size_t>(v)] > depth_[static_cast<std::size_t>(u)]) {
            arcs_t.push_back(parent_arc_[static_cast<std::size_t>(v)]);
            v = parent_node_[static_cast<std::size_t>(v)];
        }
        while (u != v) {
            arcs_e.push_back(parent_arc_[static_cast<std::size_t>(u)]);
            u = parent_node_[static_cast<std::size_t>(u)];
            arcs_t.push_back(parent_arc_[static_cast<std::size_t>(v)]);
            v = parent_node_[static_cast<std::size_t>(v)];
        }

        // Signs alternate around the cycle starting at -1 next to the
        // entering arc on both walks (bipartite, so parity always matches).
        std::vector<std::pair<int, int>> signed_arcs; // (arc, sign)
        int sign = -1;
        for (int b : arcs_e) {
            signed_arcs.push_back({b, sign});
            sign = -sign;
        }
        sign = -1;
        for (int b : arcs_t) {
            signed_arcs.push_back({b, sign});
            sign = -sign;
        }

        double theta = std::numeric_limits<double>::infinity();
        int leaving = -1;
        for (const auto& [b, s] : signed_arcs) {
            if (s < 0 && basis_flow_[static_cast<std::size_t>(b)] < theta) {
                theta = basis_flow_[static_cast<std::size_t>(b)];
                leaving = b;
            }
        }
        for (const auto& [b, s] : signed_arcs)
            basis_flow_[static_cast<std::size_t>(b)] += s * theta;
        basis_i_[static_cast<std::size_t>(leaving)] = ei;
        basis_j_[static_cast<std::size_t>(leaving)] = ej;
        basis_flow_[static_cast<std::size_t>(leaving)] = theta;
    }

    int m_, n_;
    std::vector<double> supply_, demand_;
    std::vector<double> cost_;
    double cost_scale_ = 0.0;

    std::vector<int> basis_i_, basis_j_;
    std::vector<double> basis_flow_;

    std::vector<std::vector<int>> adj_;
    std::vector<double> pot_;
    std::vector<int> parent_node_, parent_arc_, depth_;
};

} // namespace

DiscreteTransportPlan lp_oracle(const EmpiricalMeasure& source, const EmpiricalMeasure& target,
                                double cost_exponent) {
    source.validate();
    target.validate();
    if (source.dimension() != target.dimension())
        throw InvalidInputError("source and target dimensions differ");
    if (!(cost_exponent >= 1.0)) throw InvalidInputError("cost exponent must be >= 1");
    const double total_s = source.total_mass();
    const double total_t = target.total_mass();
    if (std::abs(total_s - total_t) > 1e-9 * std::max(total_s, total_t))
        throw InvalidInputError("source and target total masses differ");

    // absorb the rounding mismatch so marginals are exactly feasible
    std::vector<double> demand = target.masses;
    demand.back() += total_s - total_t;

    TransportSimplex simplex(source.points, target.points, source.masses, std::move(demand),
                             cost_exponent);
    simplex.solve();
    return simplex.plan();
}

} // namespace sdot
