#include "sdot/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <Eigen/Dense>

#include "sdot/errors.hpp"
#include "sdot/genmodel.hpp"
#include "sdot/io.hpp"
#include "sdot/potential.hpp"
#include "sdot/render.hpp"
#include "sdot/solver.hpp"

namespace sdot::cli {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitInputError = 2;
constexpr int kExitNonConvergence = 3;

using io::json;

void emit_error(const std::string& message) {
    json inner;
    try {
        inner = json::parse(message);
    } catch (...) {
        inner = json{{"type", "invalid-input"}, {"message", message}};
    }
    std::cerr << json{{"error", inner}}.dump() << '\n';
}

double now_seconds(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void write_manifest(const std::string& out_path, const io::RunManifest& manifest) {
    io::write_file_atomic(out_path + ".manifest.json",
                          io::manifest_to_json(manifest).dump(2) + "\n");
}

std::string format_csv_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

io::SolveResult load_result(const std::string& path) {
    return io::result_from_json(io::parse_json_file(path));
}

TransportModel model_from_result(const io::SolveResult& r) {
    return make_transport_model(r.sites, r.heights, r.diagram, r.rebuild_density(),
                                r.tolerance);
}

GenerativeModel genmodel_from_result(const io::SolveResult& r) {
    LatentEmbedding embedding;
    embedding.latent_points.reserve(r.sites.size());
    for (const Site& s : r.sites) embedding.latent_points.push_back(s.position);
    embedding.decoder_table = r.decoder;
    SourceDensity zeta = r.rebuild_density();
    GenerativeModel model{std::move(embedding), zeta, model_from_result(r), r.report};
    return model;
}

struct SolveOptions {
    std::string sites_path;
    std::string domain_path;
    std::string density_path;
    std::string out_path = "result.json";
    double tol = 1e-7;
    int max_iter = 100;
    int segments = 0;
};

int cmd_solve(const SolveOptions& opt) {
    const auto t0 = std::chrono::steady_clock::now();

    const std::string sites_raw = io::read_file(opt.sites_path);
    const std::string domain_raw = io::read_file(opt.domain_path);
    json density_spec; // null means uniform total mass 1
    json digests{{opt.sites_path, io::digest_hex(sites_raw)},
                 {opt.domain_path, io::digest_hex(domain_raw)}};
    if (!opt.density_path.empty()) {
        const std::string density_raw = io::read_file(opt.density_path);
        digests[opt.density_path] = io::digest_hex(density_raw);
        density_spec = io::parse_json(density_raw, opt.density_path);
    }

    io::SolveResult result;
    io::parse_sites(io::parse_json(sites_raw, opt.sites_path), result.sites, result.decoder);
    result.domain = io::parse_domain(io::parse_json(domain_raw, opt.domain_path), opt.segments);
    result.density_spec =
        density_spec.is_null() ? json{{"uniform", {{"total_mass", 1.0}}}} : density_spec;
    const SourceDensity density = io::parse_density(result.density_spec, result.domain);

    SolverConfig config;
    config.tol_gradient_inf = opt.tol;
    config.max_iterations = opt.max_iter;
    NewtonResult solved = newton_solve(result.sites, density, config);

    const TransportModel model = make_transport_model(result.sites, solved.heights,
                                                      solved.diagram, density, opt.tol);
    result.heights = solved.heights;
    result.weights = weights_from_heights(result.sites, solved.heights);
    result.diagram = std::move(solved.diagram);
    result.report = solved.report;
    result.wasserstein = model.wasserstein;
    result.transport_cost = model.transport_cost;
    result.tolerance = opt.tol;
    result.solved = model.solved;

    io::write_file_atomic(opt.out_path, io::result_to_json(result).dump(2) + "\n");

    io::RunManifest manifest;
    manifest.command = "solve";
    manifest.parameters = {{"sites", opt.sites_path},     {"domain", opt.domain_path},
                           {"density", opt.density_path}, {"tol", opt.tol},
                           {"max_iter", opt.max_iter},    {"segments", opt.segments},
                           {"out", opt.out_path}};
    manifest.input_digests = std::move(digests);
    manifest.wall_time_seconds = now_seconds(t0);
    write_manifest(opt.out_path, manifest);

    if (!result.solved) {
        emit_error(json{{"type", "non-convergence"},
                        {"message", "solver did not reach tolerance; best iterate written"},
                        {"residual", result.report.gradient_inf_norms.back()},
                        {"out", opt.out_path}}
                       .dump());
        return kExitNonConvergence;
    }
    return kExitOk;
}

struct GenerateOptions {
    std::string result_path;
    std::string out_path = "samples.csv";
    std::uint64_t n = 0;
    std::uint64_t seed = 0;
};

int cmd_generate(const GenerateOptions& opt) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string raw = io::read_file(opt.result_path);
    const io::SolveResult result =
        io::result_from_json(io::parse_json(raw, opt.result_path));
    const GenerativeModel model = genmodel_from_result(result);

    const auto samples = generate(model, opt.n, RandomSeed{opt.seed});
    const std::size_t dim =
        result.decoder ? (*result.decoder)[0].size() : static_cast<std::size_t>(2);

    std::ostringstream csv;
    for (std::size_t a = 0; a < dim; ++a) csv << (a ? "," : "") << 'x' << a;
    csv << '\n';
    for (const auto& p : samples) {
        for (std::size_t a = 0; a < p.size(); ++a)
            csv << (a ? "," : "") << format_csv_value(p[a]);
        csv << '\n';
    }
    io::write_file_atomic(opt.out_path, csv.str());

    io::RunManifest manifest;
    manifest.command = "generate";
    manifest.parameters = {{"result", opt.result_path}, {"n", opt.n}, {"out", opt.out_path}};
    manifest.seed = opt.seed;
    manifest.input_digests = {{opt.result_path, io::digest_hex(raw)}};
    manifest.wall_time_seconds = now_seconds(t0);
    write_manifest(opt.out_path, manifest);
    return kExitOk;
}

struct WassersteinOptions {
    std::string result_path;
    std::string out_path;
};

int cmd_wasserstein(const WassersteinOptions& opt) {
    const io::SolveResult result = load_result(opt.result_path);
    const TransportModel model = model_from_result(result);
    const json out{{"wasserstein", result.wasserstein},
                   {"transport_cost", result.transport_cost},
                   {"recomputed_wasserstein", model.wasserstein},
                   {"recomputed_transport_cost", model.transport_cost},
                   {"solved", model.solved}};
    if (opt.out_path.empty())
        std::cout << out.dump(2) << '\n';
    else
        io::write_file_atomic(opt.out_path, out.dump(2) + "\n");
    return kExitOk;
}

struct ValidateOptions {
    std::string result_path;
    std::string checks = "gradient,hessian,dualgap,montecarlo,lp";
    std::string out_path;
    std::uint64_t n = 1000000;
    std::uint64_t seed = 0;
};

json check_gradient(const io::SolveResult& r, const SourceDensity& density) {
    const PowerDiagram diagram =
        build_power_diagram(r.sites, r.heights, density.domain(), density);
    double residual = 0.0;
    for (std::size_t i = 0; i < r.sites.size(); ++i)
        residual = std::max(residual, std::abs(r.sites[i].mass - diagram.cells[i].measure));
    const double tol = std::max(r.tolerance, 1e-7);
    const bool residual_ok = residual <= tol;

    // finite differences of the energy on the first coordinates
    const auto g = gradient(r.sites, r.heights, density);
    const std::size_t probe = std::min<std::size_t>(r.sites.size(), 16);
    double worst_fd = 0.0;
    for (std::size_t i = 0; i < probe; ++i) {
        HeightVector hp = r.heights, hm = r.heights;
        hp[i] += 1e-6;
        hm[i] -= 1e-6;
        const double fd =
            (energy(r.sites, hp, density) - energy(r.sites, hm, density)) / 2e-6;
        worst_fd = std::max(worst_fd, std::abs(fd - g[i]));
    }
    const bool fd_ok = worst_fd <= 1e-6 * std::max(1.0, std::abs(r.transport_cost));
    return json{{"pass", residual_ok && fd_ok},
                {"residual", residual},
                {"residual_tolerance", tol},
                {"fd_worst_abs_error", worst_fd}};
}

json check_hessian(const io::SolveResult& r, const SourceDensity& density) {
    Eigen::SparseMatrix<double> H;
    try {
        H = hessian(r.sites, r.heights, density);
    } catch (const NotAdmissibleError& e) {
        return json{{"pass", false}, {"message", e.what()}};
    }
    const Eigen::MatrixXd dense = H;
    const std::size_t k = r.sites.size();

    double worst_row = 0.0;
    for (Eigen::Index i = 0; i < dense.rows(); ++i)
        worst_row = std::max(worst_row, std::abs(dense.row(i).sum()));

    double max_eig = 0.0;
    if (k <= 256) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dense);
        max_eig = eig.eigenvalues().maxCoeff();
    }

    const std::size_t probe = std::min<std::size_t>(k, 16);
    double worst_fd = 0.0;
    for (std::size_t j = 0; j < probe; ++j) {
        HeightVector hp = r.heights, hm = r.heights;
        hp[j] += 1e-5;
        hm[j] -= 1e-5;
        const auto gp = gradient(r.sites, hp, density);
        const auto gm = gradient(r.sites, hm, density);
        for (std::size_t i = 0; i < k; ++i) {
            const double fd = (gp[i] - gm[i]) / 2e-5;
            worst_fd = std::max(worst_fd,
                                std::abs(dense(static_cast<Eigen::Index>(i),
                                               static_cast<Eigen::Index>(j)) -
                                         fd));
        }
    }
    const bool pass = worst_row <= 1e-12 && max_eig <= 1e-10 && worst_fd <= 1e-5;
    return json{{"pass", pass},
                {"max_row_sum", worst_row},
                {"max_eigenvalue", max_eig},
                {"fd_worst_abs_error", worst_fd}};
}

json check_dualgap(const io::SolveResult& r, const SourceDensity& density) {
    const auto& trace = r.report.heights_trace;
    if (trace.size() < 2)
        return json{{"pass", true}, {"message", "trajectory too short to test"}};
    std::vector<double> nu(r.sites.size());
    for (std::size_t i = 0; i < r.sites.size(); ++i) nu[i] = r.sites[i].mass;
    std::vector<double> gaps;
    gaps.reserve(trace.size());
    for (const auto& h : trace) {
        const double eb = energy(r.sites, h, density);
        const double ed = dual_energy(r.sites, weights_from_heights(r.sites, h), nu, density);
        gaps.push_back(ed - eb);
    }
    double mean = 0.0;
    for (double g : gaps) mean += g;
    mean /= static_cast<double>(gaps.size());
    double var = 0.0;
    for (double g : gaps) var += (g - mean) * (g - mean);
    var /= static_cast<double>(gaps.size());
    const double stddev = std::sqrt(var);
    return json{{"pass", stddev <= 1e-8 * std::abs(mean)},
                {"iterates", gaps.size()},
                {"mean", mean},
                {"stddev", stddev}};
}

json check_montecarlo(const io::SolveResult& r, std::uint64_t n, std::uint64_t seed) {
    const GenerativeModel model = genmodel_from_result(r);
    const auto report = pushforward_check(model, n, RandomSeed{seed});
    return json{{"pass", report.within_bounds},
                {"samples", n},
                {"max_deviation", report.max_deviation}};
}

json check_lp(const io::SolveResult& r, const SourceDensity& density) {
    const int resolution = 64;
    const EmpiricalMeasure grid = grid_discretize(density, resolution);
    const EmpiricalMeasure target = EmpiricalMeasure::from_sites(r.sites);
    const auto plan = lp_oracle(grid, target, 2.0);

    const auto [lo, hi] = density.domain().bounding_box();
    const double cell_diam = std::hypot((hi.x - lo.x) / resolution, (hi.y - lo.y) / resolution);
    const double mean_dist = std::sqrt(2.0 * std::max(r.transport_cost, 0.0));
    const double bound = 2.0 * cell_diam * mean_dist;
    const double gap = std::abs(plan.cost - r.transport_cost);
    return json{{"pass", gap <= bound},
                {"lp_cost", plan.cost},
                {"semidiscrete_cost", r.transport_cost},
                {"gap", gap},
                {"bound", bound}};
}

int cmd_validate(const ValidateOptions& opt) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string raw = io::read_file(opt.result_path);
    const io::SolveResult result =
        io::result_from_json(io::parse_json(raw, opt.result_path));
    const SourceDensity density = result.rebuild_density();

    std::set<std::string> wanted;
    {
        std::stringstream ss(opt.checks);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (item.empty()) continue;
            if (item != "gradient" && item != "hessian" && item != "dualgap" &&
                item != "montecarlo" && item != "lp")
                throw InvalidInputError("unknown check: " + item);
            wanted.insert(item);
        }
        if (wanted.empty()) throw InvalidInputError("no checks requested");
    }

    json report;
    bool all_pass = true;
    if (wanted.count("gradient")) report["gradient"] = check_gradient(result, density);
    if (wanted.count("hessian")) report["hessian"] = check_hessian(result, density);
    if (wanted.count("dualgap")) report["dualgap"] = check_dualgap(result, density);
    if (wanted.count("montecarlo"))
        report["montecarlo"] = check_montecarlo(result, opt.n, opt.seed);
    if (wanted.count("lp")) report["lp"] = check_lp(result, density);
    for (const auto& [name, entry] : report.items())
        all_pass = all_pass && entry.at("pass").get<bool>();
    report["overall_pass"] = all_pass;

    if (opt.out_path.empty()) {
        std::cout << report.dump(2) << '\n';
    } else {
        io::write_file_atomic(opt.out_path, report.dump(2) + "\n");
        io::RunManifest manifest;
        manifest.command = "validate";
        manifest.parameters = {{"result", opt.result_path},
                               {"checks", opt.checks},
                               {"n", opt.n},
                               {"out", opt.out_path}};
        manifest.seed = opt.seed;
        manifest.input_digests = {{opt.result_path, io::digest_hex(raw)}};
        manifest.wall_time_seconds = now_seconds(t0);
        write_manifest(opt.out_path, manifest);
    }
    return all_pass ? kExitOk : kExitCheckFailure;
}

struct RenderOptions {
    std::string result_path;
    std::string mode = "diagram";
    std::string out_path = "render.svg";
};

int cmd_render(const RenderOptions& opt) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string raw = io::read_file(opt.result_path);
    const io::SolveResult result =
        io::result_from_json(io::parse_json(raw, opt.result_path));
    io::write_file_atomic(opt.out_path, render::render_svg(result, opt.mode));

    io::RunManifest manifest;
    manifest.command = "render";
    manifest.parameters = {{"result", opt.result_path},
                           {"mode", opt.mode},
                           {"out", opt.out_path}};
    manifest.input_digests = {{opt.result_path, io::digest_hex(raw)}};
    manifest.wall_time_seconds = now_seconds(t0);
    write_manifest(opt.out_path, manifest);
    return kExitOk;
}

} // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"semi-discrete optimal transport: solve, generate, validate, render"};
    app.require_subcommand(1);

    SolveOptions solve_opt;
    auto* solve = app.add_subcommand("solve", "solve the semi-discrete transport problem");
    solve->add_option("--sites", solve_opt.sites_path, "sites JSON file")->required();
    solve->add_option("--domain", solve_opt.domain_path, "domain JSON file")->required();
    solve->add_option("--density", solve_opt.density_path, "density JSON file");
    solve->add_option("--tol", solve_opt.tol, "gradient tolerance (inf norm)");
    solve->add_option("--max-iter", solve_opt.max_iter, "Newton iteration budget");
    solve->add_option("--segments", solve_opt.segments, "disk polygonization override");
    solve->add_option("--out", solve_opt.out_path, "result file");

    GenerateOptions gen_opt;
    auto* gen = app.add_subcommand("generate", "sample the fitted generative model");
    gen->add_option("result", gen_opt.result_path, "result file from solve")->required();
    gen->add_option("--n", gen_opt.n, "number of samples")->required();
    gen->add_option("--seed", gen_opt.seed, "random seed");
    gen->add_option("--out", gen_opt.out_path, "samples CSV file");

    WassersteinOptions w_opt;
    auto* wass = app.add_subcommand("wasserstein", "report the transport distance");
    wass->add_option("result", w_opt.result_path, "result file from solve")->required();
    wass->add_option("--out", w_opt.out_path, "output JSON file (default: stdout)");

    ValidateOptions val_opt;
    auto* val = app.add_subcommand("validate", "re-run oracle checks on a result");
    val->add_option("result", val_opt.result_path, "result file from solve")->required();
    val->add_option("--checks", val_opt.checks, "comma list: gradient,hessian,dualgap,montecarlo,lp");
    val->add_option("--n", val_opt.n, "Monte Carlo sample count");
    val->add_option("--seed", val_opt.seed, "random seed");
    val->add_option("--out", val_opt.out_path, "report JSON file (default: stdout)");

    RenderOptions render_opt;
    auto* rend = app.add_subcommand("render", "emit an SVG of the diagram or potential");
    rend->add_option("result", render_opt.result_path, "result file from solve")->required();
    rend->add_option("--mode", render_opt.mode, "diagram | potential");
    rend->add_option("--out", render_opt.out_path, "SVG file");

    std::vector<const char*> argv;
    argv.push_back("sdot");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        emit_error(json{{"type", "usage"}, {"message", e.what()}}.dump());
        return kExitInputError;
    }

    try {
        if (solve->parsed()) return cmd_solve(solve_opt);
        if (gen->parsed()) return cmd_generate(gen_opt);
        if (wass->parsed()) return cmd_wasserstein(w_opt);
        if (val->parsed()) return cmd_validate(val_opt);
        if (rend->parsed()) return cmd_render(render_opt);
    } catch (const InvalidInputError& e) {
        emit_error(e.what());
        return kExitInputError;
    } catch (const InvalidStateError& e) {
        emit_error(e.what());
        return kExitInputError;
    } catch (const std::exception& e) {
        emit_error(e.what());
        return kExitInputError;
    }
    return kExitInputError;
}

} // namespace sdot::cli
