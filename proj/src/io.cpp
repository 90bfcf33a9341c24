#include "sdot/io.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sdot/errors.hpp"

namespace sdot::io {

SourceDensity SolveResult::rebuild_density() const {
    return parse_density(density_spec, domain);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInputError("cannot open file: " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_file_atomic(const std::string& path, const std::string& contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InvalidInputError("cannot write file: " + tmp);
        out << contents;
        if (!out.good()) throw InvalidInputError("short write: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw InvalidInputError("cannot rename into place: " + path);
}

std::string digest_hex(const std::string& contents) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : contents) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json parse_json(const std::string& contents, const std::string& name) {
    try {
        return json::parse(contents);
    } catch (const json::parse_error& e) {
        json err{{"type", "parse"}, {"file", name}, {"byte", e.byte}, {"message", e.what()}};
        throw InvalidInputError(err.dump());
    }
}

json parse_json_file(const std::string& path) {
    return parse_json(read_file(path), path);
}

namespace {

Vec2 parse_point(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        json err{{"type", "parse"}, {"field", what}, {"message", "expected [x, y]"}};
        throw InvalidInputError(err.dump());
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

[[noreturn]] void field_error(const std::string& field, const std::string& message) {
    json err{{"type", "parse"}, {"field", field}, {"message", message}};
    throw InvalidInputError(err.dump());
}

} // namespace

void parse_sites(const json& j, std::vector<Site>& sites,
                 std::optional<std::vector<std::vector<double>>>& decoder) {
    if (!j.contains("points") || !j["points"].is_array() || j["points"].empty())
        field_error("points", "sites file needs a nonempty \"points\" array");
    const auto& pts = j["points"];
    const std::size_t n = pts.size();

    std::vector<double> masses;
    if (j.contains("masses")) {
        if (!j["masses"].is_array() || j["masses"].size() != n)
            field_error("masses", "\"masses\" must match \"points\" in length");
        masses = j["masses"].get<std::vector<double>>();
    } else {
        masses.assign(n, 1.0 / static_cast<double>(n));
    }

    sites.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        sites[i].position = parse_point(pts[i], "points");
        sites[i].mass = masses[i];
    }

    decoder.reset();
    if (j.contains("decoder") && !j["decoder"].is_null()) {
        if (!j["decoder"].is_array() || j["decoder"].size() != n)
            field_error("decoder", "\"decoder\" must cover every point index");
        std::vector<std::vector<double>> table(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (!j["decoder"][i].is_array() || j["decoder"][i].empty())
                field_error("decoder", "decoder rows must be coordinate arrays");
            table[i] = j["decoder"][i].get<std::vector<double>>();
        }
        decoder = std::move(table);
    }
}

ConvexPolygon parse_domain(const json& j, int segments_override) {
    if (j.contains("polygon")) {
        const auto& arr = j["polygon"];
        if (!arr.is_array() || arr.size() < 3)
            field_error("polygon", "\"polygon\" needs at least 3 vertices");
        std::vector<Vec2> v;
        v.reserve(arr.size());
        for (const auto& p : arr) v.push_back(parse_point(p, "polygon"));
        ConvexPolygon poly(std::move(v));
        poly.validate();
        return poly;
    }
    if (j.contains("square")) {
        const auto& s = j["square"];
        if (!s.is_array() || s.size() != 4)
            field_error("square", "\"square\" must be [xmin, ymin, xmax, ymax]");
        const double xmin = s[0].get<double>(), ymin = s[1].get<double>();
        const double xmax = s[2].get<double>(), ymax = s[3].get<double>();
        if (!(xmin < xmax) || !(ymin < ymax))
            field_error("square", "square bounds must satisfy min < max");
        return make_rectangle(xmin, ymin, xmax, ymax);
    }
    if (j.contains("disk")) {
        const auto& d = j["disk"];
        if (!d.contains("center") || !d.contains("radius"))
            field_error("disk", "\"disk\" needs \"center\" and \"radius\"");
        const Vec2 center = parse_point(d["center"], "disk.center");
        const double radius = d["radius"].get<double>();
        int segments = d.value("segments", 256);
        if (segments_override > 0) segments = segments_override;
        if (segments < 3) field_error("disk.segments", "need at least 3 segments");
        return make_regular_polygon(center, radius, segments);
    }
    field_error("domain", "expected one of \"polygon\", \"square\", \"disk\"");
}

SourceDensity parse_density(const json& j, const ConvexPolygon& domain) {
    if (j.is_null() || j.empty()) return SourceDensity::uniform(domain, 1.0);
    if (j.contains("uniform")) {
        const double total = j["uniform"].value("total_mass", 1.0);
        return SourceDensity::uniform(domain, total);
    }
    if (j.contains("piecewise")) {
        const auto& p = j["piecewise"];
        if (!p.contains("triangles") || !p.contains("values"))
            field_error("piecewise", "needs \"triangles\" and \"values\"");
        const auto& tris = p["triangles"];
        const auto values = p["values"].get<std::vector<double>>();
        if (!tris.is_array() || tris.size() != values.size())
            field_error("piecewise", "\"triangles\" and \"values\" lengths differ");
        std::vector<DensityTriangle> pieces(tris.size());
        for (std::size_t t = 0; t < pieces.size(); ++t) {
            if (!tris[t].is_array() || tris[t].size() != 3)
                field_error("piecewise.triangles", "each triangle is [[x,y],[x,y],[x,y]]");
            pieces[t].a = parse_point(tris[t][0], "piecewise.triangles");
            pieces[t].b = parse_point(tris[t][1], "piecewise.triangles");
            pieces[t].c = parse_point(tris[t][2], "piecewise.triangles");
            pieces[t].value = values[t];
        }
        return SourceDensity::piecewise(domain, std::move(pieces));
    }
    field_error("density", "expected \"uniform\" or \"piecewise\"");
}

namespace {

json points_to_json(const std::vector<Vec2>& pts) {
    json arr = json::array();
    for (Vec2 p : pts) arr.push_back({p.x, p.y});
    return arr;
}

std::vector<Vec2> points_from_json(const json& arr) {
    std::vector<Vec2> pts;
    pts.reserve(arr.size());
    for (const auto& p : arr) pts.push_back({p[0].get<double>(), p[1].get<double>()});
    return pts;
}

} // namespace

json result_to_json(const SolveResult& r) {
    json j;
    {
        json sites;
        json pts = json::array(), masses = json::array();
        for (const Site& s : r.sites) {
            pts.push_back({s.position.x, s.position.y});
            masses.push_back(s.mass);
        }
        sites["points"] = std::move(pts);
        sites["masses"] = std::move(masses);
        j["sites"] = std::move(sites);
    }
    if (r.decoder) j["decoder"] = *r.decoder;
    j["domain"] = {{"polygon", points_to_json(r.domain.vertices)}};
    j["density"] = r.density_spec.is_null() ? json{{"uniform", {{"total_mass", 1.0}}}}
                                            : r.density_spec;
    j["heights"] = r.heights;
    j["weights"] = r.weights;

    json cells = json::array();
    for (const PowerCell& c : r.diagram.cells) {
        json cell{{"site_index", c.site_index}, {"measure", c.measure}};
        cell["vertices"] = c.polygon ? points_to_json(c.polygon->vertices) : json();
        cells.push_back(std::move(cell));
    }
    j["cells"] = std::move(cells);

    json edges = json::array();
    for (const DualEdge& e : r.diagram.dual_edges)
        edges.push_back({e.i, e.j, e.face_measure, e.site_distance});
    j["dual_edges"] = std::move(edges);

    j["report"] = {{"iterations", r.report.iterations},
                   {"newton_iterations", r.report.newton_iterations},
                   {"fallback_iterations", r.report.fallback_iterations},
                   {"converged", r.report.converged},
                   {"gradient_inf_norms", r.report.gradient_inf_norms},
                   {"energies", r.report.energies},
                   {"step_sizes", r.report.step_sizes},
                   {"heights_trace", r.report.heights_trace}};

    j["wasserstein"] = r.wasserstein;
    j["transport_cost"] = r.transport_cost;
    j["tolerance"] = r.tolerance;
    j["solved"] = r.solved;
    j["tool_version"] = kToolVersion;
    return j;
}

SolveResult result_from_json(const json& j) {
    SolveResult r;
    try {
        const auto& sj = j.at("sites");
        const auto pts = points_from_json(sj.at("points"));
        const auto masses = sj.at("masses").get<std::vector<double>>();
        r.sites.resize(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) r.sites[i] = {pts[i], masses[i]};
        if (j.contains("decoder") && !j["decoder"].is_null())
            r.decoder = j["decoder"].get<std::vector<std::vector<double>>>();

        r.domain = ConvexPolygon(points_from_json(j.at("domain").at("polygon")));
        r.density_spec = j.at("density");
        r.heights = j.at("heights").get<HeightVector>();
        r.weights = j.at("weights").get<std::vector<double>>();

        for (const auto& cj : j.at("cells")) {
            PowerCell cell;
            cell.site_index = cj.at("site_index").get<int>();
            cell.measure = cj.at("measure").get<double>();
            if (!cj.at("vertices").is_null())
                cell.polygon = ConvexPolygon(points_from_json(cj.at("vertices")));
            r.diagram.cells.push_back(std::move(cell));
        }
        for (const auto& ej : j.at("dual_edges"))
            r.diagram.dual_edges.push_back(
                {ej[0].get<int>(), ej[1].get<int>(), ej[2].get<double>(), ej[3].get<double>()});

        const auto& rj = j.at("report");
        r.report.iterations = rj.at("iterations").get<int>();
        r.report.newton_iterations = rj.at("newton_iterations").get<int>();
        r.report.fallback_iterations = rj.at("fallback_iterations").get<int>();
        r.report.converged = rj.at("converged").get<bool>();
        r.report.gradient_inf_norms = rj.at("gradient_inf_norms").get<std::vector<double>>();
        r.report.energies = rj.at("energies").get<std::vector<double>>();
        r.report.step_sizes = rj.at("step_sizes").get<std::vector<double>>();
        r.report.heights_trace = rj.at("heights_trace").get<std::vector<HeightVector>>();

        r.wasserstein = j.at("wasserstein").get<double>();
        r.transport_cost = j.at("transport_cost").get<double>();
        r.tolerance = j.at("tolerance").get<double>();
        r.solved = j.at("solved").get<bool>();
    } catch (const json::exception& e) {
        json err{{"type", "parse"}, {"field", "result"}, {"message", e.what()}};
        throw InvalidInputError(err.dump());
    }
    return r;
}

json manifest_to_json(const RunManifest& m) {
    return json{{"command", m.command},
                {"parameters", m.parameters},
                {"seed", m.seed},
                {"input_digests", m.input_digests},
                {"tool_version", kToolVersion},
                {"wall_time_seconds", m.wall_time_seconds}};
}

} // namespace sdot::io
