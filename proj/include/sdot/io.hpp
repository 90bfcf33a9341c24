#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdot/geometry.hpp"
#include "sdot/measure.hpp"
#include "sdot/solver.hpp"

namespace sdot::io {

using json = nlohmann::json;

inline constexpr const char* kToolVersion = "sdot 0.1.0";

/// Everything a solve emits; the on-disk result file round-trips this struct
/// field by field.
struct SolveResult {
    std::vector<Site> sites;
    std::optional<std::vector<std::vector<double>>> decoder;
    ConvexPolygon domain;
    json density_spec; // echo of the density description
    HeightVector heights;
    std::vector<double> weights; // psi
    PowerDiagram diagram;
    SolverReport report;
    double wasserstein = 0.0;
    double transport_cost = 0.0;
    double tolerance = 0.0;
    bool solved = false;

    SourceDensity rebuild_density() const;
};

// ---- file primitives ----

/// Reads a whole file; throws InvalidInputError with the path on failure.
std::string read_file(const std::string& path);

/// Writes via a temp file in the same directory plus rename.
void write_file_atomic(const std::string& path, const std::string& contents);

/// FNV-1a 64-bit content digest, hex-encoded.
std::string digest_hex(const std::string& contents);

/// Parse with a machine-readable error: throws InvalidInputError whose
/// message is a JSON object {"type":"parse","file":...,"byte":...}.
json parse_json_file(const std::string& path);

/// Same, over an in-memory string; `name` labels the error object.
json parse_json(const std::string& contents, const std::string& name);

// ---- format parsers ----

/// {"points": [[x,y],...], "masses": [...], "decoder": [[...],...]}
/// masses default to total/n when omitted (total taken as 1).
void parse_sites(const json& j, std::vector<Site>& sites,
                 std::optional<std::vector<std::vector<double>>>& decoder);

/// {"polygon": [[x,y],...]} | {"square": [xmin,ymin,xmax,ymax]} |
/// {"disk": {"center":[x,y],"radius":r,"segments":n}}
/// `segments_override` > 0 replaces the disk's segment count.
ConvexPolygon parse_domain(const json& j, int segments_override = 0);

/// {"uniform": {"total_mass": m}} | {"piecewise": {"triangles": [...],
/// "values": [...]}}. Null/missing means uniform with total mass 1.
SourceDensity parse_density(const json& j, const ConvexPolygon& domain);

// ---- result serialization ----

json result_to_json(const SolveResult& result);
SolveResult result_from_json(const json& j);

// ---- run manifest ----

struct RunManifest {
    std::string command;
    json parameters;
    std::uint64_t seed = 0;
    json input_digests; // file path -> digest
    double wall_time_seconds = 0.0;
};

json manifest_to_json(const RunManifest& manifest);

} // namespace sdot::io
