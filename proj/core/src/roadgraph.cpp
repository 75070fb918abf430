#include "travel/roadgraph.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "travel/csv.hpp"
#include "travel/errors.hpp"

namespace travel {

RoadGraph build_graph(std::vector<NodeRecord> nodes, std::vector<EdgeRecord> edges) {
    RoadGraph g;
    g.nodes = std::move(nodes);
    g.edges = std::move(edges);

    g.id_to_index.reserve(g.nodes.size());
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const NodeRecord& n = g.nodes[i];
        if (n.lat < -90.0 || n.lat > 90.0 || n.lon < -180.0 || n.lon > 180.0)
            throw InputError("node record " + std::to_string(i) + ": coordinates out of range");
        if (n.street_count < 0)
            throw InputError("node record " + std::to_string(i) + ": negative street_count");
        auto [it, inserted] = g.id_to_index.emplace(n.id, static_cast<int>(i));
        if (!inserted) throw DuplicateNodeId(i, n.id);
    }

    g.edge_src.resize(g.edges.size());
    g.edge_dst.resize(g.edges.size());
    g.in_adjacency.assign(g.nodes.size(), {});
    g.out_adjacency.assign(g.nodes.size(), {});
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
        const EdgeRecord& rec = g.edges[e];
        auto su = g.id_to_index.find(rec.u);
        if (su == g.id_to_index.end()) throw UnknownEndpoint(e, rec.u);
        auto sv = g.id_to_index.find(rec.v);
        if (sv == g.id_to_index.end()) throw UnknownEndpoint(e, rec.v);
        if (su->second == sv->second) throw SelfLoop(e);
        if (rec.length < 0.0)
            throw InputError("edge record " + std::to_string(e) + ": negative length");
        g.edge_src[e] = su->second;
        g.edge_dst[e] = sv->second;
        g.out_adjacency[su->second].push_back(static_cast<int>(e));
        g.in_adjacency[sv->second].push_back(static_cast<int>(e));
    }
    return g;
}

std::vector<std::pair<int, int>> in_neighbors(const RoadGraph& g, int v) {
    if (v < 0 || static_cast<std::size_t>(v) >= g.num_nodes())
        throw IndexOutOfRange("node index " + std::to_string(v) + " out of range");
    std::vector<std::pair<int, int>> result;
    result.reserve(g.in_adjacency[v].size());
    for (int e : g.in_adjacency[v]) result.emplace_back(g.edge_src[e], e);
    return result;
}

namespace {

std::string where(const std::string& path, std::size_t row) {
    // +2: header row plus 1-based numbering.
    return path + ":" + std::to_string(row + 2);
}

std::int64_t parse_i64(const std::string& s, const std::string& ctx) {
    std::int64_t out = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw InputError(ctx + ": bad integer '" + s + "'");
    return out;
}

double parse_f64(const std::string& s, const std::string& ctx) {
    double out = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw InputError(ctx + ": bad number '" + s + "'");
    return out;
}

bool parse_bool(const std::string& raw, const std::string& ctx) {
    if (raw.empty()) return false;
    std::string s;
    for (char c : raw) s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (s == "1" || s == "true" || s == "yes") return true;
    if (s == "0" || s == "false" || s == "no") return false;
    throw InputError(ctx + ": bad boolean '" + raw + "'");
}

}  // namespace

std::vector<NodeRecord> read_nodes_csv(const std::string& path) {
    csv::Table t = csv::read_file(path);
    const std::size_t c_id = t.column("id"), c_lat = t.column("lat"), c_lon = t.column("lon");
    const std::size_t c_hwy = t.column("highway"), c_sc = t.column("street_count");
    std::vector<NodeRecord> out;
    out.reserve(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        NodeRecord n;
        n.id = parse_i64(r[c_id], where(path, i));
        n.lat = parse_f64(r[c_lat], where(path, i));
        n.lon = parse_f64(r[c_lon], where(path, i));
        n.highway = r[c_hwy];
        n.street_count = static_cast<int>(
            r[c_sc].empty() ? 0 : parse_i64(r[c_sc], where(path, i)));
        out.push_back(std::move(n));
    }
    return out;
}

std::vector<EdgeRecord> read_edges_csv(const std::string& path) {
    csv::Table t = csv::read_file(path);
    const std::size_t c_u = t.column("u"), c_v = t.column("v"), c_hwy = t.column("highway");
    const std::size_t c_len = t.column("length"), c_bridge = t.column("bridge");
    const std::size_t c_lanes = t.column("lanes"), c_oneway = t.column("oneway");
    const std::size_t c_speed = t.column("maxspeed"), c_access = t.column("access");
    const std::size_t c_tunnel = t.column("tunnel"), c_junction = t.column("junction");
    std::vector<EdgeRecord> out;
    out.reserve(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        EdgeRecord e;
        e.u = parse_i64(r[c_u], where(path, i));
        e.v = parse_i64(r[c_v], where(path, i));
        e.highway = r[c_hwy];
        e.length = r[c_len].empty() ? 0.0 : parse_f64(r[c_len], where(path, i));
        e.bridge = r[c_bridge];
        e.lanes = r[c_lanes];
        e.oneway = parse_bool(r[c_oneway], where(path, i));
        e.maxspeed = r[c_speed];
        e.access = r[c_access];
        e.tunnel = r[c_tunnel];
        e.junction = r[c_junction];
        out.push_back(std::move(e));
    }
    return out;
}

void write_nodes_csv(const std::string& path, const std::vector<NodeRecord>& nodes) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(nodes.size());
    for (const NodeRecord& n : nodes)
        rows.push_back({std::to_string(n.id), csv::format_double(n.lat), csv::format_double(n.lon),
                        n.highway, std::to_string(n.street_count)});
    csv::write_file(path, {"id", "lat", "lon", "highway", "street_count"}, rows);
}

void write_edges_csv(const std::string& path, const std::vector<EdgeRecord>& edges) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(edges.size());
    for (const EdgeRecord& e : edges)
        rows.push_back({std::to_string(e.u), std::to_string(e.v), e.highway,
                        csv::format_double(e.length), e.bridge, e.lanes,
                        e.oneway ? "true" : "false", e.maxspeed, e.access, e.tunnel, e.junction});
    csv::write_file(path,
                    {"u", "v", "highway", "length", "bridge", "lanes", "oneway", "maxspeed",
                     "access", "tunnel", "junction"},
                    rows);
}

RoadGraph load_graph_csv(const std::string& node_path, const std::string& edge_path) {
    return build_graph(read_nodes_csv(node_path), read_edges_csv(edge_path));
}

}  // namespace travel
