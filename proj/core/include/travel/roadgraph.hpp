#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace travel {

// One intersection or dead-end. Empty strings mean "attribute absent", which
// mirrors how OSM exports carry optional tags through CSV.
struct NodeRecord {
    std::int64_t id = 0;
    double lat = 0.0;
    double lon = 0.0;
    std::string highway;  // categorical, "" = absent
    int street_count = 0;
};

// One directed road segment. Two-way roads arrive as two records; the engine
// never synthesizes reverse edges.
struct EdgeRecord {
    std::int64_t u = 0;  // external source node id
    std::int64_t v = 0;  // external target node id
    std::string highway;
    double length = 0.0;  // meters
    std::string bridge;
    std::string lanes;
    bool oneway = false;
    std::string maxspeed;
    std::string access;
    std::string tunnel;
    std::string junction;
};

// Directed multigraph over dense 0-based node indices. Immutable after
// build_graph; adjacency lists hold edge indices in insertion order.
struct RoadGraph {
    std::vector<NodeRecord> nodes;
    std::vector<EdgeRecord> edges;
    std::vector<int> edge_src;  // dense node index per edge
    std::vector<int> edge_dst;
    std::vector<std::vector<int>> in_adjacency;
    std::vector<std::vector<int>> out_adjacency;
    std::unordered_map<std::int64_t, int> id_to_index;

    std::size_t num_nodes() const { return nodes.size(); }
    std::size_t num_edges() const { return edges.size(); }
};

// Validates records and builds adjacency. Node order is preserved, so node
// index i corresponds to the i-th input record.
// Throws DuplicateNodeId, UnknownEndpoint, SelfLoop (each carries the
// offending record index) and InputError for out-of-range coordinates.
RoadGraph build_graph(std::vector<NodeRecord> nodes, std::vector<EdgeRecord> edges);

// Incoming edges of v as (source node index, edge index), in edge insertion
// order. Throws IndexOutOfRange.
std::vector<std::pair<int, int>> in_neighbors(const RoadGraph& g, int v);

// CSV surface. Columns:
//   nodes: id,lat,lon,highway,street_count
//   edges: u,v,highway,length,bridge,lanes,oneway,maxspeed,access,tunnel,junction
std::vector<NodeRecord> read_nodes_csv(const std::string& path);
std::vector<EdgeRecord> read_edges_csv(const std::string& path);
void write_nodes_csv(const std::string& path, const std::vector<NodeRecord>& nodes);
void write_edges_csv(const std::string& path, const std::vector<EdgeRecord>& edges);

RoadGraph load_graph_csv(const std::string& node_path, const std::string& edge_path);

}  // namespace travel
