#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "travel/geometry.hpp"
#include "travel/numkernel.hpp"
#include "travel/roadgraph.hpp"

namespace travel {

struct AccidentRecord {
    double lat = 0.0;
    double lon = 0.0;
    int severity = 1;       // 1..7
    std::string timestamp;  // ISO-8601, carried through, unused by models
};

// Mean/std of one numeric column, computed over training rows only.
struct ColumnStats {
    std::string name;
    int which = 0;  // 0 = node matrix, 1 = edge matrix
    std::size_t column = 0;
    double mean = 0.0;
    double stddev = 0.0;
};

struct SplitMasks {
    std::vector<std::uint8_t> train, val, test;
};

// Everything a model consumes: encoded features, geometric edge attributes,
// labels and split masks. Row i of the node matrices is node index i.
struct Dataset {
    Matrix node_features;  // N x d_v
    Matrix edge_features;  // E x d_e (raw attributes; angular/directional kept apart)
    Matrix edge_ang;       // E x 3
    Matrix edge_dir;       // E x 2
    std::vector<std::int64_t> edge_src;  // E
    std::vector<std::int64_t> edge_dst;  // E
    std::vector<std::uint8_t> labels_occurrence;  // N, 0/1
    std::vector<std::uint8_t> labels_severity;    // N, 0..7; 0 iff occurrence 0
    SplitMasks masks;
    std::vector<std::string> node_feature_names;
    std::vector<std::string> edge_feature_names;
    std::vector<ColumnStats> stats;
    std::array<double, 3> ratios{0.6, 0.2, 0.2};
    std::uint64_t seed = 0;
    std::string angle_neighbors = "all";  // "all" | "in"

    std::size_t num_nodes() const { return labels_occurrence.size(); }
    std::size_t num_edges() const { return edge_src.size(); }
};

struct EncodedFeatures {
    Matrix node_features;
    Matrix edge_features;
    std::vector<std::string> node_feature_names;
    std::vector<std::string> edge_feature_names;
    // Numeric cells that were unparseable/absent; they read 0 after z-scoring.
    std::vector<std::pair<std::size_t, std::size_t>> node_missing_numeric;
    std::vector<std::pair<std::size_t, std::size_t>> edge_missing_numeric;
    std::vector<ColumnStats> numeric_columns;  // stats filled in later from train rows
};

// One-hot encodes categoricals (absent values get an explicit "__missing__"
// category, present only when something actually is missing) and collects
// numeric columns raw; z-scoring happens in build_dataset once the training
// mask exists. Column order: feature name, then numeric before categorical,
// then category name.
EncodedFeatures encode_features(const RoadGraph& g);

struct LabelResult {
    std::vector<std::uint8_t> occurrence;
    std::vector<std::uint8_t> severity;
};

// Maps each accident to its nearest node. Severity class is
// min(7, max(1, floor(mean_severity / 0.5) - 1)) over the node's accidents,
// 0 for accident-free nodes.
LabelResult assign_accidents(const RoadGraph& g, const std::vector<AccidentRecord>& accidents);

int severity_class(double mean_severity);

// Per-class shuffled partition at the given ratios with largest-remainder
// rounding; classes with fewer than 3 members go entirely to train.
SplitMasks stratified_split(const std::vector<std::uint8_t>& labels,
                            std::array<double, 3> ratios, std::uint64_t seed);

struct BuildOptions {
    std::array<double, 3> ratios{0.6, 0.2, 0.2};
    AngleNeighborhood angle_neighbors = AngleNeighborhood::kAllRoadNeighbors;
};

Dataset build_dataset(const RoadGraph& g, const std::vector<AccidentRecord>& accidents,
                      std::uint64_t seed, const BuildOptions& options = {});

// TAPD container (see README for the byte layout).
void save_dataset(const Dataset& d, const std::string& path);
Dataset load_dataset(const std::string& path);

// Accident CSV columns: lat,lon,severity,timestamp
std::vector<AccidentRecord> read_accidents_csv(const std::string& path);
void write_accidents_csv(const std::string& path, const std::vector<AccidentRecord>& accidents);

}  // namespace travel
