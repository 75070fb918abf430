#pragma once

#include <vector>

#include "travel/roadgraph.hpp"

namespace travel {

inline constexpr double kEarthRadiusMeters = 6371000.0;

struct LatLon {
    double lat = 0.0;
    double lon = 0.0;
};

// Turn-geometry summary of one edge at its target intersection: the sharpest
// angle one way, the sharpest the other way, and how close the closest
// continuation is to a straight line. All radians; angles live in [0, 2pi),
// straightness in [0, pi]. Dead ends get the neutral sentinel (pi, pi, pi).
struct AngularSummary {
    double min_angle = 0.0;
    double max_angle = 0.0;
    double straightness = 0.0;
};

struct DirectionVector {
    double dlat = 0.0;  // lat_v - lat_u, degrees
    double dlon = 0.0;  // lon_v - lon_u, degrees
};

// Which nodes count as "the other roads at v" when collecting turn angles.
enum class AngleNeighborhood {
    kAllRoadNeighbors,  // sources of in-edges and targets of out-edges
    kInNeighborsOnly,   // sources of in-edges only
};

// Counterclockwise rotation in [0, 2pi) taking direction (v - u) onto
// direction (v - w). (lon, lat) is treated as planar (x, y).
// Throws DegeneratePoint when u == v or w == v.
double directed_angle(LatLon u, LatLon v, LatLon w);

// The set of directed angles between edge (u, v) and every other road meeting
// at v. Neighbors coinciding with v (zero-length segments) are skipped, and a
// spatially degenerate edge yields the empty set.
std::vector<double> angle_set(const RoadGraph& g, int edge_index,
                              AngleNeighborhood mode = AngleNeighborhood::kAllRoadNeighbors);

// (min, max, min |pi - phi|); the sentinel (pi, pi, pi) for an empty set.
// Throws OutOfRangeAngle if an element is outside [0, 2pi).
AngularSummary angular_summary(const std::vector<double>& phi);

DirectionVector edge_direction(const NodeRecord& u, const NodeRecord& v);

// Great-circle distance in meters.
double haversine(LatLon p, LatLon q);

// Test helper: planar rotation of (lon, lat) points about a center.
std::vector<LatLon> rotate_about(const std::vector<LatLon>& points, LatLon center, double theta);

// Grid-bucketed nearest-node index. Exact: results agree with an exhaustive
// haversine scan, ties broken by smallest node index.
class NodeLocator {
public:
    explicit NodeLocator(const RoadGraph& g, double cell_degrees = 0.01);

    int nearest(LatLon p) const;

    // Reference implementation used as the correctness oracle.
    int nearest_exhaustive(LatLon p) const;

private:
    int cell_row(double lat) const;
    int cell_col(double lon) const;

    const RoadGraph& graph_;
    double cell_;
    double lat0_ = 0.0, lon0_ = 0.0;
    int rows_ = 0, cols_ = 0;
    double min_cos_ = 1.0;  // cos of the largest |lat| in the graph
    bool use_grid_ = true;
    std::vector<std::vector<int>> cells_;
};

// One-shot convenience over NodeLocator. Throws EmptyGraph.
int nearest_node(const RoadGraph& g, LatLon p);

}  // namespace travel
