#include "travel/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "travel/errors.hpp"

namespace travel {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double to_radians(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace

double directed_angle(LatLon u, LatLon v, LatLon w) {
    if (u.lat == v.lat && u.lon == v.lon) throw DegeneratePoint("directed_angle: u == v");
    if (w.lat == v.lat && w.lon == v.lon) throw DegeneratePoint("directed_angle: w == v");
    // (lon, lat) as planar (x, y); angle of (v - w) minus angle of (v - u).
    const double a_uv = std::atan2(v.lat - u.lat, v.lon - u.lon);
    const double a_wv = std::atan2(v.lat - w.lat, v.lon - w.lon);
    double theta = std::fmod(a_wv - a_uv, kTwoPi);
    if (theta < 0.0) theta += kTwoPi;
    if (theta >= kTwoPi) theta = 0.0;
    return theta;
}

std::vector<double> angle_set(const RoadGraph& g, int edge_index, AngleNeighborhood mode) {
    if (edge_index < 0 || static_cast<std::size_t>(edge_index) >= g.num_edges())
        throw IndexOutOfRange("edge index " + std::to_string(edge_index) + " out of range");
    const int u = g.edge_src[edge_index];
    const int v = g.edge_dst[edge_index];

    std::vector<int> neighbors;
    for (int e : g.in_adjacency[v]) neighbors.push_back(g.edge_src[e]);
    if (mode == AngleNeighborhood::kAllRoadNeighbors)
        for (int e : g.out_adjacency[v]) neighbors.push_back(g.edge_dst[e]);
    std::sort(neighbors.begin(), neighbors.end());
    neighbors.erase(std::unique(neighbors.begin(), neighbors.end()), neighbors.end());

    const LatLon pu{g.nodes[u].lat, g.nodes[u].lon};
    const LatLon pv{g.nodes[v].lat, g.nodes[v].lon};
    std::vector<double> phi;
    if (pu.lat == pv.lat && pu.lon == pv.lon) return phi;  // zero-length edge: no turn info
    for (int w : neighbors) {
        if (w == u) continue;
        const LatLon pw{g.nodes[w].lat, g.nodes[w].lon};
        if (pw.lat == pv.lat && pw.lon == pv.lon) continue;
        phi.push_back(directed_angle(pu, pv, pw));
    }
    return phi;
}

AngularSummary angular_summary(const std::vector<double>& phi) {
    if (phi.empty()) return {std::numbers::pi, std::numbers::pi, std::numbers::pi};
    AngularSummary s{phi[0], phi[0], std::abs(std::numbers::pi - phi[0])};
    for (double a : phi) {
        if (!(a >= 0.0 && a < kTwoPi))
            throw OutOfRangeAngle("angle " + std::to_string(a) + " outside [0, 2pi)");
        s.min_angle = std::min(s.min_angle, a);
        s.max_angle = std::max(s.max_angle, a);
        s.straightness = std::min(s.straightness, std::abs(std::numbers::pi - a));
    }
    return s;
}

DirectionVector edge_direction(const NodeRecord& u, const NodeRecord& v) {
    return {v.lat - u.lat, v.lon - u.lon};
}

double haversine(LatLon p, LatLon q) {
    const double phi1 = to_radians(p.lat);
    const double phi2 = to_radians(q.lat);
    const double dphi = to_radians(q.lat - p.lat);
    const double dlambda = to_radians(q.lon - p.lon);
    const double a = std::sin(dphi / 2) * std::sin(dphi / 2) +
                     std::cos(phi1) * std::cos(phi2) * std::sin(dlambda / 2) * std::sin(dlambda / 2);
    return kEarthRadiusMeters * 2.0 * std::atan2(std::sqrt(a), std::sqrt(1.0 - a));
}

std::vector<LatLon> rotate_about(const std::vector<LatLon>& points, LatLon center, double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    std::vector<LatLon> out;
    out.reserve(points.size());
    for (const LatLon& p : points) {
        const double x = p.lon - center.lon;
        const double y = p.lat - center.lat;
        out.push_back({center.lat + s * x + c * y, center.lon + c * x - s * y});
    }
    return out;
}

NodeLocator::NodeLocator(const RoadGraph& g, double cell_degrees) : graph_(g), cell_(cell_degrees) {
    if (g.nodes.empty()) return;
    double lat_min = g.nodes[0].lat, lat_max = g.nodes[0].lat;
    double lon_min = g.nodes[0].lon, lon_max = g.nodes[0].lon;
    double abs_lat_max = 0.0;
    for (const NodeRecord& n : g.nodes) {
        lat_min = std::min(lat_min, n.lat);
        lat_max = std::max(lat_max, n.lat);
        lon_min = std::min(lon_min, n.lon);
        lon_max = std::max(lon_max, n.lon);
        abs_lat_max = std::max(abs_lat_max, std::abs(n.lat));
    }
    // The ring lower bound below is not valid across the antimeridian or at
    // the poles; such graphs fall back to the exhaustive scan.
    if (lon_max - lon_min > 180.0 || abs_lat_max > 85.0) {
        use_grid_ = false;
        return;
    }
    lat0_ = lat_min;
    lon0_ = lon_min;
    rows_ = std::max(1, static_cast<int>((lat_max - lat_min) / cell_) + 1);
    cols_ = std::max(1, static_cast<int>((lon_max - lon_min) / cell_) + 1);
    min_cos_ = std::cos(to_radians(abs_lat_max));
    cells_.assign(static_cast<std::size_t>(rows_) * cols_, {});
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        int r = std::clamp(cell_row(g.nodes[i].lat), 0, rows_ - 1);
        int c = std::clamp(cell_col(g.nodes[i].lon), 0, cols_ - 1);
        cells_[static_cast<std::size_t>(r) * cols_ + c].push_back(static_cast<int>(i));
    }
}

int NodeLocator::cell_row(double lat) const {
    return static_cast<int>(std::floor((lat - lat0_) / cell_));
}

int NodeLocator::cell_col(double lon) const {
    return static_cast<int>(std::floor((lon - lon0_) / cell_));
}

int NodeLocator::nearest_exhaustive(LatLon p) const {
    if (graph_.nodes.empty()) throw EmptyGraph();
    int best = 0;
    double best_d = haversine(p, {graph_.nodes[0].lat, graph_.nodes[0].lon});
    for (std::size_t i = 1; i < graph_.nodes.size(); ++i) {
        double d = haversine(p, {graph_.nodes[i].lat, graph_.nodes[i].lon});
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(i);
        }
    }
    return best;
}

int NodeLocator::nearest(LatLon p) const {
    if (graph_.nodes.empty()) throw EmptyGraph();
    if (!use_grid_) return nearest_exhaustive(p);
    // Raw longitude differences beyond 180 degrees wrap around the sphere,
    // which the ring bound does not model.
    const double lon_hi = lon0_ + cols_ * cell_;
    if (std::max(std::abs(p.lon - lon0_), std::abs(p.lon - lon_hi)) > 180.0)
        return nearest_exhaustive(p);

    const int ci = cell_row(p.lat);
    const int cj = cell_col(p.lon);
    const int kmax = std::max(std::max(std::abs(ci), std::abs(ci - (rows_ - 1))),
                              std::max(std::abs(cj), std::abs(cj - (cols_ - 1))));
    const double c = std::max(0.0, std::min(min_cos_, std::cos(to_radians(p.lat))));

    int best = -1;
    double best_d = 0.0;
    auto consider_cell = [&](int r, int col) {
        if (r < 0 || r >= rows_ || col < 0 || col >= cols_) return;
        for (int idx : cells_[static_cast<std::size_t>(r) * cols_ + col]) {
            double d = haversine(p, {graph_.nodes[idx].lat, graph_.nodes[idx].lon});
            if (best < 0 || d < best_d || (d == best_d && idx < best)) {
                best_d = d;
                best = idx;
            }
        }
    };

    for (int k = 0; k <= kmax; ++k) {
        if (best >= 0 && k >= 2) {
            // Any point in a ring-k cell is at least (k-1) cells away from the
            // probe along latitude or longitude; the weaker (longitude) bound
            // 2R*asin(cos(lat_max)*sin(D/2)) covers both axes.
            const double d_rad = std::min(to_radians((k - 1) * cell_), std::numbers::pi);
            const double bound = 2.0 * kEarthRadiusMeters *
                                 std::asin(std::min(1.0, c * std::sin(d_rad / 2.0)));
            if (bound > best_d) break;
        }
        if (k == 0) {
            consider_cell(ci, cj);
            continue;
        }
        for (int col = cj - k; col <= cj + k; ++col) {
            consider_cell(ci - k, col);
            consider_cell(ci + k, col);
        }
        for (int r = ci - k + 1; r <= ci + k - 1; ++r) {
            consider_cell(r, cj - k);
            consider_cell(r, cj + k);
        }
    }
    return best;
}

int nearest_node(const RoadGraph& g, LatLon p) {
    NodeLocator locator(g);
    return locator.nearest(p);
}

}  // namespace travel
