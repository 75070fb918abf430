#include "travel/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <string>

#include "travel/geometry.hpp"
#include "travel/rng.hpp"

#include "travel/errors.hpp"

namespace travel {

namespace {

constexpr double kBaseLat = 40.0;
constexpr double kBaseLon = -75.0;
constexpr double kBlockDeg = 0.001;  // roughly a 100 m block

struct RoadClass {
    const char* name;
    const char* maxspeed;
    const char* lanes;
    bool major;
};

const RoadClass kClasses[] = {
    {"residential", "25 mph", "2", false},
    {"tertiary", "30 mph", "2", false},
    {"secondary", "40 mph", "3", false},
    {"primary", "45 mph", "4", true},
    {"motorway", "65 mph", "4", true},
};

std::size_t draw_class(Rng& rng) {
    const double u = rng.uniform();
    if (u < 0.55) return 0;
    if (u < 0.80) return 1;
    if (u < 0.95) return 2;
    if (u < 0.985) return 3;
    return 4;
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

SynthResult generate(const SynthSpec& spec) {
    if (spec.grid_w < 2 || spec.grid_h < 2) throw BadSpec("grid must be at least 2x2");
    if (spec.jitter < 0.0 || spec.jitter >= 0.5)
        throw BadSpec("jitter must be in [0, 0.5) of a block");
    if (spec.diag_prob < 0.0 || spec.diag_prob > 1.0)
        throw BadSpec("diag_prob must be a probability");

    Rng rng(spec.seed);
    const int w = spec.grid_w, h = spec.grid_h;
    const int n = w * h;
    auto node_id = [&](int r, int c) { return static_cast<std::int64_t>(r) * w + c; };

    std::vector<NodeRecord> nodes(n);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            NodeRecord& rec = nodes[static_cast<std::size_t>(node_id(r, c))];
            rec.id = node_id(r, c);
            rec.lat = kBaseLat + (r + rng.uniform(-spec.jitter, spec.jitter)) * kBlockDeg;
            rec.lon = kBaseLon + (c + rng.uniform(-spec.jitter, spec.jitter)) * kBlockDeg;
            const double tag = rng.uniform();
            rec.highway = tag < 0.06 ? "traffic_signals" : (tag < 0.12 ? "crossing" : "");
        }
    }

    std::vector<EdgeRecord> edges;
    auto add_segment = [&](std::int64_t a, std::int64_t b) {
        const RoadClass& cls = kClasses[draw_class(rng)];
        EdgeRecord e;
        e.highway = cls.name;
        e.bridge = rng.bernoulli(0.02) ? "viaduct" : "";
        e.tunnel = rng.bernoulli(0.01) ? "yes" : "";
        e.access = rng.bernoulli(0.05) ? "permissive" : "";
        e.junction = rng.bernoulli(0.02) ? "circular" : "";
        e.lanes = rng.bernoulli(0.15) ? "" : cls.lanes;
        const double speed_kind = rng.uniform();
        e.maxspeed = speed_kind < 0.87 ? cls.maxspeed : (speed_kind < 0.97 ? "" : "none");
        e.oneway = false;
        const NodeRecord& na = nodes[static_cast<std::size_t>(a)];
        const NodeRecord& nb = nodes[static_cast<std::size_t>(b)];
        e.length = haversine({na.lat, na.lon}, {nb.lat, nb.lon});
        e.u = a;
        e.v = b;
        edges.push_back(e);
        std::swap(e.u, e.v);
        edges.push_back(e);
    };

    for (int r = 0; r < h; ++r)
        for (int c = 0; c + 1 < w; ++c) add_segment(node_id(r, c), node_id(r, c + 1));
    for (int r = 0; r + 1 < h; ++r)
        for (int c = 0; c < w; ++c) add_segment(node_id(r, c), node_id(r + 1, c));
    for (int r = 0; r + 1 < h; ++r) {
        for (int c = 0; c + 1 < w; ++c) {
            if (!rng.bernoulli(spec.diag_prob)) continue;
            if (rng.bernoulli(0.5))
                add_segment(node_id(r, c), node_id(r + 1, c + 1));
            else
                add_segment(node_id(r, c + 1), node_id(r + 1, c));
        }
    }

    {
        std::vector<std::set<std::int64_t>> neighbors(n);
        for (const EdgeRecord& e : edges) neighbors[static_cast<std::size_t>(e.u)].insert(e.v);
        for (int i = 0; i < n; ++i)
            nodes[i].street_count = static_cast<int>(neighbors[i].size());
    }

    SynthResult out;
    out.graph = build_graph(std::move(nodes), std::move(edges));
    const RoadGraph& g = out.graph;

    out.straightness.assign(n, std::numbers::pi);
    for (int v = 0; v < n; ++v) {
        double best = std::numbers::pi;
        for (int e : g.in_adjacency[v])
            best = std::min(best, angular_summary(angle_set(g, e)).straightness);
        out.straightness[v] = best;
    }

    std::vector<std::uint8_t> major(n, 0);
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
        const std::string& cls = g.edges[e].highway;
        if (cls == "primary" || cls == "motorway") {
            major[g.edge_src[e]] = 1;
            major[g.edge_dst[e]] = 1;
        }
    }

    out.risk_score.resize(n);
    for (int v = 0; v < n; ++v) {
        out.risk_score[v] = spec.risk.bias +
                            spec.risk.sharpness * (std::numbers::pi - out.straightness[v]) +
                            spec.risk.degree * g.nodes[v].street_count +
                            spec.risk.highway * (major[v] ? 1.0 : 0.0);
    }

    for (int v = 0; v < n; ++v) {
        const double p = logistic(out.risk_score[v]);
        if (!rng.bernoulli(p)) continue;
        const int count = 1 + (rng.bernoulli(0.45) ? 1 : 0) + (rng.bernoulli(0.25) ? 1 : 0);
        const double tilt = 2.0 * (2.0 * p - 1.0);  // higher risk, heavier severities
        double weights[4], total = 0.0;
        for (int k = 0; k < 4; ++k) {
            weights[k] = std::exp(k * tilt);
            total += weights[k];
        }
        for (int a = 0; a < count; ++a) {
            AccidentRecord acc;
            acc.lat = g.nodes[v].lat + rng.uniform(-2e-5, 2e-5);
            acc.lon = g.nodes[v].lon + rng.uniform(-2e-5, 2e-5);
            double u = rng.uniform() * total;
            int severity = 4;
            for (int k = 0; k < 4; ++k) {
                if (u < weights[k]) {
                    severity = k + 1;
                    break;
                }
                u -= weights[k];
            }
            acc.severity = severity;
            char ts[32];
            std::snprintf(ts, sizeof(ts), "2021-%02d-%02dT%02d:00:00", 1 + v % 12,
                          1 + (v / 12 + 7 * a) % 28, (5 * v + a) % 24);
            acc.timestamp = ts;
            out.accidents.push_back(std::move(acc));
        }
    }
    return out;
}

}  // namespace travel
