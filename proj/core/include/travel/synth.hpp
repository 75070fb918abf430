#pragma once

#include <cstdint>
#include <vector>

#include "travel/ingest.hpp"
#include "travel/roadgraph.hpp"

namespace travel {

// Logistic-risk coefficients for the planted accident process. The sharpness
// term multiplies (pi - straightness_v), so a negative coefficient makes
// crooked intersections riskier than straight-through ones.
struct RiskWeights {
    double bias = 1.1;
    double sharpness = -2.6;
    double degree = 0.9;
    double highway = 2.3;
};

struct SynthSpec {
    int grid_w = 20;  // intersections per row
    int grid_h = 20;  // intersections per column
    double jitter = 0.25;     // coordinate noise, fraction of block size, < 0.5
    double diag_prob = 0.08;  // chance of a diagonal shortcut per cell
    std::uint64_t seed = 7;
    RiskWeights risk;
};

struct SynthResult {
    RoadGraph graph;
    std::vector<AccidentRecord> accidents;
    // True per-node risk inputs, exposed so tests can fit the planted signal.
    std::vector<double> straightness;   // min over in-edges of the summary component
    std::vector<double> risk_score;     // pre-logistic score
};

// Jittered grid road network with bidirectional edges, random road classes,
// optional diagonal shortcuts, and accidents sampled from a logistic risk
// planted on turn sharpness, street count and major-road incidence.
// Deterministic for a given SynthSpec. Throws BadSpec.
SynthResult generate(const SynthSpec& spec);

}  // namespace travel
