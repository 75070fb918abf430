#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>

#include "doctest.h"

#include "travel/errors.hpp"
#include "travel/ingest.hpp"
#include "travel/rng.hpp"
#include "travel/synth.hpp"

using namespace travel;

namespace {

NodeRecord node_at(std::int64_t id, double lat, double lon) {
    NodeRecord n;
    n.id = id;
    n.lat = lat;
    n.lon = lon;
    return n;
}

EdgeRecord edge_of(std::int64_t u, std::int64_t v) {
    EdgeRecord e;
    e.u = u;
    e.v = v;
    return e;
}

std::size_t column_index(const std::vector<std::string>& names, const std::string& name) {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return i;
    FAIL("column not found: ", name);
    return 0;
}

bool dataset_equal(const Dataset& a, const Dataset& b) {
    return a.node_features.data() == b.node_features.data() &&
           a.edge_features.data() == b.edge_features.data() &&
           a.edge_ang.data() == b.edge_ang.data() && a.edge_dir.data() == b.edge_dir.data() &&
           a.edge_src == b.edge_src && a.edge_dst == b.edge_dst &&
           a.labels_occurrence == b.labels_occurrence &&
           a.labels_severity == b.labels_severity && a.masks.train == b.masks.train &&
           a.masks.val == b.masks.val && a.masks.test == b.masks.test &&
           a.node_feature_names == b.node_feature_names &&
           a.edge_feature_names == b.edge_feature_names && a.seed == b.seed;
}

}  // namespace

TEST_CASE("encode_features one-hot encodes with an explicit missing category") {
    std::vector<EdgeRecord> edges{edge_of(0, 1), edge_of(1, 2), edge_of(2, 0)};
    edges[0].highway = "residential";
    edges[1].highway = "motorway";
    edges[2].highway = "";  // absent
    RoadGraph g = build_graph({node_at(0, 0, 0), node_at(1, 0, 1), node_at(2, 1, 1)}, edges);
    EncodedFeatures enc = encode_features(g);

    const std::size_t c_missing = column_index(enc.edge_feature_names, "highway=__missing__");
    const std::size_t c_motorway = column_index(enc.edge_feature_names, "highway=motorway");
    const std::size_t c_res = column_index(enc.edge_feature_names, "highway=residential");
    CHECK(enc.edge_features(0, c_res) == 1.0);
    CHECK(enc.edge_features(1, c_motorway) == 1.0);
    CHECK(enc.edge_features(2, c_missing) == 1.0);
    // exactly three highway columns
    std::size_t highway_cols = 0;
    for (const auto& n : enc.edge_feature_names)
        if (n.rfind("highway=", 0) == 0) ++highway_cols;
    CHECK(highway_cols == 3);
}

TEST_CASE("encode_features oneway block partitions every row") {
    std::vector<EdgeRecord> edges{edge_of(0, 1), edge_of(1, 0)};
    edges[0].oneway = true;
    edges[1].oneway = false;
    RoadGraph g = build_graph({node_at(0, 0, 0), node_at(1, 0, 1)}, edges);
    EncodedFeatures enc = encode_features(g);
    const std::size_t c_true = column_index(enc.edge_feature_names, "oneway=true");
    const std::size_t c_false = column_index(enc.edge_feature_names, "oneway=false");
    for (std::size_t r = 0; r < 2; ++r)
        CHECK(enc.edge_features(r, c_true) + enc.edge_features(r, c_false) == 1.0);
    std::size_t oneway_cols = 0;
    for (const auto& n : enc.edge_feature_names)
        if (n.rfind("oneway=", 0) == 0) ++oneway_cols;
    CHECK(oneway_cols == 2);
}

TEST_CASE("one-hot blocks always sum to one per row on synthetic data") {
    SynthSpec spec;
    spec.grid_w = 8;
    spec.grid_h = 8;
    SynthResult s = generate(spec);
    EncodedFeatures enc = encode_features(s.graph);

    auto check_blocks = [](const Matrix& m, const std::vector<std::string>& names) {
        std::map<std::string, std::vector<std::size_t>> blocks;
        for (std::size_t c = 0; c < names.size(); ++c) {
            const auto eq = names[c].find('=');
            if (eq != std::string::npos) blocks[names[c].substr(0, eq)].push_back(c);
        }
        for (const auto& [feature, cols] : blocks) {
            for (std::size_t r = 0; r < m.rows(); ++r) {
                double sum = 0.0;
                for (std::size_t c : cols) sum += m(r, c);
                CHECK(sum == 1.0);
            }
        }
    };
    check_blocks(enc.node_features, enc.node_feature_names);
    check_blocks(enc.edge_features, enc.edge_feature_names);
}

TEST_CASE("z-scoring uses training-row statistics") {
    // both nodes land in train (classes smaller than 3 members go to train),
    // so all three parallel edges are training edges
    std::vector<EdgeRecord> edges{edge_of(0, 1), edge_of(0, 1), edge_of(0, 1)};
    edges[0].length = 100.0;
    edges[1].length = 200.0;
    edges[2].length = 300.0;
    RoadGraph g = build_graph({node_at(0, 0, 0), node_at(1, 0, 1)}, edges);
    Dataset ds = build_dataset(g, {}, 1);
    const std::size_t c_len = column_index(ds.edge_feature_names, "length");
    CHECK(ds.edge_features(0, c_len) == doctest::Approx(-1.224744871391589).epsilon(1e-6));
    CHECK(ds.edge_features(1, c_len) == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(ds.edge_features(2, c_len) == doctest::Approx(1.224744871391589).epsilon(1e-6));

    bool found = false;
    for (const ColumnStats& s : ds.stats) {
        if (s.which == 1 && s.column == c_len) {
            CHECK(s.mean == doctest::Approx(200.0));
            CHECK(s.stddev == doctest::Approx(81.64965809277261));
            found = true;
        }
    }
    CHECK(found);
}

TEST_CASE("unparseable numeric tags fall into the parallel missing category") {
    std::vector<EdgeRecord> edges{edge_of(0, 1), edge_of(1, 0), edge_of(0, 1)};
    edges[0].maxspeed = "30 mph";
    edges[1].maxspeed = "none";  // unparseable
    edges[2].maxspeed = "";      // absent
    RoadGraph g = build_graph({node_at(0, 0, 0), node_at(1, 0, 1)}, edges);
    EncodedFeatures enc = encode_features(g);
    const std::size_t c_num = column_index(enc.edge_feature_names, "maxspeed");
    const std::size_t c_have = column_index(enc.edge_feature_names, "maxspeed=__num__");
    const std::size_t c_missing = column_index(enc.edge_feature_names, "maxspeed=__missing__");
    CHECK(enc.edge_features(0, c_num) == 30.0);
    CHECK(enc.edge_features(0, c_have) == 1.0);
    CHECK(enc.edge_features(1, c_missing) == 1.0);
    CHECK(enc.edge_features(2, c_missing) == 1.0);
    // the missing numeric cells read 0 after build_dataset z-scoring
    Dataset ds = build_dataset(g, {}, 1);
    CHECK(ds.edge_features(1, c_num) == 0.0);
    CHECK(ds.edge_features(2, c_num) == 0.0);
}

TEST_CASE("severity bucketization fixtures") {
    CHECK(severity_class(1.0) == 1);
    CHECK(severity_class(1.5) == 2);
    CHECK(severity_class(2.0) == 3);
    CHECK(severity_class(2.5) == 4);
    CHECK(severity_class(3.0) == 5);
    CHECK(severity_class(3.5) == 6);
    CHECK(severity_class(4.0) == 7);
    CHECK(severity_class(7.0) == 7);  // clamped
    CHECK(severity_class(1.2) == 1);
}

TEST_CASE("assign_accidents fixtures") {
    RoadGraph g = build_graph({node_at(0, 40.0, -75.0), node_at(1, 40.01, -75.0)},
                              {edge_of(0, 1)});
    SUBCASE("no accidents") {
        LabelResult labels = assign_accidents(g, {});
        CHECK(labels.occurrence == std::vector<std::uint8_t>{0, 0});
        CHECK(labels.severity == std::vector<std::uint8_t>{0, 0});
    }
    SUBCASE("mean severity 2.5 maps to class 4") {
        std::vector<AccidentRecord> accidents(2);
        accidents[0] = {40.0, -75.0, 2, "t"};
        accidents[1] = {40.0001, -75.0, 3, "t"};
        LabelResult labels = assign_accidents(g, accidents);
        CHECK(labels.occurrence == std::vector<std::uint8_t>{1, 0});
        CHECK(labels.severity[0] == 4);
    }
    SUBCASE("endpoint severities") {
        LabelResult low = assign_accidents(g, {{40.01, -75.0, 1, "t"}});
        CHECK(low.severity[1] == 1);
        LabelResult high = assign_accidents(g, {{40.01, -75.0, 7, "t"}});
        CHECK(high.severity[1] == 7);
    }
    SUBCASE("empty graph") {
        RoadGraph empty = build_graph({}, {});
        CHECK_THROWS_AS(assign_accidents(empty, {}), EmptyGraph);
    }
}

TEST_CASE("assign_accidents matches a per-accident exhaustive scan") {
    Rng rng(77);
    std::vector<NodeRecord> nodes;
    for (int i = 0; i < 60; ++i)
        nodes.push_back(node_at(i, 40.0 + rng.uniform() * 0.05, -75.0 + rng.uniform() * 0.05));
    RoadGraph g = build_graph(nodes, {});
    std::vector<AccidentRecord> accidents;
    for (int i = 0; i < 300; ++i)
        accidents.push_back({40.0 + rng.uniform() * 0.05, -75.0 + rng.uniform() * 0.05,
                             1 + static_cast<int>(rng.below(7)), "t"});

    LabelResult got = assign_accidents(g, accidents);

    std::vector<int> counts(nodes.size(), 0);
    std::vector<double> sums(nodes.size(), 0.0);
    for (const AccidentRecord& a : accidents) {
        int best = 0;
        double best_d = haversine({a.lat, a.lon}, {nodes[0].lat, nodes[0].lon});
        for (std::size_t k = 1; k < nodes.size(); ++k) {
            const double d = haversine({a.lat, a.lon}, {nodes[k].lat, nodes[k].lon});
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(k);
            }
        }
        counts[best] += 1;
        sums[best] += a.severity;
    }
    for (std::size_t v = 0; v < nodes.size(); ++v) {
        CHECK(got.occurrence[v] == (counts[v] > 0 ? 1 : 0));
        CHECK(got.severity[v] ==
              (counts[v] > 0 ? severity_class(sums[v] / counts[v]) : 0));
    }
}

TEST_CASE("stratified_split fixtures") {
    SUBCASE("balanced ten nodes") {
        std::vector<std::uint8_t> labels{1, 1, 1, 1, 1, 0, 0, 0, 0, 0};
        SplitMasks masks = stratified_split(labels, {0.6, 0.2, 0.2}, 9);
        int train_pos = 0, train_neg = 0, val_pos = 0, val_neg = 0, test_pos = 0, test_neg = 0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (masks.train[i]) (labels[i] ? train_pos : train_neg) += 1;
            if (masks.val[i]) (labels[i] ? val_pos : val_neg) += 1;
            if (masks.test[i]) (labels[i] ? test_pos : test_neg) += 1;
        }
        CHECK(train_pos == 3);
        CHECK(train_neg == 3);
        CHECK(val_pos == 1);
        CHECK(val_neg == 1);
        CHECK(test_pos == 1);
        CHECK(test_neg == 1);
    }
    SUBCASE("single class degenerates to a plain split") {
        std::vector<std::uint8_t> labels(10, 0);
        SplitMasks masks = stratified_split(labels, {0.6, 0.2, 0.2}, 4);
        int train = 0, val = 0, test = 0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            train += masks.train[i];
            val += masks.val[i];
            test += masks.test[i];
        }
        CHECK(train == 6);
        CHECK(val == 2);
        CHECK(test == 2);
    }
    SUBCASE("determinism") {
        std::vector<std::uint8_t> labels{1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 0, 0};
        SplitMasks a = stratified_split(labels, {0.6, 0.2, 0.2}, 123);
        SplitMasks b = stratified_split(labels, {0.6, 0.2, 0.2}, 123);
        CHECK(a.train == b.train);
        CHECK(a.val == b.val);
        CHECK(a.test == b.test);
    }
    SUBCASE("tiny classes go entirely to train") {
        std::vector<std::uint8_t> labels{0, 0, 0, 0, 0, 0, 1, 1};
        SplitMasks masks = stratified_split(labels, {0.6, 0.2, 0.2}, 5);
        CHECK(masks.train[6] == 1);
        CHECK(masks.train[7] == 1);
    }
    SUBCASE("bad ratios") {
        std::vector<std::uint8_t> labels{0, 1};
        CHECK_THROWS_AS(stratified_split(labels, {0.5, 0.2, 0.2}, 1), BadRatios);
        CHECK_THROWS_AS(stratified_split(labels, {-0.2, 0.6, 0.6}, 1), BadRatios);
    }
}

TEST_CASE("split masks are disjoint, cover all nodes, and stay within one of exact") {
    Rng rng(55);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 3 + rng.below(200);
        std::vector<std::uint8_t> labels(n);
        for (auto& l : labels) l = static_cast<std::uint8_t>(rng.below(3));
        SplitMasks masks = stratified_split(labels, {0.6, 0.2, 0.2}, trial);

        std::map<int, std::size_t> class_count;
        for (auto l : labels) class_count[l] += 1;
        for (std::size_t i = 0; i < n; ++i)
            CHECK(masks.train[i] + masks.val[i] + masks.test[i] == 1);

        for (const auto& [cls, count] : class_count) {
            if (count < 3) continue;
            std::array<std::size_t, 3> got{};
            for (std::size_t i = 0; i < n; ++i) {
                if (labels[i] != cls) continue;
                if (masks.train[i]) got[0] += 1;
                if (masks.val[i]) got[1] += 1;
                if (masks.test[i]) got[2] += 1;
            }
            const std::array<double, 3> ratios{0.6, 0.2, 0.2};
            for (int s = 0; s < 3; ++s)
                CHECK(std::abs(static_cast<double>(got[s]) - count * ratios[s]) < 1.0);
        }
    }
}

TEST_CASE("build_dataset on the smallest graph") {
    RoadGraph g = build_graph({node_at(0, 40.0, -75.0), node_at(1, 40.001, -75.0)},
                              {edge_of(0, 1)});
    Dataset ds = build_dataset(g, {}, 1);
    CHECK(ds.num_nodes() == 2);
    CHECK(ds.num_edges() == 1);
    CHECK(ds.labels_occurrence == std::vector<std::uint8_t>{0, 0});
    CHECK(ds.labels_severity == std::vector<std::uint8_t>{0, 0});
    CHECK(ds.edge_ang(0, 0) == std::numbers::pi);
    CHECK(ds.edge_ang(0, 1) == std::numbers::pi);
    CHECK(ds.edge_ang(0, 2) == std::numbers::pi);
}

TEST_CASE("build_dataset shapes and invariants on the synthetic fixture") {
    SynthSpec spec;
    spec.grid_w = 10;
    spec.grid_h = 10;
    SynthResult s = generate(spec);
    Dataset ds = build_dataset(s.graph, s.accidents, 3);
    CHECK(ds.num_nodes() == s.graph.num_nodes());
    CHECK(ds.num_edges() == s.graph.num_edges());
    CHECK(ds.node_features.rows() == ds.num_nodes());
    CHECK(ds.node_features.cols() == ds.node_feature_names.size());
    CHECK(ds.edge_features.rows() == ds.num_edges());
    CHECK(ds.edge_features.cols() == ds.edge_feature_names.size());
    CHECK(ds.edge_ang.rows() == ds.num_edges());
    CHECK(ds.edge_dir.rows() == ds.num_edges());

    for (std::size_t v = 0; v < ds.num_nodes(); ++v) {
        CHECK(ds.masks.train[v] + ds.masks.val[v] + ds.masks.test[v] == 1);
        CHECK((ds.labels_severity[v] > 0) == (ds.labels_occurrence[v] == 1));
    }
}

TEST_CASE("build_dataset is deterministic byte for byte") {
    SynthSpec spec;
    spec.grid_w = 6;
    spec.grid_h = 6;
    SynthResult s = generate(spec);
    Dataset a = build_dataset(s.graph, s.accidents, 42);
    Dataset b = build_dataset(s.graph, s.accidents, 42);

    const auto dir = std::filesystem::temp_directory_path() / "travel_ingest_det";
    std::filesystem::create_directories(dir);
    save_dataset(a, (dir / "a.tapd").string());
    save_dataset(b, (dir / "b.tapd").string());
    auto slurp = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
    };
    CHECK(slurp(dir / "a.tapd") == slurp(dir / "b.tapd"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("dataset container round-trips and rejects damage") {
    SynthSpec spec;
    spec.grid_w = 5;
    spec.grid_h = 4;
    SynthResult s = generate(spec);
    Dataset ds = build_dataset(s.graph, s.accidents, 11);

    const auto dir = std::filesystem::temp_directory_path() / "travel_ingest_io";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "data.tapd").string();
    save_dataset(ds, path);

    SUBCASE("round trip") {
        Dataset loaded = load_dataset(path);
        CHECK(dataset_equal(ds, loaded));
        CHECK(loaded.stats.size() == ds.stats.size());
        CHECK(loaded.ratios == ds.ratios);
    }
    SUBCASE("truncated file") {
        std::ifstream in(path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        in.close();
        std::ofstream(path, std::ios::binary).write(bytes.data(), bytes.size() / 2);
        CHECK_THROWS_AS(load_dataset(path), CorruptFile);
    }
    SUBCASE("flipped payload byte") {
        std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(40);
        char c;
        f.seekg(40);
        f.get(c);
        f.seekp(40);
        f.put(static_cast<char>(c ^ 0x5a));
        f.close();
        CHECK_THROWS_AS(load_dataset(path), CorruptFile);
    }
    SUBCASE("version bump") {
        std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(4);
        f.put(static_cast<char>(2));
        f.close();
        CHECK_THROWS_AS(load_dataset(path), VersionMismatch);
    }
    SUBCASE("bad magic") {
        std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(0);
        f.put('X');
        f.close();
        CHECK_THROWS_AS(load_dataset(path), CorruptFile);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("accident CSV surface validates records") {
    const auto dir = std::filesystem::temp_directory_path() / "travel_ingest_acc";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "accidents.csv").string();

    std::vector<AccidentRecord> accidents{{40.0, -75.0, 3, "2021-01-01T00:00:00"},
                                          {40.1, -75.1, 7, "2021-06-01T12:00:00"}};
    write_accidents_csv(path, accidents);
    auto loaded = read_accidents_csv(path);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].severity == 3);
    CHECK(loaded[1].timestamp == "2021-06-01T12:00:00");

    std::ofstream(path) << "lat,lon,severity,timestamp\n40.0,-75.0,9,t\n";
    CHECK_THROWS_AS(read_accidents_csv(path), InputError);
    std::ofstream(path) << "lat,lon,severity,timestamp\n95.0,-75.0,3,t\n";
    CHECK_THROWS_AS(read_accidents_csv(path), InputError);
    std::filesystem::remove_all(dir);
}
