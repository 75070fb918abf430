#include "travel/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>

#include <nlohmann/json.hpp>

#include "travel/container.hpp"
#include "travel/csv.hpp"
#include "travel/errors.hpp"
#include "travel/rng.hpp"

namespace travel {

namespace {

using nlohmann::json;

constexpr std::array<char, 4> kDatasetMagic{'T', 'A', 'P', 'D'};
constexpr std::uint32_t kDatasetVersion = 1;

const std::string kMissing = "__missing__";
const std::string kParsed = "__num__";

// OSM free-text numerics: "30 mph" -> 30, "2;3" -> 2, "signals" -> absent.
std::optional<double> parse_numeric_tag(const std::string& raw) {
    std::size_t begin = raw.find_first_not_of(" \t");
    if (begin == std::string::npos) return std::nullopt;
    std::size_t end = raw.find(';', begin);
    std::string token = raw.substr(begin, end == std::string::npos ? end : end - begin);
    const char* start = token.c_str();
    char* stop = nullptr;
    double value = std::strtod(start, &stop);
    if (stop == start || !std::isfinite(value)) return std::nullopt;
    return value;
}

// Accumulates named columns, then emits them sorted by
// (feature, numeric-before-categorical, category).
class FeatureBuilder {
public:
    explicit FeatureBuilder(std::size_t n_rows) : n_rows_(n_rows) {}

    void add_categorical(const std::string& feature, const std::vector<std::string>& raw) {
        std::set<std::string> categories;
        for (const auto& v : raw) categories.insert(v.empty() ? kMissing : v);
        for (const auto& cat : categories) {
            Column col{feature, 1, cat, std::vector<double>(n_rows_, 0.0), {}};
            for (std::size_t r = 0; r < n_rows_; ++r)
                if ((raw[r].empty() ? kMissing : raw[r]) == cat) col.values[r] = 1.0;
            columns_.push_back(std::move(col));
        }
    }

    void add_numeric(const std::string& feature, const std::vector<std::optional<double>>& raw,
                     bool with_indicator) {
        Column col{feature, 0, "", std::vector<double>(n_rows_, 0.0), {}};
        for (std::size_t r = 0; r < n_rows_; ++r) {
            if (raw[r])
                col.values[r] = *raw[r];
            else
                col.missing_rows.push_back(r);
        }
        columns_.push_back(std::move(col));
        if (with_indicator) {
            std::vector<std::string> presence(n_rows_);
            for (std::size_t r = 0; r < n_rows_; ++r) presence[r] = raw[r] ? kParsed : "";
            add_categorical(feature, presence);
        }
    }

    void emit(int which, Matrix& out, std::vector<std::string>& names,
              std::vector<std::pair<std::size_t, std::size_t>>& missing,
              std::vector<ColumnStats>& numeric_columns) {
        std::stable_sort(columns_.begin(), columns_.end(), [](const Column& a, const Column& b) {
            return std::tie(a.feature, a.kind, a.category) < std::tie(b.feature, b.kind, b.category);
        });
        out = Matrix(n_rows_, columns_.size());
        names.clear();
        for (std::size_t c = 0; c < columns_.size(); ++c) {
            const Column& col = columns_[c];
            names.push_back(col.kind == 0 ? col.feature : col.feature + "=" + col.category);
            for (std::size_t r = 0; r < n_rows_; ++r) out(r, c) = col.values[r];
            for (std::size_t r : col.missing_rows) missing.emplace_back(r, c);
            if (col.kind == 0) numeric_columns.push_back({col.feature, which, c, 0.0, 0.0});
        }
    }

private:
    struct Column {
        std::string feature;
        int kind;  // 0 numeric, 1 categorical
        std::string category;
        std::vector<double> values;
        std::vector<std::size_t> missing_rows;
    };
    std::size_t n_rows_;
    std::vector<Column> columns_;
};

}  // namespace

EncodedFeatures encode_features(const RoadGraph& g) {
    EncodedFeatures out;

    FeatureBuilder node_builder(g.num_nodes());
    {
        std::vector<std::string> highway(g.num_nodes());
        std::vector<std::optional<double>> street_count(g.num_nodes());
        for (std::size_t i = 0; i < g.num_nodes(); ++i) {
            highway[i] = g.nodes[i].highway;
            street_count[i] = static_cast<double>(g.nodes[i].street_count);
        }
        node_builder.add_categorical("highway", highway);
        node_builder.add_numeric("street_count", street_count, false);
    }
    node_builder.emit(0, out.node_features, out.node_feature_names, out.node_missing_numeric,
                      out.numeric_columns);

    FeatureBuilder edge_builder(g.num_edges());
    {
        const std::size_t ne = g.num_edges();
        std::vector<std::string> highway(ne), bridge(ne), oneway(ne), access(ne), tunnel(ne),
            junction(ne);
        std::vector<std::optional<double>> length(ne), lanes(ne), maxspeed(ne);
        for (std::size_t e = 0; e < ne; ++e) {
            const EdgeRecord& rec = g.edges[e];
            highway[e] = rec.highway;
            bridge[e] = rec.bridge;
            oneway[e] = rec.oneway ? "true" : "false";
            access[e] = rec.access;
            tunnel[e] = rec.tunnel;
            junction[e] = rec.junction;
            length[e] = rec.length;
            lanes[e] = parse_numeric_tag(rec.lanes);
            maxspeed[e] = parse_numeric_tag(rec.maxspeed);
        }
        edge_builder.add_categorical("highway", highway);
        edge_builder.add_categorical("bridge", bridge);
        edge_builder.add_categorical("oneway", oneway);
        edge_builder.add_categorical("access", access);
        edge_builder.add_categorical("tunnel", tunnel);
        edge_builder.add_categorical("junction", junction);
        edge_builder.add_numeric("length", length, false);
        edge_builder.add_numeric("lanes", lanes, true);
        edge_builder.add_numeric("maxspeed", maxspeed, true);
    }
    edge_builder.emit(1, out.edge_features, out.edge_feature_names, out.edge_missing_numeric,
                      out.numeric_columns);
    return out;
}

int severity_class(double mean_severity) {
    const int k = static_cast<int>(std::floor(mean_severity / 0.5)) - 1;
    return std::clamp(k, 1, 7);
}

LabelResult assign_accidents(const RoadGraph& g, const std::vector<AccidentRecord>& accidents) {
    if (g.nodes.empty()) throw EmptyGraph();
    NodeLocator locator(g);
    std::vector<int> counts(g.num_nodes(), 0);
    std::vector<double> severity_sum(g.num_nodes(), 0.0);
    for (const AccidentRecord& a : accidents) {
        const int node = locator.nearest({a.lat, a.lon});
        counts[node] += 1;
        severity_sum[node] += static_cast<double>(a.severity);
    }
    LabelResult out;
    out.occurrence.assign(g.num_nodes(), 0);
    out.severity.assign(g.num_nodes(), 0);
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
        if (counts[i] == 0) continue;
        out.occurrence[i] = 1;
        out.severity[i] =
            static_cast<std::uint8_t>(severity_class(severity_sum[i] / counts[i]));
    }
    return out;
}

SplitMasks stratified_split(const std::vector<std::uint8_t>& labels, std::array<double, 3> ratios,
                            std::uint64_t seed) {
    double sum = 0.0;
    for (double r : ratios) {
        if (r < 0.0) throw BadRatios("split ratios must be non-negative");
        sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw BadRatios("split ratios must sum to 1");

    SplitMasks masks;
    masks.train.assign(labels.size(), 0);
    masks.val.assign(labels.size(), 0);
    masks.test.assign(labels.size(), 0);

    std::map<std::uint8_t, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

    Rng rng(seed);
    for (auto& [cls, members] : by_class) {
        rng.shuffle(members);
        const std::size_t n = members.size();
        if (n < 3) {
            for (std::size_t i : members) masks.train[i] = 1;
            continue;
        }
        // largest-remainder rounding of n into the three ratios
        std::array<std::size_t, 3> counts{};
        std::array<std::pair<double, int>, 3> fracs;
        std::size_t assigned = 0;
        for (int s = 0; s < 3; ++s) {
            const double ideal = static_cast<double>(n) * ratios[s];
            counts[s] = static_cast<std::size_t>(std::floor(ideal));
            fracs[s] = {-(ideal - std::floor(ideal)), s};
            assigned += counts[s];
        }
        std::sort(fracs.begin(), fracs.end());
        for (std::size_t r = 0; r < n - assigned; ++r) counts[fracs[r % 3].second] += 1;

        std::size_t pos = 0;
        for (std::size_t i = 0; i < counts[0]; ++i) masks.train[members[pos++]] = 1;
        for (std::size_t i = 0; i < counts[1]; ++i) masks.val[members[pos++]] = 1;
        for (std::size_t i = 0; i < counts[2]; ++i) masks.test[members[pos++]] = 1;
    }
    return masks;
}

Dataset build_dataset(const RoadGraph& g, const std::vector<AccidentRecord>& accidents,
                      std::uint64_t seed, const BuildOptions& options) {
    EncodedFeatures enc = encode_features(g);
    LabelResult labels = assign_accidents(g, accidents);
    SplitMasks masks = stratified_split(labels.occurrence, options.ratios, seed);

    Dataset d;
    d.node_features = std::move(enc.node_features);
    d.edge_features = std::move(enc.edge_features);
    d.node_feature_names = std::move(enc.node_feature_names);
    d.edge_feature_names = std::move(enc.edge_feature_names);
    d.labels_occurrence = std::move(labels.occurrence);
    d.labels_severity = std::move(labels.severity);
    d.masks = std::move(masks);
    d.ratios = options.ratios;
    d.seed = seed;
    d.angle_neighbors =
        options.angle_neighbors == AngleNeighborhood::kAllRoadNeighbors ? "all" : "in";

    const std::size_t ne = g.num_edges();
    d.edge_ang = Matrix(ne, 3);
    d.edge_dir = Matrix(ne, 2);
    d.edge_src.resize(ne);
    d.edge_dst.resize(ne);
    for (std::size_t e = 0; e < ne; ++e) {
        const AngularSummary a =
            angular_summary(angle_set(g, static_cast<int>(e), options.angle_neighbors));
        d.edge_ang(e, 0) = a.min_angle;
        d.edge_ang(e, 1) = a.max_angle;
        d.edge_ang(e, 2) = a.straightness;
        const DirectionVector dir =
            edge_direction(g.nodes[g.edge_src[e]], g.nodes[g.edge_dst[e]]);
        d.edge_dir(e, 0) = dir.dlat;
        d.edge_dir(e, 1) = dir.dlon;
        d.edge_src[e] = g.edge_src[e];
        d.edge_dst[e] = g.edge_dst[e];
    }

    // z-score numeric columns with training-row statistics; an edge counts as
    // a training row when its target node is train-masked
    std::vector<std::uint8_t> edge_in_train(ne, 0);
    for (std::size_t e = 0; e < ne; ++e) edge_in_train[e] = d.masks.train[g.edge_dst[e]];

    std::vector<std::set<std::size_t>> missing(2);
    for (auto [r, c] : enc.node_missing_numeric)
        missing[0].insert(r * d.node_features.cols() + c);
    for (auto [r, c] : enc.edge_missing_numeric)
        missing[1].insert(r * d.edge_features.cols() + c);

    for (ColumnStats stats : enc.numeric_columns) {
        Matrix& m = stats.which == 0 ? d.node_features : d.edge_features;
        auto is_missing = [&](std::size_t r) {
            return missing[stats.which].count(r * m.cols() + stats.column) > 0;
        };
        auto in_train = [&](std::size_t r) {
            return stats.which == 0 ? d.masks.train[r] != 0 : edge_in_train[r] != 0;
        };

        double sum = 0.0, sq = 0.0;
        std::size_t count = 0;
        for (int pass = 0; pass < 2 && count == 0; ++pass) {
            for (std::size_t r = 0; r < m.rows(); ++r) {
                if (is_missing(r) || (pass == 0 && !in_train(r))) continue;
                sum += m(r, stats.column);
                sq += m(r, stats.column) * m(r, stats.column);
                ++count;
            }
        }
        if (count > 0) {
            stats.mean = sum / static_cast<double>(count);
            const double var =
                std::max(0.0, sq / static_cast<double>(count) - stats.mean * stats.mean);
            stats.stddev = std::sqrt(var);
        }
        const double denom = stats.stddev > 0.0 ? stats.stddev : 1.0;
        for (std::size_t r = 0; r < m.rows(); ++r)
            m(r, stats.column) = is_missing(r) ? 0.0 : (m(r, stats.column) - stats.mean) / denom;
        d.stats.push_back(stats);
    }
    return d;
}

namespace {

json dataset_header(const Dataset& d) {
    json stats = json::array();
    for (const ColumnStats& s : d.stats)
        stats.push_back({{"name", s.name},
                         {"which", s.which},
                         {"column", s.column},
                         {"mean", s.mean},
                         {"std", s.stddev}});
    return json{{"kind", "dataset"},
                {"n_nodes", d.num_nodes()},
                {"n_edges", d.num_edges()},
                {"d_v", d.node_features.cols()},
                {"d_e", d.edge_features.cols()},
                {"node_feature_names", d.node_feature_names},
                {"edge_feature_names", d.edge_feature_names},
                {"stats", stats},
                {"ratios", d.ratios},
                {"seed", d.seed},
                {"angle_neighbors", d.angle_neighbors}};
}

}  // namespace

void save_dataset(const Dataset& d, const std::string& path) {
    container::Writer w(kDatasetMagic, kDatasetVersion);
    w.set_header(dataset_header(d).dump());
    w.append_f64(d.node_features.data());
    w.append_f64(d.edge_features.data());
    w.append_f64(d.edge_ang.data());
    w.append_f64(d.edge_dir.data());
    w.append_i64(d.edge_src);
    w.append_i64(d.edge_dst);
    w.append_u8(d.labels_occurrence);
    w.append_u8(d.labels_severity);
    w.append_u8(d.masks.train);
    w.append_u8(d.masks.val);
    w.append_u8(d.masks.test);
    w.write_file(path);
}

Dataset load_dataset(const std::string& path) {
    container::Reader r = container::Reader::from_file(path, kDatasetMagic, kDatasetVersion);
    json h;
    try {
        h = json::parse(r.header_json());
    } catch (const json::exception& e) {
        throw CorruptFile("bad dataset header: " + std::string(e.what()));
    }
    try {
        const std::size_t n = h.at("n_nodes").get<std::size_t>();
        const std::size_t e = h.at("n_edges").get<std::size_t>();
        const std::size_t dv = h.at("d_v").get<std::size_t>();
        const std::size_t de = h.at("d_e").get<std::size_t>();

        Dataset d;
        d.node_feature_names = h.at("node_feature_names").get<std::vector<std::string>>();
        d.edge_feature_names = h.at("edge_feature_names").get<std::vector<std::string>>();
        if (d.node_feature_names.size() != dv || d.edge_feature_names.size() != de)
            throw CorruptFile("feature name count disagrees with declared width");
        for (const json& s : h.at("stats")) {
            ColumnStats cs;
            cs.name = s.at("name").get<std::string>();
            cs.which = s.at("which").get<int>();
            cs.column = s.at("column").get<std::size_t>();
            cs.mean = s.at("mean").get<double>();
            cs.stddev = s.at("std").get<double>();
            d.stats.push_back(cs);
        }
        d.ratios = h.at("ratios").get<std::array<double, 3>>();
        d.seed = h.at("seed").get<std::uint64_t>();
        d.angle_neighbors = h.at("angle_neighbors").get<std::string>();

        auto take_matrix = [&](std::size_t rows, std::size_t cols) {
            Matrix m(rows, cols);
            m.data() = r.read_f64(rows * cols);
            return m;
        };
        d.node_features = take_matrix(n, dv);
        d.edge_features = take_matrix(e, de);
        d.edge_ang = take_matrix(e, 3);
        d.edge_dir = take_matrix(e, 2);
        d.edge_src = r.read_i64(e);
        d.edge_dst = r.read_i64(e);
        d.labels_occurrence = r.read_u8(n);
        d.labels_severity = r.read_u8(n);
        d.masks.train = r.read_u8(n);
        d.masks.val = r.read_u8(n);
        d.masks.test = r.read_u8(n);
        if (!r.exhausted()) throw CorruptFile("trailing bytes after dataset payload");
        return d;
    } catch (const json::exception& e) {
        throw CorruptFile("bad dataset header: " + std::string(e.what()));
    }
}

std::vector<AccidentRecord> read_accidents_csv(const std::string& path) {
    csv::Table t = csv::read_file(path);
    const std::size_t c_lat = t.column("lat"), c_lon = t.column("lon");
    const std::size_t c_sev = t.column("severity"), c_ts = t.column("timestamp");
    std::vector<AccidentRecord> out;
    out.reserve(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        const std::string ctx = path + ":" + std::to_string(i + 2);
        AccidentRecord a;
        try {
            a.lat = std::stod(row[c_lat]);
            a.lon = std::stod(row[c_lon]);
            a.severity = std::stoi(row[c_sev]);
        } catch (const std::exception&) {
            throw InputError(ctx + ": bad accident record");
        }
        if (a.lat < -90.0 || a.lat > 90.0 || a.lon < -180.0 || a.lon > 180.0)
            throw InputError(ctx + ": coordinates out of range");
        if (a.severity < 1 || a.severity > 7)
            throw InputError(ctx + ": severity must be in [1, 7]");
        a.timestamp = row[c_ts];
        out.push_back(std::move(a));
    }
    return out;
}

void write_accidents_csv(const std::string& path, const std::vector<AccidentRecord>& accidents) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(accidents.size());
    for (const AccidentRecord& a : accidents)
        rows.push_back({csv::format_double(a.lat), csv::format_double(a.lon),
                        std::to_string(a.severity), a.timestamp});
    csv::write_file(path, {"lat", "lon", "severity", "timestamp"}, rows);
}

}  // namespace travel
