#include <cmath>
#include <filesystem>
#include <numbers>

#include "doctest.h"
#include "helpers.hpp"

#include "travel/errors.hpp"
#include "travel/geometry.hpp"
#include "travel/model.hpp"
#include "travel/synth.hpp"

using namespace travel;

namespace {

Dataset synth_dataset(int w, int h, std::uint64_t seed) {
    SynthSpec spec;
    spec.grid_w = w;
    spec.grid_h = h;
    spec.seed = seed;
    SynthResult s = generate(spec);
    return build_dataset(s.graph, s.accidents, seed);
}

// Plain per-node loops over the layer's own weights; shares no code with
// TravelLayer::forward.
Matrix naive_layer_forward(TravelLayer& layer, const Matrix& h, const Dataset& ds) {
    const std::size_t hidden = layer.self_ang.out_dim();
    Matrix out(h.rows(), 2 * hidden);

    auto linear = [](const LinearLayer& lin, const std::vector<double>& x) {
        std::vector<double> y(lin.out_dim());
        for (std::size_t o = 0; o < lin.out_dim(); ++o) {
            double acc = lin.b(0, o);
            for (std::size_t i = 0; i < lin.in_dim(); ++i) acc += lin.w(o, i) * x[i];
            y[o] = acc;
        }
        return y;
    };
    auto mlp_apply = [&](const Mlp& mlp, const std::vector<double>& x) {
        std::vector<double> h1 = linear(mlp.stage1, x);
        for (double& v : h1) v = v > 0 ? v : 0;
        return linear(mlp.stage2, h1);
    };

    for (std::size_t v = 0; v < h.rows(); ++v) {
        for (int component = 0; component < 2; ++component) {
            const bool angular = component == 0;
            const Mlp& mlp = angular ? layer.mlp_ang : layer.mlp_dir;
            const Matrix& extra = angular ? ds.edge_ang : ds.edge_dir;
            std::vector<double> message(hidden, 0.0);
            for (std::size_t e = 0; e < ds.num_edges(); ++e) {
                if (static_cast<std::size_t>(ds.edge_dst[e]) != v) continue;
                std::vector<double> input;
                const auto hu = h.row(static_cast<std::size_t>(ds.edge_src[e]));
                input.insert(input.end(), hu.begin(), hu.end());
                const auto ef = ds.edge_features.row(e);
                input.insert(input.end(), ef.begin(), ef.end());
                const auto ex = extra.row(e);
                input.insert(input.end(), ex.begin(), ex.end());
                const std::vector<double> m = mlp_apply(mlp, input);
                for (std::size_t c = 0; c < hidden; ++c) message[c] += m[c];
            }
            std::vector<double> hv(h.row(v).begin(), h.row(v).end());
            std::vector<double> self = linear(angular ? layer.self_ang : layer.self_dir, hv);
            for (std::size_t c = 0; c < hidden; ++c) {
                const double pre = self[c] + message[c];
                out(v, (angular ? 0 : hidden) + c) = pre > 0 ? pre : 0;
            }
        }
    }
    return out;
}

}  // namespace

TEST_CASE("travel layer forward fixtures") {
    Dataset ds = synth_dataset(4, 3, 2);
    const std::size_t d_v = ds.node_features.cols();
    const std::size_t d_e = ds.edge_features.cols();

    SUBCASE("all-zero parameters give all-zero output") {
        TravelLayer layer(d_v, 8, d_e);  // zero-initialized by construction
        Matrix out = layer.forward(ds.node_features, ds);
        for (double v : out.data()) CHECK(v == 0.0);
    }
    SUBCASE("matches the naive per-node loop oracle on random graphs") {
        for (std::uint64_t seed = 7; seed < 12; ++seed) {
            Dataset random_ds = synth_dataset(3 + seed % 4, 3 + seed % 3, seed);
            Rng rng(seed);
            TravelLayer layer(random_ds.node_features.cols(), 8,
                              random_ds.edge_features.cols());
            layer.init(rng);
            Matrix got = layer.forward(random_ds.node_features, random_ds);
            Matrix want = naive_layer_forward(layer, random_ds.node_features, random_ds);
            REQUIRE(got.rows() == want.rows());
            for (std::size_t i = 0; i < got.data().size(); ++i)
                CHECK(std::abs(got.data()[i] - want.data()[i]) < 1e-12);
        }
    }
}

TEST_CASE("travel layer matches the naive oracle on a three-node path") {
    std::vector<NodeRecord> nodes(3);
    for (int i = 0; i < 3; ++i) {
        nodes[i].id = i;
        nodes[i].lat = 40.0 + 0.001 * i;
        nodes[i].lon = -75.0 + 0.0003 * i * i;
        nodes[i].street_count = i == 1 ? 2 : 1;
    }
    std::vector<EdgeRecord> edges(2);
    edges[0].u = 0;
    edges[0].v = 1;
    edges[0].highway = "residential";
    edges[1].u = 1;
    edges[1].v = 2;
    edges[1].highway = "tertiary";
    RoadGraph g = build_graph(nodes, edges);
    Dataset ds = build_dataset(g, {}, 1);

    Rng rng(16);
    TravelLayer layer(ds.node_features.cols(), 8, ds.edge_features.cols());
    layer.init(rng);
    Matrix got = layer.forward(ds.node_features, ds);
    Matrix want = naive_layer_forward(layer, ds.node_features, ds);
    for (std::size_t i = 0; i < got.data().size(); ++i)
        CHECK(std::abs(got.data()[i] - want.data()[i]) < 1e-12);
}

TEST_CASE("travel layer treats an isolated node through the self term only") {
    // node 2 has no edges at all
    std::vector<NodeRecord> nodes(3);
    for (int i = 0; i < 3; ++i) {
        nodes[i].id = i;
        nodes[i].lat = 40.0 + 0.001 * i;
        nodes[i].lon = -75.0;
    }
    nodes[2].lon = -74.99;
    EdgeRecord e;
    e.u = 0;
    e.v = 1;
    RoadGraph g = build_graph(nodes, {e});
    Dataset ds = build_dataset(g, {}, 1);

    Rng rng(8);
    TravelLayer layer(ds.node_features.cols(), 6, ds.edge_features.cols());
    layer.init(rng);
    Matrix out = layer.forward(ds.node_features, ds);

    Matrix row(1, ds.node_features.cols());
    for (std::size_t c = 0; c < ds.node_features.cols(); ++c) row(0, c) = ds.node_features(2, c);
    Matrix self_ang = relu_forward(layer.self_ang.forward(row));
    Matrix self_dir = relu_forward(layer.self_dir.forward(row));
    for (std::size_t c = 0; c < 6; ++c) {
        CHECK(out(2, c) == self_ang(0, c));
        CHECK(out(2, 6 + c) == self_dir(0, c));
    }

    SUBCASE("with zero self weights the isolated node gets zero input gradient") {
        layer.self_ang.w.fill(0.0);
        layer.self_dir.w.fill(0.0);
        layer.forward(ds.node_features, ds);
        Matrix dh_out(3, 12, 1.0);
        Matrix dh_in = layer.backward(ds, dh_out);
        for (std::size_t c = 0; c < ds.node_features.cols(); ++c)
            CHECK(dh_in(2, c) == 0.0);
    }
}

TEST_CASE("travel layer backward fixtures") {
    Dataset ds = synth_dataset(3, 3, 5);
    const std::size_t d_v = ds.node_features.cols();
    const std::size_t d_e = ds.edge_features.cols();
    Rng rng(9);
    TravelLayer layer(d_v, 5, d_e);
    layer.init(rng);

    SUBCASE("zero upstream gradient leaves parameter gradients zero") {
        layer.forward(ds.node_features, ds);
        Matrix dh_out(ds.num_nodes(), 10);
        layer.backward(ds, dh_out);
        for (ParamView& p : layer.params("layer"))
            for (double v : p.grad->data()) CHECK(v == 0.0);
    }
    SUBCASE("parameter gradients agree with central differences") {
        // scalarize with a fixed random readout of the layer output
        Rng r2(10);
        Matrix readout(ds.num_nodes(), 10);
        for (double& v : readout.data()) v = r2.uniform(-1, 1);

        layer.forward(ds.node_features, ds);
        for (ParamView& p : layer.params("layer")) p.grad->fill(0.0);
        layer.backward(ds, readout);

        auto loss = [&] {
            Matrix out = layer.forward(ds.node_features, ds);
            double acc = 0.0;
            for (std::size_t i = 0; i < out.data().size(); ++i)
                acc += out.data()[i] * readout.data()[i];
            return acc;
        };
        for (ParamView& p : layer.params("layer")) {
            std::vector<double> x0 = p.value->data();
            auto f = [&](std::span<const double> x) {
                p.value->data().assign(x.begin(), x.end());
                return loss();
            };
            GradCheckReport report = grad_check(f, x0, p.grad->data());
            p.value->data() = x0;
            CHECK(report.max_rel_error < 1e-4);
        }
    }
}

TEST_CASE("model forward fixtures") {
    Dataset ds = synth_dataset(5, 4, 6);
    ModelConfig cfg;
    cfg.hidden = 8;
    cfg.d_v = ds.node_features.cols();
    cfg.d_e = ds.edge_features.cols();
    Rng rng(11);
    auto model = make_classifier(cfg, rng);

    SUBCASE("eval mode is deterministic") {
        Rng r1(1), r2(2);
        Matrix a = model->forward(ds, false, r1);
        Matrix b = model->forward(ds, false, r2);
        CHECK(a.data() == b.data());
    }
    SUBCASE("logit shape follows the task") {
        Rng r(1);
        Matrix logits = model->forward(ds, false, r);
        CHECK(logits.rows() == ds.num_nodes());
        CHECK(logits.cols() == 2);

        ModelConfig sev = cfg;
        sev.task = Task::kSeverity;
        Rng r3(2);
        auto sev_model = make_classifier(sev, r3);
        CHECK(sev_model->forward(ds, false, r).cols() == 8);
    }
    SUBCASE("full model gradient check") {
        GradCheckReport report = testutil::model_grad_check(*model, ds);
        CHECK(report.max_rel_error < 1e-4);
    }
}

TEST_CASE("baseline mlp fixtures") {
    Dataset ds = synth_dataset(4, 4, 12);
    ModelConfig cfg;
    cfg.kind = "mlp";
    cfg.hidden = 8;
    cfg.d_v = ds.node_features.cols();
    cfg.d_e = ds.edge_features.cols();
    Rng rng(13);
    auto model = make_classifier(cfg, rng);
    Rng unused(0);
    Matrix base = model->forward(ds, false, unused);
    CHECK(base.rows() == ds.num_nodes());
    CHECK(base.cols() == 2);

    SUBCASE("ignores the edge list entirely") {
        Dataset permuted = ds;
        // rotate the edge arrays one step
        std::rotate(permuted.edge_src.begin(), permuted.edge_src.begin() + 1,
                    permuted.edge_src.end());
        std::rotate(permuted.edge_dst.begin(), permuted.edge_dst.begin() + 1,
                    permuted.edge_dst.end());
        Matrix after = model->forward(permuted, false, unused);
        CHECK(after.data() == base.data());
    }
    SUBCASE("gradient check") {
        GradCheckReport report = testutil::model_grad_check(*model, ds);
        CHECK(report.max_rel_error < 1e-4);
    }
}

TEST_CASE("baseline mean-aggregation gnn fixtures") {
    Dataset ds = synth_dataset(4, 4, 14);
    ModelConfig cfg;
    cfg.kind = "gnn";
    cfg.hidden = 8;
    cfg.d_v = ds.node_features.cols();
    cfg.d_e = ds.edge_features.cols();
    Rng rng(15);
    auto model = make_classifier(cfg, rng);

    SUBCASE("gradient check") {
        GradCheckReport report = testutil::model_grad_check(*model, ds);
        CHECK(report.max_rel_error < 1e-4);
    }
    SUBCASE("on an edgeless graph the neighbor path is inert") {
        Dataset no_edges = ds;
        no_edges.edge_src.clear();
        no_edges.edge_dst.clear();
        no_edges.edge_features = Matrix(0, ds.edge_features.cols());
        no_edges.edge_ang = Matrix(0, 3);
        no_edges.edge_dir = Matrix(0, 2);
        Rng unused(0);
        Matrix with_nbr = model->forward(no_edges, false, unused);

        // zeroing the neighbor weights must not change the output
        auto params = model->params();
        std::vector<std::vector<double>> saved;
        for (ParamView& p : params) saved.push_back(p.value->data());
        for (ParamView& p : params)
            if (p.name.find(".nbr") != std::string::npos) p.value->fill(0.0);
        Matrix without_nbr = model->forward(no_edges, false, unused);
        CHECK(with_nbr.data() == without_nbr.data());
        for (std::size_t i = 0; i < params.size(); ++i) params[i].value->data() = saved[i];
    }
}

TEST_CASE("unknown model kind is rejected") {
    ModelConfig cfg;
    cfg.kind = "transformer";
    cfg.d_v = 3;
    cfg.d_e = 3;
    Rng rng(1);
    CHECK_THROWS_AS(make_classifier(cfg, rng), InputError);
}

TEST_CASE("rotating all coordinates about a node preserves its angular half") {
    SynthSpec spec;
    spec.grid_w = 6;
    spec.grid_h = 5;
    spec.seed = 21;
    SynthResult s = generate(spec);
    Dataset ds = build_dataset(s.graph, s.accidents, 21);

    Rng rng(22);
    TravelLayer layer(ds.node_features.cols(), 8, ds.edge_features.cols());
    layer.init(rng);
    Matrix before = layer.forward(ds.node_features, ds);

    for (int trial = 0; trial < 10; ++trial) {
        const int v = static_cast<int>(rng.below(s.graph.num_nodes()));
        const double theta = rng.uniform() * 2 * std::numbers::pi;

        std::vector<LatLon> pts;
        for (const NodeRecord& n : s.graph.nodes) pts.push_back({n.lat, n.lon});
        const auto rotated = rotate_about(pts, {s.graph.nodes[v].lat, s.graph.nodes[v].lon}, theta);
        std::vector<NodeRecord> nodes = s.graph.nodes;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            nodes[i].lat = rotated[i].lat;
            nodes[i].lon = rotated[i].lon;
        }
        RoadGraph rotated_graph = build_graph(nodes, s.graph.edges);

        Dataset rotated_ds = ds;
        for (std::size_t e = 0; e < ds.num_edges(); ++e) {
            const AngularSummary a =
                angular_summary(angle_set(rotated_graph, static_cast<int>(e)));
            rotated_ds.edge_ang(e, 0) = a.min_angle;
            rotated_ds.edge_ang(e, 1) = a.max_angle;
            rotated_ds.edge_ang(e, 2) = a.straightness;
            const DirectionVector d =
                edge_direction(rotated_graph.nodes[rotated_graph.edge_src[e]],
                               rotated_graph.nodes[rotated_graph.edge_dst[e]]);
            rotated_ds.edge_dir(e, 0) = d.dlat;
            rotated_ds.edge_dir(e, 1) = d.dlon;
        }
        Matrix after = layer.forward(ds.node_features, rotated_ds);
        for (std::size_t c = 0; c < 8; ++c)
            CHECK(std::abs(after(v, c) - before(v, c)) < 1e-9);
    }
}

TEST_CASE("global translation leaves logits unchanged") {
    Dataset ds = synth_dataset(5, 5, 23);
    SynthSpec spec;
    spec.grid_w = 5;
    spec.grid_h = 5;
    spec.seed = 23;
    SynthResult s = generate(spec);

    std::vector<NodeRecord> nodes = s.graph.nodes;
    for (NodeRecord& n : nodes) {
        n.lat += 0.25;
        n.lon -= 0.125;
    }
    RoadGraph shifted = build_graph(nodes, s.graph.edges);
    Dataset shifted_ds = ds;
    for (std::size_t e = 0; e < ds.num_edges(); ++e) {
        const AngularSummary a = angular_summary(angle_set(shifted, static_cast<int>(e)));
        shifted_ds.edge_ang(e, 0) = a.min_angle;
        shifted_ds.edge_ang(e, 1) = a.max_angle;
        shifted_ds.edge_ang(e, 2) = a.straightness;
        const DirectionVector d =
            edge_direction(shifted.nodes[shifted.edge_src[e]], shifted.nodes[shifted.edge_dst[e]]);
        shifted_ds.edge_dir(e, 0) = d.dlat;
        shifted_ds.edge_dir(e, 1) = d.dlon;
    }

    ModelConfig cfg;
    cfg.hidden = 8;
    cfg.d_v = ds.node_features.cols();
    cfg.d_e = ds.edge_features.cols();
    Rng rng(24);
    auto model = make_classifier(cfg, rng);
    Rng unused(0);
    Matrix base = model->forward(ds, false, unused);
    Matrix shifted_logits = model->forward(shifted_ds, false, unused);
    for (std::size_t i = 0; i < base.data().size(); ++i)
        CHECK(std::abs(base.data()[i] - shifted_logits.data()[i]) < 1e-12);
}

TEST_CASE("relabeling nodes permutes logits identically") {
    Dataset ds = synth_dataset(4, 5, 25);
    const std::size_t n = ds.num_nodes();
    Rng rng(26);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);

    Dataset permuted = ds;
    for (std::size_t v = 0; v < n; ++v) {
        for (std::size_t c = 0; c < ds.node_features.cols(); ++c)
            permuted.node_features(perm[v], c) = ds.node_features(v, c);
        permuted.labels_occurrence[perm[v]] = ds.labels_occurrence[v];
        permuted.labels_severity[perm[v]] = ds.labels_severity[v];
        permuted.masks.train[perm[v]] = ds.masks.train[v];
        permuted.masks.val[perm[v]] = ds.masks.val[v];
        permuted.masks.test[perm[v]] = ds.masks.test[v];
    }
    for (std::size_t e = 0; e < ds.num_edges(); ++e) {
        permuted.edge_src[e] = static_cast<std::int64_t>(perm[ds.edge_src[e]]);
        permuted.edge_dst[e] = static_cast<std::int64_t>(perm[ds.edge_dst[e]]);
    }

    ModelConfig cfg;
    cfg.hidden = 8;
    cfg.d_v = ds.node_features.cols();
    cfg.d_e = ds.edge_features.cols();
    Rng mrng(27);
    auto model = make_classifier(cfg, mrng);
    Rng unused(0);
    Matrix base = model->forward(ds, false, unused);
    Matrix permuted_logits = model->forward(permuted, false, unused);
    for (std::size_t v = 0; v < n; ++v)
        for (std::size_t c = 0; c < base.cols(); ++c)
            CHECK(permuted_logits(perm[v], c) == base(v, c));
}

TEST_CASE("checkpoints round-trip parameters and hyperparameters") {
    Dataset ds = synth_dataset(4, 4, 28);
    ModelConfig cfg;
    cfg.hidden = 8;
    cfg.d_v = ds.node_features.cols();
    cfg.d_e = ds.edge_features.cols();
    Rng rng(29);
    auto model = make_classifier(cfg, rng);

    const auto dir = std::filesystem::temp_directory_path() / "travel_ckpt";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "model.tapw").string();
    save_checkpoint(*model, path, 29, 17);

    LoadedCheckpoint loaded = load_checkpoint(path);
    CHECK(loaded.seed == 29);
    CHECK(loaded.best_epoch == 17);
    CHECK(loaded.model->config().kind == "travel");
    CHECK(loaded.model->config().hidden == 8);

    Rng unused(0);
    Matrix a = model->forward(ds, false, unused);
    Matrix b = loaded.model->forward(ds, false, unused);
    CHECK(a.data() == b.data());

    std::filesystem::remove_all(dir);
}
