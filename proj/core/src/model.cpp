#include "travel/model.hpp"

#include <nlohmann/json.hpp>

#include "travel/container.hpp"
#include "travel/errors.hpp"

namespace travel {

namespace {

using nlohmann::json;

constexpr std::array<char, 4> kCheckpointMagic{'T', 'A', 'P', 'W'};
constexpr std::uint32_t kCheckpointVersion = 1;

// Per-edge message input: h_u || e_uv || extra (angular or directional).
Matrix gather_message_inputs(const Matrix& h, const Dataset& ds, const Matrix& extra) {
    const std::size_t ne = ds.num_edges();
    Matrix out(ne, h.cols() + ds.edge_features.cols() + extra.cols());
    for (std::size_t e = 0; e < ne; ++e) {
        double* row = out.row(e).data();
        const auto hu = h.row(static_cast<std::size_t>(ds.edge_src[e]));
        std::copy(hu.begin(), hu.end(), row);
        const auto ef = ds.edge_features.row(e);
        std::copy(ef.begin(), ef.end(), row + h.cols());
        const auto ex = extra.row(e);
        std::copy(ex.begin(), ex.end(), row + h.cols() + ds.edge_features.cols());
    }
    return out;
}

// Sums per-edge messages into their target nodes, in edge order.
Matrix scatter_sum(const Matrix& messages, const Dataset& ds, std::size_t n_nodes) {
    Matrix out(n_nodes, messages.cols());
    for (std::size_t e = 0; e < messages.rows(); ++e) {
        double* acc = out.row(static_cast<std::size_t>(ds.edge_dst[e])).data();
        const auto m = messages.row(e);
        for (std::size_t c = 0; c < messages.cols(); ++c) acc[c] += m[c];
    }
    return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw ShapeMismatch("matrix add: shape mismatch");
    Matrix out = a;
    for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] += b.data()[i];
    return out;
}

}  // namespace

Task parse_task(const std::string& name) {
    if (name == "occurrence") return Task::kOccurrence;
    if (name == "severity") return Task::kSeverity;
    throw InputError("unknown task '" + name + "' (expected occurrence|severity)");
}

std::string task_name(Task t) { return t == Task::kOccurrence ? "occurrence" : "severity"; }

void Classifier::zero_grad() {
    for (ParamView& p : params()) p.grad->fill(0.0);
}

TravelLayer::TravelLayer(std::size_t in_dim, std::size_t hidden, std::size_t d_e)
    : self_ang(hidden, in_dim),
      self_dir(hidden, in_dim),
      mlp_ang(in_dim + d_e + 3, hidden, hidden),
      mlp_dir(in_dim + d_e + 2, hidden, hidden) {}

void TravelLayer::init(Rng& rng) {
    self_ang.init(rng);
    mlp_ang.init(rng);
    self_dir.init(rng);
    mlp_dir.init(rng);
}

Matrix TravelLayer::forward(const Matrix& h, const Dataset& ds) {
    ensure_finite(h, "travel_layer input");
    cache_.h_in = h;
    const std::size_t n = h.rows();
    const std::size_t hidden = self_ang.out_dim();

    Matrix msg_ang = mlp_ang.forward(gather_message_inputs(h, ds, ds.edge_ang), cache_.mlp_ang);
    cache_.pre_ang = add(self_ang.forward(h), scatter_sum(msg_ang, ds, n));
    Matrix h_ang = relu_forward(cache_.pre_ang);

    Matrix msg_dir = mlp_dir.forward(gather_message_inputs(h, ds, ds.edge_dir), cache_.mlp_dir);
    cache_.pre_dir = add(self_dir.forward(h), scatter_sum(msg_dir, ds, n));
    Matrix h_dir = relu_forward(cache_.pre_dir);

    Matrix out(n, 2 * hidden);
    for (std::size_t r = 0; r < n; ++r) {
        std::copy(h_ang.row(r).begin(), h_ang.row(r).end(), out.row(r).begin());
        std::copy(h_dir.row(r).begin(), h_dir.row(r).end(), out.row(r).begin() + hidden);
    }
    ensure_finite(out, "travel_layer output");
    return out;
}

Matrix TravelLayer::backward(const Dataset& ds, const Matrix& dh_out) {
    const std::size_t n = cache_.h_in.rows();
    const std::size_t hidden = self_ang.out_dim();
    if (dh_out.rows() != n || dh_out.cols() != 2 * hidden)
        throw ShapeMismatch("travel_layer backward: bad upstream gradient shape");

    Matrix dh_in(n, in_dim());
    for (int component = 0; component < 2; ++component) {
        const bool angular = component == 0;
        Matrix dh_half(n, hidden);
        for (std::size_t r = 0; r < n; ++r) {
            const auto src = dh_out.row(r);
            std::copy(src.begin() + (angular ? 0 : hidden),
                      src.begin() + (angular ? hidden : 2 * hidden), dh_half.row(r).begin());
        }
        Matrix dpre = relu_backward(dh_half, angular ? cache_.pre_ang : cache_.pre_dir);

        LinearLayer& self = angular ? self_ang : self_dir;
        dh_in = add(dh_in, self.backward(cache_.h_in, dpre));

        // Each in-edge of v receives v's aggregated-message gradient.
        Matrix dmsg(ds.num_edges(), hidden);
        for (std::size_t e = 0; e < ds.num_edges(); ++e) {
            const auto src = dpre.row(static_cast<std::size_t>(ds.edge_dst[e]));
            std::copy(src.begin(), src.end(), dmsg.row(e).begin());
        }
        Mlp& mlp = angular ? mlp_ang : mlp_dir;
        Matrix dmsg_in = mlp.backward(angular ? cache_.mlp_ang : cache_.mlp_dir, dmsg);

        // Only the h_u slice of the message input carries gradient onward.
        for (std::size_t e = 0; e < ds.num_edges(); ++e) {
            double* acc = dh_in.row(static_cast<std::size_t>(ds.edge_src[e])).data();
            const double* g = dmsg_in.row(e).data();
            for (std::size_t c = 0; c < in_dim(); ++c) acc[c] += g[c];
        }
    }
    return dh_in;
}

std::vector<ParamView> TravelLayer::params(const std::string& prefix) {
    std::vector<ParamView> out;
    for (auto& p : self_ang.params(prefix + ".ang.self")) out.push_back(p);
    for (auto& p : mlp_ang.params(prefix + ".ang.mlp")) out.push_back(p);
    for (auto& p : self_dir.params(prefix + ".dir.self")) out.push_back(p);
    for (auto& p : mlp_dir.params(prefix + ".dir.mlp")) out.push_back(p);
    return out;
}

namespace {

class TravelModel final : public Classifier {
public:
    TravelModel(const ModelConfig& cfg, Rng& rng)
        : cfg_(cfg),
          layer1_(cfg.d_v, cfg.hidden, cfg.d_e),
          layer2_(2 * cfg.hidden, cfg.hidden, cfg.d_e),
          head_(static_cast<std::size_t>(num_classes(cfg.task)), 2 * cfg.hidden) {
        layer1_.init(rng);
        layer2_.init(rng);
        head_.init(rng);
    }

    Matrix forward(const Dataset& ds, bool training, Rng& rng) override {
        Matrix h1 = layer1_.forward(ds.node_features, ds);
        drop1_ = dropout_forward(h1, cfg_.dropout, rng, training);
        Matrix h2 = layer2_.forward(drop1_.y, ds);
        drop2_ = dropout_forward(h2, cfg_.dropout, rng, training);
        head_in_ = drop2_.y;
        return head_.forward(head_in_);
    }

    void backward(const Dataset& ds, const Matrix& dlogits) override {
        Matrix d2 = dropout_backward(head_.backward(head_in_, dlogits), drop2_.mask);
        Matrix d1 = dropout_backward(layer2_.backward(ds, d2), drop1_.mask);
        layer1_.backward(ds, d1);
    }

    std::vector<ParamView> params() override {
        auto out = layer1_.params("layer1");
        for (auto& p : layer2_.params("layer2")) out.push_back(p);
        for (auto& p : head_.params("head")) out.push_back(p);
        return out;
    }

    const ModelConfig& config() const override { return cfg_; }

private:
    ModelConfig cfg_;
    TravelLayer layer1_, layer2_;
    LinearLayer head_;
    DropoutResult drop1_, drop2_;
    Matrix head_in_;
};

// Feedforward baseline; sees node features only.
class MlpModel final : public Classifier {
public:
    MlpModel(const ModelConfig& cfg, Rng& rng)
        : cfg_(cfg),
          lin1_(cfg.hidden, cfg.d_v),
          lin2_(cfg.hidden, cfg.hidden),
          head_(static_cast<std::size_t>(num_classes(cfg.task)), cfg.hidden) {
        lin1_.init(rng);
        lin2_.init(rng);
        head_.init(rng);
    }

    Matrix forward(const Dataset& ds, bool training, Rng& rng) override {
        x_ = ds.node_features;
        pre1_ = lin1_.forward(x_);
        drop1_ = dropout_forward(relu_forward(pre1_), cfg_.dropout, rng, training);
        pre2_ = lin2_.forward(drop1_.y);
        drop2_ = dropout_forward(relu_forward(pre2_), cfg_.dropout, rng, training);
        return head_.forward(drop2_.y);
    }

    void backward(const Dataset&, const Matrix& dlogits) override {
        Matrix d2 = dropout_backward(head_.backward(drop2_.y, dlogits), drop2_.mask);
        Matrix dpre2 = relu_backward(d2, pre2_);
        Matrix d1 = dropout_backward(lin2_.backward(drop1_.y, dpre2), drop1_.mask);
        lin1_.backward(x_, relu_backward(d1, pre1_));
    }

    std::vector<ParamView> params() override {
        auto out = lin1_.params("l1");
        for (auto& p : lin2_.params("l2")) out.push_back(p);
        for (auto& p : head_.params("head")) out.push_back(p);
        return out;
    }

    const ModelConfig& config() const override { return cfg_; }

private:
    ModelConfig cfg_;
    LinearLayer lin1_, lin2_, head_;
    Matrix x_, pre1_, pre2_;
    DropoutResult drop1_, drop2_;
};

// Mean-aggregation baseline: h_v <- ReLU(W_self h_v + W_nbr mean_{u in N(v)} h_u).
// Edge attributes are deliberately unused.
class MeanGnnModel final : public Classifier {
public:
    MeanGnnModel(const ModelConfig& cfg, Rng& rng)
        : cfg_(cfg),
          self1_(cfg.hidden, cfg.d_v),
          nbr1_(cfg.hidden, cfg.d_v),
          self2_(cfg.hidden, cfg.hidden),
          nbr2_(cfg.hidden, cfg.hidden),
          head_(static_cast<std::size_t>(num_classes(cfg.task)), cfg.hidden) {
        self1_.init(rng);
        nbr1_.init(rng);
        self2_.init(rng);
        nbr2_.init(rng);
        head_.init(rng);
    }

    Matrix forward(const Dataset& ds, bool training, Rng& rng) override {
        in_degree_.assign(ds.num_nodes(), 0.0);
        for (std::size_t e = 0; e < ds.num_edges(); ++e)
            in_degree_[static_cast<std::size_t>(ds.edge_dst[e])] += 1.0;

        x_ = ds.node_features;
        mean1_ = mean_neighbors(x_, ds);
        pre1_ = add(self1_.forward(x_), nbr1_.forward(mean1_));
        drop1_ = dropout_forward(relu_forward(pre1_), cfg_.dropout, rng, training);

        mean2_ = mean_neighbors(drop1_.y, ds);
        pre2_ = add(self2_.forward(drop1_.y), nbr2_.forward(mean2_));
        drop2_ = dropout_forward(relu_forward(pre2_), cfg_.dropout, rng, training);
        return head_.forward(drop2_.y);
    }

    void backward(const Dataset& ds, const Matrix& dlogits) override {
        Matrix d2 = dropout_backward(head_.backward(drop2_.y, dlogits), drop2_.mask);
        Matrix dpre2 = relu_backward(d2, pre2_);
        Matrix d1 = add(self2_.backward(drop1_.y, dpre2),
                        mean_neighbors_backward(nbr2_.backward(mean2_, dpre2), ds));
        d1 = dropout_backward(d1, drop1_.mask);
        Matrix dpre1 = relu_backward(d1, pre1_);
        self1_.backward(x_, dpre1);
        mean_neighbors_backward(nbr1_.backward(mean1_, dpre1), ds);
    }

    std::vector<ParamView> params() override {
        auto out = self1_.params("l1.self");
        for (auto& p : nbr1_.params("l1.nbr")) out.push_back(p);
        for (auto& p : self2_.params("l2.self")) out.push_back(p);
        for (auto& p : nbr2_.params("l2.nbr")) out.push_back(p);
        for (auto& p : head_.params("head")) out.push_back(p);
        return out;
    }

    const ModelConfig& config() const override { return cfg_; }

private:
    Matrix mean_neighbors(const Matrix& h, const Dataset& ds) const {
        Matrix out(h.rows(), h.cols());
        for (std::size_t e = 0; e < ds.num_edges(); ++e) {
            double* acc = out.row(static_cast<std::size_t>(ds.edge_dst[e])).data();
            const auto src = h.row(static_cast<std::size_t>(ds.edge_src[e]));
            for (std::size_t c = 0; c < h.cols(); ++c) acc[c] += src[c];
        }
        for (std::size_t r = 0; r < out.rows(); ++r) {
            if (in_degree_[r] == 0.0) continue;
            for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) /= in_degree_[r];
        }
        return out;
    }

    Matrix mean_neighbors_backward(const Matrix& dmean, const Dataset& ds) const {
        Matrix dh(dmean.rows(), dmean.cols());
        for (std::size_t e = 0; e < ds.num_edges(); ++e) {
            const std::size_t v = static_cast<std::size_t>(ds.edge_dst[e]);
            double* acc = dh.row(static_cast<std::size_t>(ds.edge_src[e])).data();
            const auto g = dmean.row(v);
            for (std::size_t c = 0; c < dmean.cols(); ++c) acc[c] += g[c] / in_degree_[v];
        }
        return dh;
    }

    ModelConfig cfg_;
    LinearLayer self1_, nbr1_, self2_, nbr2_, head_;
    Matrix x_, mean1_, mean2_, pre1_, pre2_;
    DropoutResult drop1_, drop2_;
    std::vector<double> in_degree_;
};

}  // namespace

std::unique_ptr<Classifier> make_classifier(const ModelConfig& cfg, Rng& rng) {
    if (cfg.hidden == 0) throw InputError("hidden dimension must be positive");
    if (cfg.kind == "travel") return std::make_unique<TravelModel>(cfg, rng);
    if (cfg.kind == "mlp") return std::make_unique<MlpModel>(cfg, rng);
    if (cfg.kind == "gnn") return std::make_unique<MeanGnnModel>(cfg, rng);
    throw InputError("unknown model '" + cfg.kind + "' (expected travel|mlp|gnn)");
}

void save_checkpoint(Classifier& model, const std::string& path, std::uint64_t seed,
                     std::size_t best_epoch) {
    const ModelConfig& cfg = model.config();
    json params = json::array();
    container::Writer w(kCheckpointMagic, kCheckpointVersion);
    for (ParamView& p : model.params()) {
        params.push_back({{"name", p.name}, {"rows", p.value->rows()}, {"cols", p.value->cols()}});
        w.append_f64(p.value->data());
    }
    json header{{"kind", "checkpoint"},
                {"model", cfg.kind},
                {"task", task_name(cfg.task)},
                {"hidden", cfg.hidden},
                {"dropout", cfg.dropout},
                {"d_v", cfg.d_v},
                {"d_e", cfg.d_e},
                {"seed", seed},
                {"best_epoch", best_epoch},
                {"params", params}};
    w.set_header(header.dump());
    w.write_file(path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    container::Reader r = container::Reader::from_file(path, kCheckpointMagic, kCheckpointVersion);
    try {
        const json h = json::parse(r.header_json());
        ModelConfig cfg;
        cfg.kind = h.at("model").get<std::string>();
        cfg.task = parse_task(h.at("task").get<std::string>());
        cfg.hidden = h.at("hidden").get<std::size_t>();
        cfg.dropout = h.at("dropout").get<double>();
        cfg.d_v = h.at("d_v").get<std::size_t>();
        cfg.d_e = h.at("d_e").get<std::size_t>();

        LoadedCheckpoint out;
        out.seed = h.at("seed").get<std::uint64_t>();
        out.best_epoch = h.at("best_epoch").get<std::size_t>();
        Rng scratch(0);
        out.model = make_classifier(cfg, scratch);

        auto params = out.model->params();
        const json& plist = h.at("params");
        if (plist.size() != params.size())
            throw CorruptFile("checkpoint parameter count mismatch");
        for (std::size_t i = 0; i < params.size(); ++i) {
            const std::size_t rows = plist[i].at("rows").get<std::size_t>();
            const std::size_t cols = plist[i].at("cols").get<std::size_t>();
            if (rows != params[i].value->rows() || cols != params[i].value->cols() ||
                plist[i].at("name").get<std::string>() != params[i].name)
                throw CorruptFile("checkpoint tensor mismatch for " + params[i].name);
            params[i].value->data() = r.read_f64(rows * cols);
        }
        if (!r.exhausted()) throw CorruptFile("trailing bytes after checkpoint payload");
        return out;
    } catch (const json::exception& e) {
        throw CorruptFile("bad checkpoint header: " + std::string(e.what()));
    }
}

}  // namespace travel
