#pragma once

#include <memory>
#include <string>
#include <vector>

#include "travel/ingest.hpp"
#include "travel/numkernel.hpp"
#include "travel/rng.hpp"

namespace travel {

enum class Task { kOccurrence, kSeverity };

inline int num_classes(Task t) { return t == Task::kOccurrence ? 2 : 8; }

Task parse_task(const std::string& name);
std::string task_name(Task t);

struct ModelConfig {
    std::string kind = "travel";  // travel | mlp | gnn
    Task task = Task::kOccurrence;
    std::size_t hidden = 16;      // width of each message-passing component
    double dropout = 0.5;
    std::size_t d_v = 0;
    std::size_t d_e = 0;
};

// A node classifier over a Dataset. Instances own their parameters and the
// caches from the last forward, so independent instances can train on
// separate threads.
class Classifier {
public:
    virtual ~Classifier() = default;

    // Logits, N x num_classes. Dropout is active only when training.
    virtual Matrix forward(const Dataset& ds, bool training, Rng& rng) = 0;
    // Accumulates parameter gradients from the cached forward.
    virtual void backward(const Dataset& ds, const Matrix& dlogits) = 0;

    virtual std::vector<ParamView> params() = 0;
    virtual const ModelConfig& config() const = 0;

    void zero_grad();
};

// One message-passing layer with an angular and a directional component; the
// output row of node v is the concatenation of the two halves, each of width
// `hidden`. Aggregation runs over in-edges, each parallel edge contributing
// its own summand, and an empty in-neighborhood contributes a zero message.
class TravelLayer {
public:
    TravelLayer() = default;
    TravelLayer(std::size_t in_dim, std::size_t hidden, std::size_t d_e);

    void init(Rng& rng);

    Matrix forward(const Matrix& h, const Dataset& ds);
    Matrix backward(const Dataset& ds, const Matrix& dh_out);

    std::vector<ParamView> params(const std::string& prefix);

    std::size_t in_dim() const { return self_ang.in_dim(); }
    std::size_t out_dim() const { return 2 * self_ang.out_dim(); }

    LinearLayer self_ang, self_dir;
    Mlp mlp_ang, mlp_dir;

private:
    struct Cache {
        Matrix h_in;
        Mlp::Cache mlp_ang, mlp_dir;
        Matrix pre_ang, pre_dir;  // pre-ReLU sums
    } cache_;
};

std::unique_ptr<Classifier> make_classifier(const ModelConfig& cfg, Rng& rng);

// TAPW checkpoint: model hyperparameters in the JSON header, parameters as
// one f64 section per tensor.
void save_checkpoint(Classifier& model, const std::string& path, std::uint64_t seed,
                     std::size_t best_epoch);

struct LoadedCheckpoint {
    std::unique_ptr<Classifier> model;
    std::uint64_t seed = 0;
    std::size_t best_epoch = 0;
};
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace travel
