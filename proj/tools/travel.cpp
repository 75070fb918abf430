#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "travel/csv.hpp"
#include "travel/errors.hpp"
#include "travel/harness.hpp"
#include "travel/ingest.hpp"
#include "travel/model.hpp"
#include "travel/roadgraph.hpp"
#include "travel/synth.hpp"

namespace {

using travel::csv::format_double;

std::array<double, 3> parse_ratios(const std::string& text) {
    std::array<double, 3> out{};
    std::size_t pos = 0;
    for (int i = 0; i < 3; ++i) {
        const std::size_t next = i < 2 ? text.find(',', pos) : std::string::npos;
        const std::string tok = text.substr(pos, next == std::string::npos ? next : next - pos);
        if (tok.empty() || (i < 2 && next == std::string::npos))
            throw travel::BadRatios("--ratios expects three comma-separated numbers");
        try {
            out[i] = std::stod(tok);
        } catch (const std::exception&) {
            throw travel::BadRatios("--ratios: bad number '" + tok + "'");
        }
        pos = next + 1;
    }
    return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t next = text.find(',', pos);
        const std::string tok = text.substr(pos, next == std::string::npos ? next : next - pos);
        if (tok.empty()) throw travel::InputError("--seeds: empty entry");
        try {
            out.push_back(std::stoull(tok));
        } catch (const std::exception&) {
            throw travel::InputError("--seeds: bad seed '" + tok + "'");
        }
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    if (out.empty()) throw travel::InputError("--seeds: no seeds given");
    return out;
}

std::string metrics_json(const travel::Metrics& m) {
    nlohmann::json doc{{"f1", std::isnan(m.f1) ? nlohmann::json(nullptr) : nlohmann::json(m.f1)},
                       {"weighted_f1", std::isnan(m.weighted_f1) ? nlohmann::json(nullptr)
                                                                 : nlohmann::json(m.weighted_f1)},
                       {"auc", std::isnan(m.auc) ? nlohmann::json(nullptr) : nlohmann::json(m.auc)},
                       {"accuracy", std::isnan(m.accuracy) ? nlohmann::json(nullptr)
                                                           : nlohmann::json(m.accuracy)}};
    return doc.dump(2);
}

std::string metrics_line(const travel::Metrics& m) {
    auto cell = [](double v) { return std::isnan(v) ? std::string("n/a") : format_double(v); };
    return "f1=" + cell(m.f1) + " weighted_f1=" + cell(m.weighted_f1) + " auc=" + cell(m.auc) +
           " accuracy=" + cell(m.accuracy);
}

int run(int argc, char** argv) {
    CLI::App app{"Road-network accident prediction engine"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic road network with accidents");
    travel::SynthSpec spec;
    std::string synth_out = ".";
    synth->add_option("--grid-w", spec.grid_w, "Grid width (intersections)")
        ->capture_default_str();
    synth->add_option("--grid-h", spec.grid_h, "Grid height (intersections)")
        ->capture_default_str();
    synth->add_option("--jitter", spec.jitter, "Coordinate jitter, fraction of a block")
        ->capture_default_str();
    synth->add_option("--diag-prob", spec.diag_prob, "Diagonal shortcut probability per cell")
        ->capture_default_str();
    synth->add_option("--seed", spec.seed, "Generator seed")->capture_default_str();
    synth->add_option("--risk-bias", spec.risk.bias, "Risk bias")->capture_default_str();
    synth->add_option("--risk-sharpness", spec.risk.sharpness, "Risk weight on turn sharpness")
        ->capture_default_str();
    synth->add_option("--risk-degree", spec.risk.degree, "Risk weight on street count")
        ->capture_default_str();
    synth->add_option("--risk-highway", spec.risk.highway, "Risk weight on major-road incidence")
        ->capture_default_str();
    synth->add_option("--out-dir", synth_out, "Directory for nodes/edges/accidents CSVs")
        ->capture_default_str();

    // build
    auto* build = app.add_subcommand("build", "Build a dataset from node/edge/accident CSVs");
    std::string nodes_csv, edges_csv, accidents_csv, build_out = "dataset.tapd";
    std::string ratios_text = "0.6,0.2,0.2", angle_neighbors = "all";
    std::uint64_t build_seed = 1;
    build->add_option("nodes", nodes_csv, "Node CSV")->required();
    build->add_option("edges", edges_csv, "Edge CSV")->required();
    build->add_option("accidents", accidents_csv, "Accident CSV")->required();
    build->add_option("--seed", build_seed, "Split seed")->capture_default_str();
    build->add_option("--ratios", ratios_text, "train,val,test ratios")->capture_default_str();
    build->add_option("--angle-neighbors", angle_neighbors,
                      "Neighborhood for turn angles: all|in")
        ->capture_default_str();
    build->add_option("--out", build_out, "Output dataset path")->capture_default_str();

    // train
    auto* train_cmd = app.add_subcommand("train", "Train a model over one or more seeds");
    std::string dataset_path, model_kind = "travel", task_name = "occurrence";
    std::string seeds_text = "1,2,3", report_path = "report.json";
    std::string checkpoint_prefix = "checkpoint", format = "table";
    travel::TrainConfig cfg;
    int jobs = 1;
    train_cmd->add_option("dataset", dataset_path, "Dataset file (.tapd)")->required();
    train_cmd->add_option("--model", model_kind, "travel|mlp|gnn")->capture_default_str();
    train_cmd->add_option("--task", task_name, "occurrence|severity")->capture_default_str();
    train_cmd->add_option("--seeds", seeds_text, "Comma-separated seeds")->capture_default_str();
    train_cmd->add_option("--epochs", cfg.epochs, "Training epochs")->capture_default_str();
    train_cmd->add_option("--hidden", cfg.hidden, "Hidden width per component")
        ->capture_default_str();
    train_cmd->add_option("--dropout", cfg.dropout, "Dropout rate")->capture_default_str();
    train_cmd->add_option("--lr", cfg.lr, "Adam learning rate")->capture_default_str();
    train_cmd->add_option("--weight-decay", cfg.weight_decay, "L2 penalty")
        ->capture_default_str();
    train_cmd->add_flag("--weighted-loss", cfg.class_weighted_loss,
                        "Weight the loss by inverse class frequency");
    train_cmd->add_option("--jobs", jobs, "Concurrent seeds")->capture_default_str();
    train_cmd->add_option("--report", report_path, "Report JSON path")->capture_default_str();
    train_cmd->add_option("--checkpoint-prefix", checkpoint_prefix,
                          "Per-seed checkpoints <prefix>_seed<k>.tapw")
        ->capture_default_str();
    train_cmd->add_option("--format", format, "Stdout format: table|json")->capture_default_str();

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on the test mask");
    std::string eval_dataset, eval_checkpoint, eval_format = "table";
    eval_cmd->add_option("dataset", eval_dataset, "Dataset file (.tapd)")->required();
    eval_cmd->add_option("checkpoint", eval_checkpoint, "Checkpoint file (.tapw)")->required();
    eval_cmd->add_option("--format", eval_format, "Stdout format: table|json")
        ->capture_default_str();

    // features
    auto* features = app.add_subcommand("features", "Print one edge's attributes");
    std::string features_dataset;
    std::size_t edge_k = 0;
    features->add_option("dataset", features_dataset, "Dataset file (.tapd)")->required();
    features->add_option("--edge", edge_k, "Edge index")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);  // prints the message or help text
        return code == 0 ? 0 : 2;
    }

    if (synth->parsed()) {
        travel::SynthResult result = travel::generate(spec);
        std::filesystem::create_directories(synth_out);
        const auto dir = std::filesystem::path(synth_out);
        travel::write_nodes_csv((dir / "nodes.csv").string(), result.graph.nodes);
        travel::write_edges_csv((dir / "edges.csv").string(), result.graph.edges);
        travel::write_accidents_csv((dir / "accidents.csv").string(), result.accidents);
        std::cout << "nodes=" << result.graph.num_nodes() << " edges=" << result.graph.num_edges()
                  << " accidents=" << result.accidents.size() << "\n";
        return 0;
    }

    if (build->parsed()) {
        travel::BuildOptions options;
        options.ratios = parse_ratios(ratios_text);
        if (angle_neighbors == "all")
            options.angle_neighbors = travel::AngleNeighborhood::kAllRoadNeighbors;
        else if (angle_neighbors == "in")
            options.angle_neighbors = travel::AngleNeighborhood::kInNeighborsOnly;
        else
            throw travel::InputError("--angle-neighbors expects all|in");

        travel::RoadGraph g = travel::load_graph_csv(nodes_csv, edges_csv);
        std::vector<travel::AccidentRecord> accidents =
            travel::read_accidents_csv(accidents_csv);
        travel::Dataset ds = travel::build_dataset(g, accidents, build_seed, options);
        travel::save_dataset(ds, build_out);

        std::size_t positives = 0;
        for (auto v : ds.labels_occurrence) positives += v;
        char rate[32];
        std::snprintf(rate, sizeof(rate), "%.1f",
                      ds.num_nodes() ? 100.0 * positives / ds.num_nodes() : 0.0);
        std::cout << "nodes=" << ds.num_nodes() << " edges=" << ds.num_edges()
                  << " node_features=" << ds.node_features.cols()
                  << " edge_features=" << ds.edge_features.cols() << " positive_nodes="
                  << positives << " positive_rate=" << rate << "%\n";
        return 0;
    }

    if (train_cmd->parsed()) {
        cfg.model = model_kind;
        cfg.task = travel::parse_task(task_name);
        if (format != "table" && format != "json")
            throw travel::InputError("--format expects table|json");
        const std::vector<std::uint64_t> seeds = parse_seeds(seeds_text);
        travel::Dataset ds = travel::load_dataset(dataset_path);

        std::vector<std::unique_ptr<travel::Classifier>> trained;
        travel::MultiSeedReport report =
            travel::multi_seed_report(ds, cfg, seeds, jobs, &trained);

        for (std::size_t i = 0; i < seeds.size(); ++i) {
            const std::string path =
                checkpoint_prefix + "_seed" + std::to_string(seeds[i]) + ".tapw";
            travel::save_checkpoint(*trained[i], path, seeds[i], report.runs[i].best_epoch);
        }
        std::ofstream out(report_path);
        if (!out) throw travel::IoError("cannot write " + report_path);
        out << report.to_json() << "\n";
        std::cout << (format == "json" ? report.to_json() + "\n" : report.to_table());
        return 0;
    }

    if (eval_cmd->parsed()) {
        if (eval_format != "table" && eval_format != "json")
            throw travel::InputError("--format expects table|json");
        travel::Dataset ds = travel::load_dataset(eval_dataset);
        travel::LoadedCheckpoint loaded = travel::load_checkpoint(eval_checkpoint);
        const travel::ModelConfig& mc = loaded.model->config();
        if (mc.d_v != ds.node_features.cols() || mc.d_e != ds.edge_features.cols())
            throw travel::InputError(
                "checkpoint expects d_v=" + std::to_string(mc.d_v) + " d_e=" +
                std::to_string(mc.d_e) + " but dataset has d_v=" +
                std::to_string(ds.node_features.cols()) + " d_e=" +
                std::to_string(ds.edge_features.cols()));
        travel::Metrics m = travel::evaluate(*loaded.model, ds, ds.masks.test);
        std::cout << (eval_format == "json" ? metrics_json(m) + "\n"
                                            : "test " + metrics_line(m) + "\n");
        return 0;
    }

    if (features->parsed()) {
        travel::Dataset ds = travel::load_dataset(features_dataset);
        if (edge_k >= ds.num_edges())
            throw travel::InputError("--edge " + std::to_string(edge_k) +
                                     " out of range (dataset has " +
                                     std::to_string(ds.num_edges()) + " edges)");
        std::cout << "edge " << edge_k << ": src=" << ds.edge_src[edge_k]
                  << " dst=" << ds.edge_dst[edge_k] << "\n";
        for (std::size_t c = 0; c < ds.edge_features.cols(); ++c)
            std::cout << "  e[" << ds.edge_feature_names[c]
                      << "]=" << format_double(ds.edge_features(edge_k, c)) << "\n";
        std::cout << "  a[min]=" << format_double(ds.edge_ang(edge_k, 0)) << "\n"
                  << "  a[max]=" << format_double(ds.edge_ang(edge_k, 1)) << "\n"
                  << "  a[straightness]=" << format_double(ds.edge_ang(edge_k, 2)) << "\n"
                  << "  d[dlat]=" << format_double(ds.edge_dir(edge_k, 0)) << "\n"
                  << "  d[dlon]=" << format_double(ds.edge_dir(edge_k, 1)) << "\n";
        return 0;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const travel::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const travel::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
