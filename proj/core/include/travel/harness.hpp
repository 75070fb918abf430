#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "travel/ingest.hpp"
#include "travel/model.hpp"

namespace travel {

struct TrainConfig {
    std::size_t epochs = 300;
    double lr = 0.01;
    double weight_decay = 5e-4;
    double dropout = 0.5;
    std::size_t hidden = 16;
    std::uint64_t seed = 1;
    Task task = Task::kOccurrence;
    std::string model = "travel";
    bool class_weighted_loss = false;
};

// Scores of one evaluation pass. f1 and auc are NaN where undefined
// (multiclass runs, or a mask holding a single class for auc).
struct Metrics {
    double f1 = 0.0;
    double weighted_f1 = 0.0;
    double auc = 0.0;
    double accuracy = 0.0;
};

double f1_binary(std::span<const int> preds, std::span<const int> labels);
double weighted_f1(std::span<const int> preds, std::span<const int> labels, int num_classes);
double accuracy(std::span<const int> preds, std::span<const int> labels);

// Mann-Whitney AUC with average ranks for ties. Throws UndefinedAuc when all
// labels agree.
double auc(std::span<const double> scores, std::span<const int> labels);

Metrics evaluate(Classifier& model, const Dataset& ds, const std::vector<std::uint8_t>& mask);

struct TrainResult {
    std::unique_ptr<Classifier> model;  // parameters restored to the best validation epoch
    std::vector<double> loss_trace;     // train loss per epoch
    std::vector<Metrics> val_metrics;   // per epoch
    std::size_t best_epoch = 0;         // 1-based
    Metrics test;
};

// Full-batch training on the train mask; model selection picks the epoch with
// the best validation F1 (occurrence) or weighted F1 (severity).
TrainResult train(const Dataset& ds, const TrainConfig& cfg);

struct MetricSummary {
    double mean = 0.0;
    double stddev = 0.0;
};

struct SeedRun {
    std::uint64_t seed = 0;
    std::size_t best_epoch = 0;
    Metrics test;
    std::vector<double> loss_trace;
};

struct MultiSeedReport {
    std::string header;  // e.g. "model=travel task=occurrence epochs=300 hidden=16 dropout=0.5 ..."
    std::vector<SeedRun> runs;
    MetricSummary f1, weighted_f1, auc_summary, accuracy;

    std::string to_json() const;
    std::string to_table() const;
};

// Trains one run per seed (optionally on `jobs` worker threads; results are
// independent of `jobs`) and aggregates mean and standard deviation.
MultiSeedReport multi_seed_report(const Dataset& ds, const TrainConfig& base,
                                  std::span<const std::uint64_t> seeds, int jobs = 1,
                                  std::vector<std::unique_ptr<Classifier>>* trained = nullptr);

// Percent formatting used in the report tables: mean 0.5194, std 0.0102
// becomes "51.9±1.0".
std::string format_mean_std(const MetricSummary& s);

}  // namespace travel
