#include "travel/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "travel/errors.hpp"

namespace travel {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct Confusion {
    double tp = 0, fp = 0, fn = 0;
};

double f1_from(const Confusion& c) {
    const double denom = 2 * c.tp + c.fp + c.fn;
    return denom == 0.0 ? 0.0 : 2 * c.tp / denom;
}

}  // namespace

double f1_binary(std::span<const int> preds, std::span<const int> labels) {
    if (preds.size() != labels.size()) throw ShapeMismatch("f1_binary: length mismatch");
    Confusion c;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] == 1 && labels[i] == 1) c.tp += 1;
        if (preds[i] == 1 && labels[i] != 1) c.fp += 1;
        if (preds[i] != 1 && labels[i] == 1) c.fn += 1;
    }
    return f1_from(c);
}

double weighted_f1(std::span<const int> preds, std::span<const int> labels, int num_classes) {
    if (preds.size() != labels.size()) throw ShapeMismatch("weighted_f1: length mismatch");
    if (labels.empty()) return kNan;
    double score = 0.0;
    for (int cls = 0; cls < num_classes; ++cls) {
        Confusion c;
        std::size_t support = 0;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            if (labels[i] == cls) ++support;
            if (preds[i] == cls && labels[i] == cls) c.tp += 1;
            if (preds[i] == cls && labels[i] != cls) c.fp += 1;
            if (preds[i] != cls && labels[i] == cls) c.fn += 1;
        }
        score += f1_from(c) * static_cast<double>(support) / static_cast<double>(labels.size());
    }
    return score;
}

double accuracy(std::span<const int> preds, std::span<const int> labels) {
    if (preds.size() != labels.size()) throw ShapeMismatch("accuracy: length mismatch");
    if (labels.empty()) return kNan;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < preds.size(); ++i)
        if (preds[i] == labels[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw ShapeMismatch("auc: length mismatch");
    std::size_t n_pos = 0;
    for (int l : labels) n_pos += (l == 1);
    const std::size_t n_neg = labels.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) throw UndefinedAuc("auc needs both classes present");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // average ranks over tie groups, ranks are 1-based
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of i+1 .. j
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]] == 1) pos_rank_sum += avg_rank;
        i = j;
    }
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (pos_rank_sum - np * (np + 1) / 2.0) / (np * nn);
}

namespace {

std::vector<int> argmax_rows(const Matrix& logits) {
    std::vector<int> out(logits.rows());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        const auto row = logits.row(r);
        out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

Metrics metrics_from_logits(const Matrix& logits, const Dataset& ds,
                            const std::vector<std::uint8_t>& mask, Task task) {
    std::vector<int> preds_all = argmax_rows(logits);
    Matrix probs = softmax_rows(logits);

    std::vector<int> preds, labels;
    std::vector<double> pos_scores;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        preds.push_back(preds_all[i]);
        if (task == Task::kOccurrence) {
            labels.push_back(ds.labels_occurrence[i]);
            pos_scores.push_back(probs(i, 1));
        } else {
            labels.push_back(ds.labels_severity[i]);
        }
    }

    Metrics m;
    m.weighted_f1 = weighted_f1(preds, labels, num_classes(task));
    m.accuracy = accuracy(preds, labels);
    if (task == Task::kOccurrence) {
        m.f1 = f1_binary(preds, labels);
        try {
            m.auc = auc(pos_scores, labels);
        } catch (const UndefinedAuc&) {
            m.auc = kNan;
        }
    } else {
        m.f1 = kNan;
        m.auc = kNan;
    }
    return m;
}

}  // namespace

Metrics evaluate(Classifier& model, const Dataset& ds, const std::vector<std::uint8_t>& mask) {
    Rng unused(0);
    Matrix logits = model.forward(ds, false, unused);
    return metrics_from_logits(logits, ds, mask, model.config().task);
}

TrainResult train(const Dataset& ds, const TrainConfig& cfg) {
    if (cfg.epochs == 0) throw InputError("epochs must be positive");
    if (cfg.dropout < 0.0 || cfg.dropout >= 1.0) throw InputError("dropout must be in [0, 1)");
    if (ds.masks.train.size() != ds.num_nodes()) throw ShapeMismatch("train: bad mask length");

    const int classes = num_classes(cfg.task);
    std::vector<std::size_t> train_rows;
    std::vector<int> train_targets;
    for (std::size_t i = 0; i < ds.num_nodes(); ++i) {
        if (!ds.masks.train[i]) continue;
        train_rows.push_back(i);
        train_targets.push_back(cfg.task == Task::kOccurrence ? ds.labels_occurrence[i]
                                                              : ds.labels_severity[i]);
    }
    if (train_rows.empty()) throw InputError("train mask selects no nodes");

    std::vector<double> class_weights;
    if (cfg.class_weighted_loss) {
        std::vector<std::size_t> counts(classes, 0);
        for (int t : train_targets) counts[t] += 1;
        class_weights.resize(classes, 0.0);
        for (int c = 0; c < classes; ++c)
            if (counts[c] > 0)
                class_weights[c] = static_cast<double>(train_rows.size()) /
                                   (static_cast<double>(classes) * counts[c]);
    }

    ModelConfig mc{cfg.model, cfg.task, cfg.hidden, cfg.dropout,
                   ds.node_features.cols(), ds.edge_features.cols()};
    Rng rng(cfg.seed);
    TrainResult result;
    result.model = make_classifier(mc, rng);
    auto params = result.model->params();
    AdamState adam(cfg.lr, cfg.weight_decay);

    const Task task = cfg.task;
    double best_criterion = -1.0;
    std::vector<Matrix> best_params;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        try {
            result.model->zero_grad();
            Matrix logits = result.model->forward(ds, true, rng);

            Matrix sub(train_rows.size(), logits.cols());
            for (std::size_t i = 0; i < train_rows.size(); ++i)
                std::copy(logits.row(train_rows[i]).begin(), logits.row(train_rows[i]).end(),
                          sub.row(i).begin());
            LossResult loss = cross_entropy(sub, train_targets, class_weights);
            result.loss_trace.push_back(loss.loss);

            Matrix dfull(logits.rows(), logits.cols());
            for (std::size_t i = 0; i < train_rows.size(); ++i)
                std::copy(loss.dlogits.row(i).begin(), loss.dlogits.row(i).end(),
                          dfull.row(train_rows[i]).begin());
            result.model->backward(ds, dfull);
            adam.step(params);

            Metrics vm = evaluate(*result.model, ds, ds.masks.val);
            result.val_metrics.push_back(vm);
            const double criterion = task == Task::kOccurrence ? vm.f1 : vm.weighted_f1;
            if (epoch == 1 || criterion > best_criterion) {
                best_criterion = criterion;
                result.best_epoch = epoch;
                best_params.clear();
                for (const ParamView& p : params) best_params.push_back(*p.value);
            }
        } catch (const NumericError& e) {
            throw NumericError("epoch " + std::to_string(epoch) + " (seed " +
                               std::to_string(cfg.seed) + "): " + e.what());
        }
    }

    for (std::size_t i = 0; i < params.size(); ++i) *params[i].value = best_params[i];
    result.test = evaluate(*result.model, ds, ds.masks.test);
    return result;
}

namespace {

MetricSummary summarize(const std::vector<double>& values) {
    MetricSummary s;
    if (values.empty()) return s;
    for (double v : values)
        if (std::isnan(v)) return {kNan, kNan};
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(sq / values.size());
    return s;
}

nlohmann::json metric_or_null(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

}  // namespace

std::string format_mean_std(const MetricSummary& s) {
    if (std::isnan(s.mean)) return "n/a";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.1f±%.1f", s.mean * 100.0, s.stddev * 100.0);
    return buf;
}

MultiSeedReport multi_seed_report(const Dataset& ds, const TrainConfig& base,
                                  std::span<const std::uint64_t> seeds, int jobs,
                                  std::vector<std::unique_ptr<Classifier>>* trained) {
    if (seeds.empty()) throw InputError("at least one seed required");
    std::vector<TrainResult> results(seeds.size());

    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(seeds.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < seeds.size(); ++i) {
            TrainConfig cfg = base;
            cfg.seed = seeds[i];
            results[i] = train(ds, cfg);
        }
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(workers);
        std::atomic<std::size_t> next{0};
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = next.fetch_add(1); i < seeds.size();
                         i = next.fetch_add(1)) {
                        TrainConfig cfg = base;
                        cfg.seed = seeds[i];
                        results[i] = train(ds, cfg);
                    }
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    MultiSeedReport report;
    std::ostringstream header;
    header << "model=" << base.model << " task=" << task_name(base.task)
           << " epochs=" << base.epochs << " hidden=" << base.hidden
           << " dropout=" << base.dropout << " lr=" << base.lr
           << " weight_decay=" << base.weight_decay;
    report.header = header.str();

    std::vector<double> f1s, wf1s, aucs, accs;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        SeedRun run;
        run.seed = seeds[i];
        run.best_epoch = results[i].best_epoch;
        run.test = results[i].test;
        run.loss_trace = std::move(results[i].loss_trace);
        report.runs.push_back(std::move(run));
        f1s.push_back(results[i].test.f1);
        wf1s.push_back(results[i].test.weighted_f1);
        aucs.push_back(results[i].test.auc);
        accs.push_back(results[i].test.accuracy);
        if (trained) trained->push_back(std::move(results[i].model));
    }
    report.f1 = summarize(f1s);
    report.weighted_f1 = summarize(wf1s);
    report.auc_summary = summarize(aucs);
    report.accuracy = summarize(accs);
    return report;
}

std::string MultiSeedReport::to_json() const {
    nlohmann::json runs_json = nlohmann::json::array();
    for (const SeedRun& run : runs) {
        runs_json.push_back({{"seed", run.seed},
                             {"best_epoch", run.best_epoch},
                             {"test",
                              {{"f1", metric_or_null(run.test.f1)},
                               {"weighted_f1", metric_or_null(run.test.weighted_f1)},
                               {"auc", metric_or_null(run.test.auc)},
                               {"accuracy", metric_or_null(run.test.accuracy)}}},
                             {"loss_trace", run.loss_trace}});
    }
    auto summary = [](const MetricSummary& s) -> nlohmann::json {
        if (std::isnan(s.mean)) return nullptr;
        return {{"mean", s.mean}, {"std", s.stddev}, {"formatted", format_mean_std(s)}};
    };
    nlohmann::json doc{{"header", header},
                       {"runs", runs_json},
                       {"summary",
                        {{"f1", summary(f1)},
                         {"weighted_f1", summary(weighted_f1)},
                         {"auc", summary(auc_summary)},
                         {"accuracy", summary(accuracy)}}}};
    return doc.dump(2);
}

std::string MultiSeedReport::to_table() const {
    std::ostringstream out;
    out << header << "\n";
    out << "seed  best_epoch  f1      weighted_f1  auc     accuracy\n";
    auto cell = [](double v) {
        char buf[32];
        if (std::isnan(v)) return std::string("n/a   ");
        std::snprintf(buf, sizeof(buf), "%.4f", v);
        return std::string(buf);
    };
    for (const SeedRun& run : runs) {
        out << run.seed << "     " << run.best_epoch << "\t  " << cell(run.test.f1) << "  "
            << cell(run.test.weighted_f1) << "       " << cell(run.test.auc) << "  "
            << cell(run.test.accuracy) << "\n";
    }
    out << "mean±std (%)  f1=" << format_mean_std(f1)
        << " weighted_f1=" << format_mean_std(weighted_f1)
        << " auc=" << format_mean_std(auc_summary) << " accuracy=" << format_mean_std(accuracy)
        << "\n";
    return out.str();
}

}  // namespace travel
