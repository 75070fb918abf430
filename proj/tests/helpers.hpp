#pragma once

// Shared helpers for the unit and acceptance suites.

#include <functional>
#include <span>
#include <vector>

#include "travel/harness.hpp"
#include "travel/ingest.hpp"
#include "travel/model.hpp"
#include "travel/numkernel.hpp"

namespace testutil {

inline std::vector<double> flatten_params(travel::Classifier& model) {
    std::vector<double> out;
    for (travel::ParamView& p : model.params())
        out.insert(out.end(), p.value->data().begin(), p.value->data().end());
    return out;
}

inline void write_params(travel::Classifier& model, std::span<const double> flat) {
    std::size_t pos = 0;
    for (travel::ParamView& p : model.params()) {
        std::copy(flat.begin() + pos, flat.begin() + pos + p.value->size(),
                  p.value->data().begin());
        pos += p.value->size();
    }
}

inline std::vector<double> flatten_grads(travel::Classifier& model) {
    std::vector<double> out;
    for (travel::ParamView& p : model.params())
        out.insert(out.end(), p.grad->data().begin(), p.grad->data().end());
    return out;
}

// Cross-entropy over the train mask, eval-mode forward.
inline double model_loss(travel::Classifier& model, const travel::Dataset& ds) {
    travel::Rng unused(0);
    travel::Matrix logits = model.forward(ds, false, unused);
    std::vector<std::size_t> rows;
    std::vector<int> targets;
    for (std::size_t i = 0; i < ds.num_nodes(); ++i) {
        if (!ds.masks.train[i]) continue;
        rows.push_back(i);
        targets.push_back(model.config().task == travel::Task::kOccurrence
                              ? ds.labels_occurrence[i]
                              : ds.labels_severity[i]);
    }
    travel::Matrix sub(rows.size(), logits.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy(logits.row(rows[i]).begin(), logits.row(rows[i]).end(), sub.row(i).begin());
    return travel::cross_entropy(sub, targets).loss;
}

// Analytic gradient of model_loss via one backward pass.
inline std::vector<double> model_loss_grad(travel::Classifier& model, const travel::Dataset& ds) {
    travel::Rng unused(0);
    model.zero_grad();
    travel::Matrix logits = model.forward(ds, false, unused);
    std::vector<std::size_t> rows;
    std::vector<int> targets;
    for (std::size_t i = 0; i < ds.num_nodes(); ++i) {
        if (!ds.masks.train[i]) continue;
        rows.push_back(i);
        targets.push_back(model.config().task == travel::Task::kOccurrence
                              ? ds.labels_occurrence[i]
                              : ds.labels_severity[i]);
    }
    travel::Matrix sub(rows.size(), logits.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy(logits.row(rows[i]).begin(), logits.row(rows[i]).end(), sub.row(i).begin());
    travel::LossResult loss = travel::cross_entropy(sub, targets);
    travel::Matrix dfull(logits.rows(), logits.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy(loss.dlogits.row(i).begin(), loss.dlogits.row(i).end(),
                  dfull.row(rows[i]).begin());
    model.backward(ds, dfull);
    return flatten_grads(model);
}

// Central-difference check of the full model loss over every parameter.
inline travel::GradCheckReport model_grad_check(travel::Classifier& model,
                                                const travel::Dataset& ds, double h = 1e-5) {
    const std::vector<double> x0 = flatten_params(model);
    const std::vector<double> analytic = model_loss_grad(model, ds);
    auto f = [&](std::span<const double> x) {
        write_params(model, x);
        return model_loss(model, ds);
    };
    travel::GradCheckReport report = travel::grad_check(f, x0, analytic, h);
    write_params(model, x0);
    return report;
}

}  // namespace testutil
