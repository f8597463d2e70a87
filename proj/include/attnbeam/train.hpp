// train.hpp
//
// Plain gradient descent over per-record teacher-forced losses, with
// absolute gradient clipping and a seed-determined shuffle order. Single
// threaded on purpose: reruns with the same seed reproduce the final
// parameters bit for bit.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "attnbeam/dataset.hpp"
#include "attnbeam/errors.hpp"
#include "attnbeam/gradients.hpp"
#include "attnbeam/model.hpp"
#include "attnbeam/wordmap.hpp"

namespace attnbeam {

struct TrainConfig {
    double lambda_ds = 1.0;
    double learning_rate = 4e-4;
    int epochs = 1;
    std::uint64_t seed = 0;
    std::optional<double> grad_clip = 5.0;  // absolute-value clip per entry

    void validate() const {
        if (lambda_ds < 0.0) throw Error(ErrorCode::InvalidArgument, "lambda_ds must be >= 0");
        if (learning_rate < 0.0) throw Error(ErrorCode::InvalidArgument, "learning_rate must be >= 0");
        if (epochs < 1) throw Error(ErrorCode::InvalidArgument, "epochs must be >= 1");
        if (grad_clip && *grad_clip <= 0.0) throw Error(ErrorCode::InvalidArgument, "grad_clip must be > 0");
    }
};

struct EpochStats {
    int epoch = 0;          // 0-based, monotone
    double mean_loss = 0.0; // mean total objective per record
    double ds_penalty = 0.0; // mean lambda-weighted penalty per record
};

struct TrainResult {
    ModelParams params;
    std::vector<EpochStats> trace;
};

// First reference of each record, encoded to content ids (no start/end).
struct TrainingExample {
    std::vector<TokenId> gold;
    Eigen::MatrixXd features;
};

inline std::vector<TrainingExample> prepare_examples(const std::vector<CaptionRecord>& dataset,
                                                     const WordMap& wordmap) {
    std::vector<TrainingExample> examples;
    examples.reserve(dataset.size());
    for (const auto& rec : dataset) {
        if (rec.refs.empty() || rec.refs.front().empty()) {
            throw Error(ErrorCode::EmptyReference, "record '" + rec.id + "' has no usable reference");
        }
        TrainingExample ex;
        ex.gold.reserve(rec.refs.front().size());
        for (const auto& tok : rec.refs.front()) ex.gold.push_back(wordmap.id_of(tok));
        ex.features = rec.features.as_matrix();
        examples.push_back(std::move(ex));
    }
    return examples;
}

inline TrainResult train(const std::vector<CaptionRecord>& dataset, const WordMap& wordmap,
                         ModelParams params, const TrainConfig& cfg) {
    cfg.validate();
    if (dataset.empty()) throw Error(ErrorCode::EmptyCorpus, "training dataset is empty");
    const std::vector<TrainingExample> examples = prepare_examples(dataset, wordmap);

    std::mt19937_64 shuffle_rng(cfg.seed);
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    result.trace.reserve(static_cast<std::size_t>(cfg.epochs));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double loss_sum = 0.0;
        double penalty_sum = 0.0;
        for (std::size_t idx : order) {
            const TrainingExample& ex = examples[idx];
            GradResult gr = gradients(ex.gold, ex.features, params, cfg.lambda_ds);
            if (!std::isfinite(gr.forward.loss)) {
                throw Error(ErrorCode::NonFiniteLoss, "epoch " + std::to_string(epoch));
            }
            loss_sum += gr.forward.loss;
            penalty_sum += cfg.lambda_ds * gr.forward.penalty;

            for_each_tensor_pair(params, gr.grads, [&cfg](const char*, auto& param, auto& grad) {
                if (cfg.grad_clip) {
                    const double clip = *cfg.grad_clip;
                    param -= cfg.learning_rate * grad.cwiseMax(-clip).cwiseMin(clip);
                } else {
                    param -= cfg.learning_rate * grad;
                }
            });
        }
        if (!all_finite(params)) {
            throw Error(ErrorCode::NonFiniteLoss, "epoch " + std::to_string(epoch));
        }
        result.trace.push_back(EpochStats{epoch, loss_sum / static_cast<double>(examples.size()),
                                          penalty_sum / static_cast<double>(examples.size())});
    }
    result.params = std::move(params);
    return result;
}

// Mean per-token cross-entropy of the teacher-forced pass over a dataset,
// penalty excluded. The overfit acceptance threshold is stated on this.
inline double mean_token_cross_entropy(const std::vector<CaptionRecord>& dataset, const WordMap& wordmap,
                                       const ModelParams& params) {
    if (dataset.empty()) throw Error(ErrorCode::EmptyCorpus, "dataset is empty");
    const std::vector<TrainingExample> examples = prepare_examples(dataset, wordmap);
    double token_ce = 0.0;
    long long tokens = 0;
    for (const auto& ex : examples) {
        const ForwardResult fr = forward_teacher_forced(ex.gold, ex.features, params, 0.0);
        const long long steps = static_cast<long long>(ex.gold.size()) + 1;
        token_ce += fr.cross_entropy * static_cast<double>(steps);
        tokens += steps;
    }
    return token_ce / static_cast<double>(tokens);
}

} // namespace attnbeam
