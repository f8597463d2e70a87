// decoder.hpp
//
// Forward operations of the soft-attention LSTM decoder: state
// initialization from the mean feature vector, the additive attention
// step (add, ReLU, linear, softmax), one LSTM decode step, and the
// teacher-forced forward pass with the doubly-stochastic penalty.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "attnbeam/errors.hpp"
#include "attnbeam/features.hpp"
#include "attnbeam/model.hpp"
#include "attnbeam/wordmap.hpp"

namespace attnbeam {

namespace detail {

inline void check_feature_dim(Eigen::Index dim, const ModelConfig& config) {
    if (dim != config.feature_dim) {
        throw Error(ErrorCode::DimMismatch,
                    "feature dim " + std::to_string(dim) + " does not match model D=" +
                        std::to_string(config.feature_dim));
    }
}

inline Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits) {
    const double peak = logits.maxCoeff();
    const Eigen::VectorXd shifted = logits.array() - peak;
    const double lse = std::log(shifted.array().exp().sum());
    return shifted.array() - lse;
}

inline Eigen::VectorXd sigmoid(const Eigen::VectorXd& z) {
    return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

} // namespace detail

// h0 = tanh(mean_features * W + b), likewise c0. t starts at 0.
inline DecoderState init_state(const Eigen::MatrixXd& features, const ModelParams& params) {
    detail::check_feature_dim(features.cols(), params.config);
    const Eigen::VectorXd mean = features.colwise().mean().transpose();
    DecoderState state;
    state.hidden = (params.init_hidden_proj.transpose() * mean + params.init_hidden_bias).array().tanh();
    state.cell = (params.init_cell_proj.transpose() * mean + params.init_cell_bias).array().tanh();
    state.step = 0;
    return state;
}

inline DecoderState init_state(const FeatureGrid& features, const ModelParams& params) {
    return init_state(features.as_matrix(), params);
}

struct AttendResult {
    Eigen::VectorXd alpha;    // P, softmax-normalized
    Eigen::VectorXd context;  // D, attention-weighted feature sum
};

// Per pixel: score_p = relu(f_p W_f + h W_h + b) . w ; alpha = softmax(score);
// context = sum_p alpha_p f_p.
inline AttendResult attend(const Eigen::MatrixXd& features, const Eigen::VectorXd& hidden,
                           const ModelParams& params) {
    detail::check_feature_dim(features.cols(), params.config);
    if (hidden.size() != params.config.hidden_dim) {
        throw Error(ErrorCode::DimMismatch, "hidden size " + std::to_string(hidden.size()) +
                                                " does not match model H=" +
                                                std::to_string(params.config.hidden_dim));
    }
    const Eigen::RowVectorXd shared =
        (params.attn_hidden_proj.transpose() * hidden + params.attn_score_bias).transpose();
    Eigen::MatrixXd pre = features * params.attn_feature_proj;  // P x A
    pre.rowwise() += shared;
    const Eigen::MatrixXd relu = pre.cwiseMax(0.0);
    const Eigen::VectorXd scores = relu * params.attn_score_weight;  // P

    const double peak = scores.maxCoeff();
    Eigen::VectorXd alpha = (scores.array() - peak).exp();
    alpha /= alpha.sum();

    AttendResult out;
    out.context = features.transpose() * alpha;
    out.alpha = std::move(alpha);
    return out;
}

inline AttendResult attend(const FeatureGrid& features, const Eigen::VectorXd& hidden,
                           const ModelParams& params) {
    return attend(features.as_matrix(), hidden, params);
}

struct StepResult {
    DecoderState state;
    Eigen::VectorXd log_probs;  // V, exponentiates to a distribution
    Eigen::VectorXd alpha;      // P
};

// One teacher-forcible decode step: attend with the current hidden state,
// feed [embedding(prev); context] through the LSTM cell, project the new
// hidden state to vocabulary log-probabilities.
inline StepResult decode_step(const DecoderState& state, TokenId prev_token,
                              const Eigen::MatrixXd& features, const ModelParams& params) {
    const ModelConfig& cfg = params.config;
    if (prev_token < 0 || prev_token >= cfg.vocab_size) {
        throw Error(ErrorCode::TokenOutOfRange, "token id " + std::to_string(prev_token) +
                                                    " outside vocabulary of size " +
                                                    std::to_string(cfg.vocab_size));
    }
    AttendResult att = attend(features, state.hidden, params);

    Eigen::VectorXd x(cfg.embed_dim + cfg.feature_dim);
    x.head(cfg.embed_dim) = params.embedding.row(prev_token).transpose();
    x.tail(cfg.feature_dim) = att.context;

    const auto gate_pre = [&x, &state](const LstmGate& g) {
        return (g.input.transpose() * x + g.hidden.transpose() * state.hidden + g.bias).eval();
    };
    const Eigen::VectorXd in_gate = detail::sigmoid(gate_pre(params.gate_input));
    const Eigen::VectorXd forget_gate = detail::sigmoid(gate_pre(params.gate_forget));
    const Eigen::VectorXd cell_cand = gate_pre(params.gate_cell).array().tanh();
    const Eigen::VectorXd out_gate = detail::sigmoid(gate_pre(params.gate_output));

    StepResult out;
    out.state.cell = forget_gate.cwiseProduct(state.cell) + in_gate.cwiseProduct(cell_cand);
    out.state.hidden = out_gate.cwiseProduct(out.state.cell.array().tanh().matrix());
    out.state.step = state.step + 1;
    out.log_probs = detail::log_softmax(params.output_proj.transpose() * out.state.hidden + params.output_bias);
    out.alpha = std::move(att.alpha);
    return out;
}

inline StepResult decode_step(const DecoderState& state, TokenId prev_token,
                              const FeatureGrid& features, const ModelParams& params) {
    return decode_step(state, prev_token, features.as_matrix(), params);
}

// sum_p (1 - sum_t alpha[t][p])^2 over a T x P attention matrix.
inline double doubly_stochastic_penalty(const Eigen::MatrixXd& alpha) {
    return (1.0 - alpha.colwise().sum().array()).square().sum();
}

struct ForwardResult {
    double loss = 0.0;           // cross_entropy + lambda_ds * penalty
    double cross_entropy = 0.0;  // mean -log p(gold_t) over the T steps
    double penalty = 0.0;        // unweighted doubly-stochastic term
    Eigen::MatrixXd alpha;       // T x P
    Eigen::MatrixXd log_probs;   // T x V
};

namespace detail {

// Everything the backward pass needs, captured per step.
struct StepCache {
    Eigen::VectorXd h_prev, c_prev;      // H
    Eigen::MatrixXd attn_pre;            // P x A, pre-ReLU
    Eigen::MatrixXd attn_relu;           // P x A
    Eigen::VectorXd alpha;               // P
    Eigen::VectorXd x;                   // E+D
    Eigen::VectorXd in_gate, forget_gate, cell_cand, out_gate;  // H
    Eigen::VectorXd cell, cell_tanh, hidden;                    // H
    Eigen::VectorXd probs;               // V
    Eigen::VectorXd log_probs;           // V
    TokenId input_token = 0;
    TokenId target_token = 0;
};

struct ForwardCache {
    Eigen::VectorXd feat_mean;  // D
    Eigen::VectorXd h0, c0;     // H, post-tanh
    std::vector<StepCache> steps;
    double cross_entropy = 0.0;
    double penalty = 0.0;
};

// Teacher-forced pass over gold content ids (no <start>/<end>); inputs are
// [<start>, gold...] and targets [gold..., <end>], T = len(gold)+1.
inline ForwardCache forward_cached(const std::vector<TokenId>& gold, const Eigen::MatrixXd& features,
                                   const ModelParams& params) {
    if (gold.empty()) {
        throw Error(ErrorCode::EmptyReference, "teacher forcing needs a non-empty reference");
    }
    const ModelConfig& cfg = params.config;
    check_feature_dim(features.cols(), cfg);
    for (TokenId id : gold) {
        if (id < 0 || id >= cfg.vocab_size) {
            throw Error(ErrorCode::TokenOutOfRange, "gold token id " + std::to_string(id) +
                                                        " outside vocabulary of size " +
                                                        std::to_string(cfg.vocab_size));
        }
    }

    const int steps = static_cast<int>(gold.size()) + 1;
    ForwardCache cache;
    cache.feat_mean = features.colwise().mean().transpose();
    cache.h0 = (params.init_hidden_proj.transpose() * cache.feat_mean + params.init_hidden_bias).array().tanh();
    cache.c0 = (params.init_cell_proj.transpose() * cache.feat_mean + params.init_cell_bias).array().tanh();
    cache.steps.resize(static_cast<std::size_t>(steps));

    Eigen::VectorXd h = cache.h0;
    Eigen::VectorXd c = cache.c0;
    double ce_sum = 0.0;
    for (int t = 0; t < steps; ++t) {
        StepCache& sc = cache.steps[static_cast<std::size_t>(t)];
        sc.input_token = (t == 0) ? WordMap::kStart : gold[static_cast<std::size_t>(t - 1)];
        sc.target_token = (t < steps - 1) ? gold[static_cast<std::size_t>(t)] : WordMap::kEnd;
        sc.h_prev = h;
        sc.c_prev = c;

        const Eigen::RowVectorXd shared =
            (params.attn_hidden_proj.transpose() * h + params.attn_score_bias).transpose();
        sc.attn_pre = features * params.attn_feature_proj;
        sc.attn_pre.rowwise() += shared;
        sc.attn_relu = sc.attn_pre.cwiseMax(0.0);
        const Eigen::VectorXd scores = sc.attn_relu * params.attn_score_weight;
        const double score_peak = scores.maxCoeff();
        sc.alpha = (scores.array() - score_peak).exp();
        sc.alpha /= sc.alpha.sum();
        const Eigen::VectorXd context = features.transpose() * sc.alpha;

        sc.x.resize(cfg.embed_dim + cfg.feature_dim);
        sc.x.head(cfg.embed_dim) = params.embedding.row(sc.input_token).transpose();
        sc.x.tail(cfg.feature_dim) = context;

        const auto gate_pre = [&sc](const LstmGate& g) {
            return (g.input.transpose() * sc.x + g.hidden.transpose() * sc.h_prev + g.bias).eval();
        };
        sc.in_gate = sigmoid(gate_pre(params.gate_input));
        sc.forget_gate = sigmoid(gate_pre(params.gate_forget));
        sc.cell_cand = gate_pre(params.gate_cell).array().tanh();
        sc.out_gate = sigmoid(gate_pre(params.gate_output));
        sc.cell = sc.forget_gate.cwiseProduct(sc.c_prev) + sc.in_gate.cwiseProduct(sc.cell_cand);
        sc.cell_tanh = sc.cell.array().tanh();
        sc.hidden = sc.out_gate.cwiseProduct(sc.cell_tanh);

        const Eigen::VectorXd logits = params.output_proj.transpose() * sc.hidden + params.output_bias;
        sc.log_probs = log_softmax(logits);
        sc.probs = sc.log_probs.array().exp();
        ce_sum -= sc.log_probs(sc.target_token);

        h = sc.hidden;
        c = sc.cell;
    }
    cache.cross_entropy = ce_sum / static_cast<double>(steps);

    double penalty = 0.0;
    for (Eigen::Index p = 0; p < features.rows(); ++p) {
        double col = 0.0;
        for (const auto& sc : cache.steps) col += sc.alpha(p);
        penalty += (1.0 - col) * (1.0 - col);
    }
    cache.penalty = penalty;
    return cache;
}

} // namespace detail

inline ForwardResult forward_teacher_forced(const std::vector<TokenId>& gold,
                                            const Eigen::MatrixXd& features, const ModelParams& params,
                                            double lambda_ds) {
    detail::ForwardCache cache = detail::forward_cached(gold, features, params);
    const int steps = static_cast<int>(cache.steps.size());
    const int pixels = static_cast<int>(features.rows());

    ForwardResult out;
    out.cross_entropy = cache.cross_entropy;
    out.penalty = cache.penalty;
    out.loss = cache.cross_entropy + lambda_ds * cache.penalty;
    out.alpha.resize(steps, pixels);
    out.log_probs.resize(steps, params.config.vocab_size);
    for (int t = 0; t < steps; ++t) {
        const auto& sc = cache.steps[static_cast<std::size_t>(t)];
        out.alpha.row(t) = sc.alpha.transpose();
        out.log_probs.row(t) = sc.log_probs.transpose();
    }
    return out;
}

inline ForwardResult forward_teacher_forced(const std::vector<TokenId>& gold, const FeatureGrid& features,
                                            const ModelParams& params, double lambda_ds) {
    return forward_teacher_forced(gold, features.as_matrix(), params, lambda_ds);
}

} // namespace attnbeam
