// model.hpp
//
// Learnable tensors of the attention LSTM decoder and their seeded
// initialization. Weight matrices are stored (input_dim x output_dim) and
// applied as W^T * x to column vectors; gradients then take the familiar
// outer-product form x * dy^T with identical shapes.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "attnbeam/errors.hpp"

namespace attnbeam {

struct ModelConfig {
    int vocab_size = 0;   // V
    int embed_dim = 0;    // E
    int feature_dim = 0;  // D
    int hidden_dim = 0;   // H
    int attn_dim = 0;     // A

    bool operator==(const ModelConfig&) const = default;

    void validate() const {
        if (vocab_size < 1 || embed_dim < 1 || feature_dim < 1 || hidden_dim < 1 || attn_dim < 1) {
            throw Error(ErrorCode::InvalidArgument, "all model dimensions must be positive");
        }
    }
};

// One of the four LSTM gates. `input` acts on [embedding; context].
struct LstmGate {
    Eigen::MatrixXd input;   // (E+D) x H
    Eigen::MatrixXd hidden;  // H x H
    Eigen::VectorXd bias;    // H
};

struct ModelParams {
    ModelConfig config;

    Eigen::MatrixXd embedding;  // V x E

    Eigen::MatrixXd attn_feature_proj;  // D x A
    Eigen::MatrixXd attn_hidden_proj;   // H x A
    Eigen::VectorXd attn_score_weight;  // A
    Eigen::VectorXd attn_score_bias;    // A

    LstmGate gate_input;
    LstmGate gate_forget;
    LstmGate gate_cell;
    LstmGate gate_output;

    Eigen::MatrixXd init_hidden_proj;  // D x H
    Eigen::VectorXd init_hidden_bias;  // H
    Eigen::MatrixXd init_cell_proj;    // D x H
    Eigen::VectorXd init_cell_bias;    // H

    Eigen::MatrixXd output_proj;  // H x V
    Eigen::VectorXd output_bias;  // V
};

struct DecoderState {
    Eigen::VectorXd hidden;  // H
    Eigen::VectorXd cell;    // H
    int step = 0;            // t, increments by 1 per decode step
};

// Visits every tensor with a stable name, in a fixed order. The order is
// load-bearing: seeded initialization, checkpoint layout, and the
// finite-difference sweep all iterate through here.
template <typename Params, typename Fn>
void for_each_tensor(Params& params, Fn&& fn) {
    fn("embedding", params.embedding);

    fn("attn_feature_proj", params.attn_feature_proj);
    fn("attn_hidden_proj", params.attn_hidden_proj);
    fn("attn_score_weight", params.attn_score_weight);
    fn("attn_score_bias", params.attn_score_bias);

    fn("gate_input.input", params.gate_input.input);
    fn("gate_input.hidden", params.gate_input.hidden);
    fn("gate_input.bias", params.gate_input.bias);
    fn("gate_forget.input", params.gate_forget.input);
    fn("gate_forget.hidden", params.gate_forget.hidden);
    fn("gate_forget.bias", params.gate_forget.bias);
    fn("gate_cell.input", params.gate_cell.input);
    fn("gate_cell.hidden", params.gate_cell.hidden);
    fn("gate_cell.bias", params.gate_cell.bias);
    fn("gate_output.input", params.gate_output.input);
    fn("gate_output.hidden", params.gate_output.hidden);
    fn("gate_output.bias", params.gate_output.bias);

    fn("init_hidden_proj", params.init_hidden_proj);
    fn("init_hidden_bias", params.init_hidden_bias);
    fn("init_cell_proj", params.init_cell_proj);
    fn("init_cell_bias", params.init_cell_bias);

    fn("output_proj", params.output_proj);
    fn("output_bias", params.output_bias);
}

inline ModelParams zeros_like_config(const ModelConfig& config) {
    config.validate();
    const int v = config.vocab_size;
    const int e = config.embed_dim;
    const int d = config.feature_dim;
    const int h = config.hidden_dim;
    const int a = config.attn_dim;

    ModelParams p;
    p.config = config;
    p.embedding = Eigen::MatrixXd::Zero(v, e);
    p.attn_feature_proj = Eigen::MatrixXd::Zero(d, a);
    p.attn_hidden_proj = Eigen::MatrixXd::Zero(h, a);
    p.attn_score_weight = Eigen::VectorXd::Zero(a);
    p.attn_score_bias = Eigen::VectorXd::Zero(a);
    for (LstmGate* gate : {&p.gate_input, &p.gate_forget, &p.gate_cell, &p.gate_output}) {
        gate->input = Eigen::MatrixXd::Zero(e + d, h);
        gate->hidden = Eigen::MatrixXd::Zero(h, h);
        gate->bias = Eigen::VectorXd::Zero(h);
    }
    p.init_hidden_proj = Eigen::MatrixXd::Zero(d, h);
    p.init_hidden_bias = Eigen::VectorXd::Zero(h);
    p.init_cell_proj = Eigen::MatrixXd::Zero(d, h);
    p.init_cell_bias = Eigen::VectorXd::Zero(h);
    p.output_proj = Eigen::MatrixXd::Zero(h, v);
    p.output_bias = Eigen::VectorXd::Zero(v);
    return p;
}

inline ModelParams zeros_like(const ModelParams& params) { return zeros_like_config(params.config); }

namespace detail {

inline double param_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace detail

// Weights uniform in [-0.1, 0.1] from the seed, biases zero except the
// LSTM forget-gate bias, which starts at 1.0.
inline ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
    ModelParams p = zeros_like_config(config);
    std::mt19937_64 rng(seed);
    for_each_tensor(p, [&rng](const char* name, auto& tensor) {
        const std::string n(name);
        const bool is_bias = n.size() >= 4 && n.compare(n.size() - 4, 4, "bias") == 0;
        if (is_bias) return;
        for (Eigen::Index i = 0; i < tensor.size(); ++i) {
            tensor(i) = 0.2 * detail::param_unit(rng) - 0.1;
        }
    });
    p.gate_forget.bias.setConstant(1.0);
    return p;
}

inline bool all_finite(const ModelParams& params) {
    bool ok = true;
    for_each_tensor(const_cast<ModelParams&>(params), [&ok](const char*, auto& tensor) {
        if (!tensor.allFinite()) ok = false;
    });
    return ok;
}

// Visits matching tensors of two parameter sets in lockstep.
template <typename PA, typename PB, typename Fn>
void for_each_tensor_pair(PA& a, PB& b, Fn&& fn) {
    auto visit = [&fn](const char* name, auto& ta, auto& tb) { fn(name, ta, tb); };
    visit("embedding", a.embedding, b.embedding);
    visit("attn_feature_proj", a.attn_feature_proj, b.attn_feature_proj);
    visit("attn_hidden_proj", a.attn_hidden_proj, b.attn_hidden_proj);
    visit("attn_score_weight", a.attn_score_weight, b.attn_score_weight);
    visit("attn_score_bias", a.attn_score_bias, b.attn_score_bias);
    visit("gate_input.input", a.gate_input.input, b.gate_input.input);
    visit("gate_input.hidden", a.gate_input.hidden, b.gate_input.hidden);
    visit("gate_input.bias", a.gate_input.bias, b.gate_input.bias);
    visit("gate_forget.input", a.gate_forget.input, b.gate_forget.input);
    visit("gate_forget.hidden", a.gate_forget.hidden, b.gate_forget.hidden);
    visit("gate_forget.bias", a.gate_forget.bias, b.gate_forget.bias);
    visit("gate_cell.input", a.gate_cell.input, b.gate_cell.input);
    visit("gate_cell.hidden", a.gate_cell.hidden, b.gate_cell.hidden);
    visit("gate_cell.bias", a.gate_cell.bias, b.gate_cell.bias);
    visit("gate_output.input", a.gate_output.input, b.gate_output.input);
    visit("gate_output.hidden", a.gate_output.hidden, b.gate_output.hidden);
    visit("gate_output.bias", a.gate_output.bias, b.gate_output.bias);
    visit("init_hidden_proj", a.init_hidden_proj, b.init_hidden_proj);
    visit("init_hidden_bias", a.init_hidden_bias, b.init_hidden_bias);
    visit("init_cell_proj", a.init_cell_proj, b.init_cell_proj);
    visit("init_cell_bias", a.init_cell_bias, b.init_cell_bias);
    visit("output_proj", a.output_proj, b.output_proj);
    visit("output_bias", a.output_bias, b.output_bias);
}

// Elementwise in-place accumulate: target += source. Shapes must agree.
inline void accumulate(ModelParams& target, const ModelParams& source) {
    for_each_tensor_pair(target, const_cast<ModelParams&>(source),
                         [](const char*, auto& dst, auto& src) { dst += src; });
}

} // namespace attnbeam
