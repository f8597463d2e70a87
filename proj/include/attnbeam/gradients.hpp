// gradients.hpp
//
// Exact analytic gradients of the teacher-forced loss (mean cross-entropy
// plus the doubly-stochastic attention penalty) with respect to every
// model tensor. Backpropagation runs through the output softmax, the LSTM
// cell across time, the attention network, the embedding rows, and the
// init maps. Verified against central finite differences in the tests.

#pragma once

#include <vector>

#include <Eigen/Dense>

#include "attnbeam/decoder.hpp"
#include "attnbeam/model.hpp"

namespace attnbeam {

struct GradResult {
    ForwardResult forward;
    ModelParams grads;  // congruent to ModelParams
};

inline GradResult gradients(const std::vector<TokenId>& gold, const Eigen::MatrixXd& features,
                            const ModelParams& params, double lambda_ds) {
    const detail::ForwardCache cache = detail::forward_cached(gold, features, params);
    const ModelConfig& cfg = params.config;
    const int steps = static_cast<int>(cache.steps.size());
    const int pixels = static_cast<int>(features.rows());
    const double inv_steps = 1.0 / static_cast<double>(steps);

    ModelParams grads = zeros_like(params);

    // Column sums of alpha feed the penalty gradient at every step.
    Eigen::VectorXd alpha_colsum = Eigen::VectorXd::Zero(pixels);
    for (const auto& sc : cache.steps) alpha_colsum += sc.alpha;
    const Eigen::VectorXd dpenalty_dalpha = 2.0 * lambda_ds * (alpha_colsum.array() - 1.0).matrix();

    Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(cfg.hidden_dim);
    Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(cfg.hidden_dim);

    for (int t = steps - 1; t >= 0; --t) {
        const detail::StepCache& sc = cache.steps[static_cast<std::size_t>(t)];

        Eigen::VectorXd dlogits = sc.probs * inv_steps;
        dlogits(sc.target_token) -= inv_steps;
        grads.output_proj.noalias() += sc.hidden * dlogits.transpose();
        grads.output_bias += dlogits;

        const Eigen::VectorXd dh = params.output_proj * dlogits + dh_next;
        const Eigen::VectorXd dout_gate = dh.cwiseProduct(sc.cell_tanh);
        const Eigen::VectorXd dcell =
            (dh.cwiseProduct(sc.out_gate).array() * (1.0 - sc.cell_tanh.array().square())).matrix() + dc_next;
        const Eigen::VectorXd dforget_gate = dcell.cwiseProduct(sc.c_prev);
        const Eigen::VectorXd din_gate = dcell.cwiseProduct(sc.cell_cand);
        const Eigen::VectorXd dcell_cand = dcell.cwiseProduct(sc.in_gate);
        dc_next = dcell.cwiseProduct(sc.forget_gate);

        const Eigen::VectorXd dz_in =
            (din_gate.array() * sc.in_gate.array() * (1.0 - sc.in_gate.array())).matrix();
        const Eigen::VectorXd dz_forget =
            (dforget_gate.array() * sc.forget_gate.array() * (1.0 - sc.forget_gate.array())).matrix();
        const Eigen::VectorXd dz_cand = (dcell_cand.array() * (1.0 - sc.cell_cand.array().square())).matrix();
        const Eigen::VectorXd dz_out =
            (dout_gate.array() * sc.out_gate.array() * (1.0 - sc.out_gate.array())).matrix();

        Eigen::VectorXd dx = Eigen::VectorXd::Zero(cfg.embed_dim + cfg.feature_dim);
        Eigen::VectorXd dh_prev = Eigen::VectorXd::Zero(cfg.hidden_dim);
        const auto backprop_gate = [&](LstmGate& grad_gate, const LstmGate& gate, const Eigen::VectorXd& dz) {
            grad_gate.input.noalias() += sc.x * dz.transpose();
            grad_gate.hidden.noalias() += sc.h_prev * dz.transpose();
            grad_gate.bias += dz;
            dx.noalias() += gate.input * dz;
            dh_prev.noalias() += gate.hidden * dz;
        };
        backprop_gate(grads.gate_input, params.gate_input, dz_in);
        backprop_gate(grads.gate_forget, params.gate_forget, dz_forget);
        backprop_gate(grads.gate_cell, params.gate_cell, dz_cand);
        backprop_gate(grads.gate_output, params.gate_output, dz_out);

        grads.embedding.row(sc.input_token) += dx.head(cfg.embed_dim).transpose();

        // Attention path: context -> alpha -> softmax -> relu -> projections.
        const Eigen::VectorXd dcontext = dx.tail(cfg.feature_dim);
        Eigen::VectorXd dalpha = features * dcontext;
        dalpha += dpenalty_dalpha;
        const double mixed = sc.alpha.dot(dalpha);
        const Eigen::VectorXd dscores = (sc.alpha.array() * (dalpha.array() - mixed)).matrix();

        grads.attn_score_weight.noalias() += sc.attn_relu.transpose() * dscores;
        Eigen::MatrixXd dpre = dscores * params.attn_score_weight.transpose();  // P x A
        dpre = (sc.attn_pre.array() > 0.0).select(dpre, 0.0);

        grads.attn_feature_proj.noalias() += features.transpose() * dpre;
        const Eigen::VectorXd dshared = dpre.colwise().sum().transpose();
        grads.attn_hidden_proj.noalias() += sc.h_prev * dshared.transpose();
        grads.attn_score_bias += dshared;
        dh_prev.noalias() += params.attn_hidden_proj * dshared;

        dh_next = dh_prev;
    }

    // Into the init maps through the tanh.
    const Eigen::VectorXd dz_h0 = (dh_next.array() * (1.0 - cache.h0.array().square())).matrix();
    grads.init_hidden_proj.noalias() += cache.feat_mean * dz_h0.transpose();
    grads.init_hidden_bias += dz_h0;
    const Eigen::VectorXd dz_c0 = (dc_next.array() * (1.0 - cache.c0.array().square())).matrix();
    grads.init_cell_proj.noalias() += cache.feat_mean * dz_c0.transpose();
    grads.init_cell_bias += dz_c0;

    GradResult out;
    out.forward.cross_entropy = cache.cross_entropy;
    out.forward.penalty = cache.penalty;
    out.forward.loss = cache.cross_entropy + lambda_ds * cache.penalty;
    out.forward.alpha.resize(steps, pixels);
    out.forward.log_probs.resize(steps, cfg.vocab_size);
    for (int t = 0; t < steps; ++t) {
        const auto& sc = cache.steps[static_cast<std::size_t>(t)];
        out.forward.alpha.row(t) = sc.alpha.transpose();
        out.forward.log_probs.row(t) = sc.log_probs.transpose();
    }
    out.grads = std::move(grads);
    return out;
}

inline GradResult gradients(const std::vector<TokenId>& gold, const FeatureGrid& features,
                            const ModelParams& params, double lambda_ds) {
    return gradients(gold, features.as_matrix(), params, lambda_ds);
}

} // namespace attnbeam
