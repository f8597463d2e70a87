// Independent oracles kept away from the library implementation paths:
// plain-loop re-implementations of the decoder math, a central
// finite-difference gradient sweep, and brute-force n-gram scoring.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "attnbeam/decoder.hpp"
#include "attnbeam/features.hpp"
#include "attnbeam/gradients.hpp"
#include "attnbeam/metrics.hpp"
#include "attnbeam/model.hpp"

namespace testsup {

inline double rng_unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline attnbeam::FeatureGrid random_grid(int pixels, int dim, std::mt19937_64& rng) {
    attnbeam::FeatureGrid grid(pixels, dim);
    for (int p = 0; p < pixels; ++p) {
        for (int d = 0; d < dim; ++d) grid.at(p, d) = static_cast<float>(2.0 * rng_unit(rng) - 1.0);
    }
    return grid;
}

inline attnbeam::ModelParams random_params(const attnbeam::ModelConfig& config, std::mt19937_64& rng,
                                           double scale = 0.5) {
    attnbeam::ModelParams p = attnbeam::zeros_like_config(config);
    attnbeam::for_each_tensor(p, [&rng, scale](const char*, auto& tensor) {
        for (Eigen::Index i = 0; i < tensor.size(); ++i) tensor(i) = scale * (2.0 * rng_unit(rng) - 1.0);
    });
    return p;
}

// --- plain-loop decoder oracles (no Eigen products) ------------------------

inline std::vector<double> oracle_init_hidden(const attnbeam::FeatureGrid& grid,
                                              const attnbeam::ModelParams& params, bool cell) {
    const int dim = grid.dim();
    const int hidden = params.config.hidden_dim;
    std::vector<double> mean(static_cast<std::size_t>(dim), 0.0);
    for (int p = 0; p < grid.pixels(); ++p) {
        for (int d = 0; d < dim; ++d) mean[static_cast<std::size_t>(d)] += static_cast<double>(grid.at(p, d));
    }
    for (auto& v : mean) v /= grid.pixels();

    const Eigen::MatrixXd& proj = cell ? params.init_cell_proj : params.init_hidden_proj;
    const Eigen::VectorXd& bias = cell ? params.init_cell_bias : params.init_hidden_bias;
    std::vector<double> out(static_cast<std::size_t>(hidden), 0.0);
    for (int h = 0; h < hidden; ++h) {
        double z = bias(h);
        for (int d = 0; d < dim; ++d) z += mean[static_cast<std::size_t>(d)] * proj(d, h);
        out[static_cast<std::size_t>(h)] = std::tanh(z);
    }
    return out;
}

struct OracleStep {
    std::vector<double> alpha;
    std::vector<double> hidden;
    std::vector<double> cell;
    std::vector<double> log_probs;
};

// One full decode step with scalar loops, mirroring the published
// equations rather than the library's matrix formulation.
inline OracleStep oracle_decode_step(const std::vector<double>& h_prev, const std::vector<double>& c_prev,
                                     attnbeam::TokenId prev_token, const attnbeam::FeatureGrid& grid,
                                     const attnbeam::ModelParams& params) {
    const auto& cfg = params.config;
    const int pixels = grid.pixels();

    // attention scores
    std::vector<double> scores(static_cast<std::size_t>(pixels), 0.0);
    for (int p = 0; p < pixels; ++p) {
        double s = 0.0;
        for (int a = 0; a < cfg.attn_dim; ++a) {
            double pre = params.attn_score_bias(a);
            for (int d = 0; d < cfg.feature_dim; ++d) pre += grid.at(p, d) * params.attn_feature_proj(d, a);
            for (int h = 0; h < cfg.hidden_dim; ++h) {
                pre += h_prev[static_cast<std::size_t>(h)] * params.attn_hidden_proj(h, a);
            }
            if (pre > 0.0) s += pre * params.attn_score_weight(a);
        }
        scores[static_cast<std::size_t>(p)] = s;
    }
    double peak = scores[0];
    for (double s : scores) peak = std::max(peak, s);
    double z = 0.0;
    std::vector<double> alpha(static_cast<std::size_t>(pixels), 0.0);
    for (int p = 0; p < pixels; ++p) {
        alpha[static_cast<std::size_t>(p)] = std::exp(scores[static_cast<std::size_t>(p)] - peak);
        z += alpha[static_cast<std::size_t>(p)];
    }
    for (auto& a : alpha) a /= z;

    std::vector<double> context(static_cast<std::size_t>(cfg.feature_dim), 0.0);
    for (int p = 0; p < pixels; ++p) {
        for (int d = 0; d < cfg.feature_dim; ++d) {
            context[static_cast<std::size_t>(d)] += alpha[static_cast<std::size_t>(p)] * grid.at(p, d);
        }
    }

    std::vector<double> x(static_cast<std::size_t>(cfg.embed_dim + cfg.feature_dim));
    for (int e = 0; e < cfg.embed_dim; ++e) x[static_cast<std::size_t>(e)] = params.embedding(prev_token, e);
    for (int d = 0; d < cfg.feature_dim; ++d) {
        x[static_cast<std::size_t>(cfg.embed_dim + d)] = context[static_cast<std::size_t>(d)];
    }

    const auto gate = [&](const attnbeam::LstmGate& g, int h) {
        double pre = g.bias(h);
        for (std::size_t i = 0; i < x.size(); ++i) pre += x[i] * g.input(static_cast<Eigen::Index>(i), h);
        for (int k = 0; k < cfg.hidden_dim; ++k) pre += h_prev[static_cast<std::size_t>(k)] * g.hidden(k, h);
        return pre;
    };

    OracleStep out;
    out.alpha = std::move(alpha);
    out.hidden.resize(static_cast<std::size_t>(cfg.hidden_dim));
    out.cell.resize(static_cast<std::size_t>(cfg.hidden_dim));
    for (int h = 0; h < cfg.hidden_dim; ++h) {
        const double ig = 1.0 / (1.0 + std::exp(-gate(params.gate_input, h)));
        const double fg = 1.0 / (1.0 + std::exp(-gate(params.gate_forget, h)));
        const double cc = std::tanh(gate(params.gate_cell, h));
        const double og = 1.0 / (1.0 + std::exp(-gate(params.gate_output, h)));
        const double c = fg * c_prev[static_cast<std::size_t>(h)] + ig * cc;
        out.cell[static_cast<std::size_t>(h)] = c;
        out.hidden[static_cast<std::size_t>(h)] = og * std::tanh(c);
    }

    std::vector<double> logits(static_cast<std::size_t>(cfg.vocab_size), 0.0);
    for (int v = 0; v < cfg.vocab_size; ++v) {
        double s = params.output_bias(v);
        for (int h = 0; h < cfg.hidden_dim; ++h) {
            s += out.hidden[static_cast<std::size_t>(h)] * params.output_proj(h, v);
        }
        logits[static_cast<std::size_t>(v)] = s;
    }
    double lpeak = logits[0];
    for (double s : logits) lpeak = std::max(lpeak, s);
    double lse = 0.0;
    for (double s : logits) lse += std::exp(s - lpeak);
    lse = std::log(lse);
    out.log_probs.resize(static_cast<std::size_t>(cfg.vocab_size));
    for (int v = 0; v < cfg.vocab_size; ++v) {
        out.log_probs[static_cast<std::size_t>(v)] = logits[static_cast<std::size_t>(v)] - lpeak - lse;
    }
    return out;
}

// --- finite differences -----------------------------------------------------

struct FiniteDiffWorst {
    double rel_error = 0.0;
    std::string tensor;
    Eigen::Index index = 0;
};

// Central differences against the analytic gradient of the full
// teacher-forced loss. Returns the worst relative error over every
// parameter entry, measured as |analytic - fd| / max(1, |analytic|).
inline FiniteDiffWorst finite_diff_check(const std::vector<attnbeam::TokenId>& gold,
                                         const attnbeam::FeatureGrid& grid, attnbeam::ModelParams params,
                                         double lambda_ds, double eps = 1e-5) {
    const Eigen::MatrixXd features = grid.as_matrix();
    const attnbeam::GradResult analytic = attnbeam::gradients(gold, features, params, lambda_ds);

    FiniteDiffWorst worst;
    attnbeam::for_each_tensor_pair(
        params, const_cast<attnbeam::ModelParams&>(analytic.grads),
        [&](const char* name, auto& tensor, auto& grad) {
            for (Eigen::Index i = 0; i < tensor.size(); ++i) {
                const double keep = tensor(i);
                tensor(i) = keep + eps;
                const double up = attnbeam::forward_teacher_forced(gold, features, params, lambda_ds).loss;
                tensor(i) = keep - eps;
                const double down = attnbeam::forward_teacher_forced(gold, features, params, lambda_ds).loss;
                tensor(i) = keep;
                const double fd = (up - down) / (2.0 * eps);
                const double rel = std::abs(grad(i) - fd) / std::max(1.0, std::abs(grad(i)));
                if (rel > worst.rel_error) {
                    worst.rel_error = rel;
                    worst.tensor = name;
                    worst.index = i;
                }
            }
        });
    return worst;
}

// --- brute-force n-gram scoring ---------------------------------------------

inline std::vector<std::vector<std::string>> all_ngrams(const attnbeam::TokenSeq& seq, int n) {
    std::vector<std::vector<std::string>> out;
    if (static_cast<int>(seq.size()) < n) return out;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= seq.size(); ++i) {
        out.emplace_back(seq.begin() + static_cast<std::ptrdiff_t>(i),
                         seq.begin() + static_cast<std::ptrdiff_t>(i + static_cast<std::size_t>(n)));
    }
    return out;
}

inline int count_occurrences(const std::vector<std::vector<std::string>>& grams,
                             const std::vector<std::string>& gram) {
    return static_cast<int>(std::count(grams.begin(), grams.end(), gram));
}

// Clipped precision by direct enumeration over candidate positions.
inline double naive_bleu_n(const attnbeam::ScoringInstance& inst, int n) {
    const auto cand = all_ngrams(inst.candidate, n);
    if (cand.empty()) return 0.0;
    std::vector<std::vector<std::vector<std::string>>> refs;
    for (const auto& r : inst.references) refs.push_back(all_ngrams(r, n));

    double overlap = 0.0;
    std::vector<std::vector<std::string>> seen;
    for (const auto& gram : cand) {
        if (count_occurrences(seen, gram) > 0) continue;
        seen.push_back(gram);
        int best = 0;
        for (const auto& ref : refs) best = std::max(best, count_occurrences(ref, gram));
        overlap += std::min(count_occurrences(cand, gram), best);
    }
    return overlap / static_cast<double>(cand.size());
}

inline double naive_rouge_n(const attnbeam::ScoringInstance& inst, int n) {
    const auto cand = all_ngrams(inst.candidate, n);
    double overlap = 0.0;
    double total = 0.0;
    for (const auto& r : inst.references) {
        const auto ref = all_ngrams(r, n);
        total += static_cast<double>(ref.size());
        std::vector<std::vector<std::string>> seen;
        for (const auto& gram : ref) {
            if (count_occurrences(seen, gram) > 0) continue;
            seen.push_back(gram);
            overlap += std::min(count_occurrences(cand, gram), count_occurrences(ref, gram));
        }
    }
    if (total == 0.0) return 0.0;
    return overlap / total;
}

} // namespace testsup
