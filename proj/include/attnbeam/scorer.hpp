// scorer.hpp
//
// Adapts the attention LSTM decoder to the TokenScorer concept so the
// generic beam engine can drive it, plus the end-to-end caption helper
// used by the CLI.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "attnbeam/beam.hpp"
#include "attnbeam/decoder.hpp"
#include "attnbeam/features.hpp"
#include "attnbeam/model.hpp"
#include "attnbeam/tokenize.hpp"
#include "attnbeam/wordmap.hpp"

namespace attnbeam {

// Pure with respect to the shared read-only parameters; concurrent
// searches over one model are safe.
class DecoderScorer {
  public:
    using State = DecoderState;

    DecoderScorer(const ModelParams& params, Eigen::MatrixXd features)
        : params_(&params), features_(std::move(features)) {}

    DecoderScorer(const ModelParams& params, const FeatureGrid& features)
        : DecoderScorer(params, features.as_matrix()) {}

    int vocab_size() const { return params_->config.vocab_size; }

    State start() const { return init_state(features_, *params_); }

    ScorerStep<State> step(const State& state, TokenId prev_token) const {
        StepResult r = decode_step(state, prev_token, features_, *params_);
        return ScorerStep<State>{std::move(r.state), std::move(r.log_probs)};
    }

  private:
    const ModelParams* params_;
    Eigen::MatrixXd features_;
};

static_assert(TokenScorer<DecoderScorer>);

struct DecodedCaption {
    std::vector<TokenId> tokens;  // hypothesis tokens, <end> included when emitted
    std::string caption;          // reserved tokens stripped, space-joined
    double log_prob = 0.0;
    bool complete = false;
};

inline DecodedCaption decode_caption(const ModelParams& params, const WordMap& wordmap,
                                     const FeatureGrid& features, int beam_width, int max_len) {
    BeamConfig cfg;
    cfg.width = beam_width;
    cfg.max_len = max_len;
    const auto result = beam_search(DecoderScorer(params, features), cfg);

    DecodedCaption out;
    out.tokens = result.best.tokens;
    out.caption = detokenize(decode_ids(result.best.tokens, wordmap));
    out.log_prob = result.best.score;
    out.complete = result.best.complete;
    return out;
}

} // namespace attnbeam
