// beam.hpp
//
// Generic beam search over any next-token scorer, in log space. The first
// step seeds up to k hypotheses from the distribution after <start>; each
// later step expands every live hypothesis over the full vocabulary and
// keeps the best k_live by cumulative score. A hypothesis that emits
// <end> moves to the completed set and the live width shrinks by one.
// Search stops when k hypotheses have completed or max_len is reached;
// max_len survivors are force-completed and flagged. Ties anywhere break
// toward the lexicographically smaller token sequence, so results are
// fully deterministic. An exhaustive enumerator over the same sequence
// space serves as the testing oracle.

#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "attnbeam/errors.hpp"
#include "attnbeam/wordmap.hpp"

namespace attnbeam {

template <typename State>
struct ScorerStep {
    State state;
    Eigen::VectorXd log_probs;
};

// A deterministic next-token model: start() yields the state before any
// token; step(state, prev) consumes one token and returns the new state
// plus log-probabilities over the vocabulary.
template <typename S>
concept TokenScorer = requires(const S& scorer, const typename S::State& state, TokenId token) {
    typename S::State;
    { scorer.vocab_size() } -> std::convertible_to<int>;
    { scorer.start() } -> std::same_as<typename S::State>;
    { scorer.step(state, token) } -> std::same_as<ScorerStep<typename S::State>>;
};

struct BeamConfig {
    int width = 4;      // k; the paper's operating point is 4
    int max_len = 50;
    TokenId start_id = WordMap::kStart;
    TokenId end_id = WordMap::kEnd;  // negative disables end-token termination

    void validate(int vocab_size) const {
        if (vocab_size < 1) throw Error(ErrorCode::EmptyVocab, "scorer has empty vocabulary");
        if (width < 1) throw Error(ErrorCode::InvalidArgument, "beam width must be >= 1");
        if (max_len < 1) throw Error(ErrorCode::InvalidArgument, "max_len must be >= 1");
        if (start_id < 0 || start_id >= vocab_size) {
            throw Error(ErrorCode::TokenOutOfRange, "start id outside vocabulary");
        }
        if (end_id >= vocab_size) {
            throw Error(ErrorCode::TokenOutOfRange, "end id outside vocabulary");
        }
    }
};

template <typename State>
struct Hypothesis {
    std::vector<TokenId> tokens;  // after <start>; includes <end> when complete
    double score = 0.0;           // cumulative log-probability of `tokens`
    State state;                  // scorer state before the final token
    bool complete = false;        // true iff <end> was emitted (not forced)
};

// Ordering used for pruning, completion ranking, and the oracle: higher
// score first, then lexicographically smaller token sequence.
template <typename State>
inline bool better_hypothesis(const Hypothesis<State>& a, const Hypothesis<State>& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.tokens < b.tokens;
}

template <typename State>
struct BeamResult {
    Hypothesis<State> best;
    std::vector<Hypothesis<State>> completed;  // best-first; forced ones have complete == false
    bool width_clamped = false;  // k exceeded the vocabulary at the seeding step
};

template <TokenScorer S>
BeamResult<typename S::State> beam_search(const S& scorer, const BeamConfig& cfg) {
    using Hyp = Hypothesis<typename S::State>;
    const int vocab = scorer.vocab_size();
    cfg.validate(vocab);

    BeamResult<typename S::State> result;
    std::vector<Hyp> live;
    std::vector<Hyp>& completed = result.completed;

    const auto settle = [&](std::vector<Hyp>&& candidates, int keep) {
        std::sort(candidates.begin(), candidates.end(), better_hypothesis<typename S::State>);
        if (static_cast<int>(candidates.size()) > keep) candidates.resize(static_cast<std::size_t>(keep));
        live.clear();
        for (auto& cand : candidates) {
            if (cfg.end_id >= 0 && cand.tokens.back() == cfg.end_id) {
                cand.complete = true;
                completed.push_back(std::move(cand));
            } else {
                live.push_back(std::move(cand));
            }
        }
    };

    // Step 1: one scorer step from <start> seeds the beam.
    {
        ScorerStep<typename S::State> first = scorer.step(scorer.start(), cfg.start_id);
        result.width_clamped = cfg.width > vocab;
        std::vector<Hyp> seeds;
        seeds.reserve(static_cast<std::size_t>(vocab));
        for (TokenId v = 0; v < vocab; ++v) {
            Hyp h;
            h.tokens.push_back(v);
            h.score = first.log_probs(v);
            h.state = first.state;
            seeds.push_back(std::move(h));
        }
        settle(std::move(seeds), std::min(cfg.width, vocab));
    }

    for (int len = 2; len <= cfg.max_len; ++len) {
        if (live.empty() || static_cast<int>(completed.size()) >= cfg.width) break;
        const int k_live = cfg.width - static_cast<int>(completed.size());
        std::vector<Hyp> candidates;
        candidates.reserve(live.size() * static_cast<std::size_t>(vocab));
        for (const Hyp& hyp : live) {
            ScorerStep<typename S::State> next = scorer.step(hyp.state, hyp.tokens.back());
            for (TokenId v = 0; v < vocab; ++v) {
                Hyp cand;
                cand.tokens = hyp.tokens;
                cand.tokens.push_back(v);
                cand.score = hyp.score + next.log_probs(v);
                cand.state = next.state;
                candidates.push_back(std::move(cand));
            }
        }
        settle(std::move(candidates), k_live);
    }

    // Survivors hit max_len without <end>: force-complete, no end bonus.
    for (Hyp& hyp : live) {
        hyp.complete = false;
        completed.push_back(std::move(hyp));
    }
    live.clear();

    std::sort(completed.begin(), completed.end(), better_hypothesis<typename S::State>);
    result.best = completed.front();
    return result;
}

template <typename State>
struct OracleResult {
    Hypothesis<State> best;
    long long evaluated = 0;  // complete sequences scored
};

// Exhaustively enumerates the sequence space beam_search draws from:
// every <end>-terminated sequence of length <= max_len plus every
// end-free sequence of exactly max_len. Scores accumulate left to right,
// matching beam_search bit for bit; the tie rule is shared.
template <TokenScorer S>
OracleResult<typename S::State> exhaustive_oracle(const S& scorer, const BeamConfig& cfg) {
    using Hyp = Hypothesis<typename S::State>;
    const int vocab = scorer.vocab_size();
    cfg.validate(vocab);

    const double space = std::pow(static_cast<double>(vocab), static_cast<double>(cfg.max_len));
    if (space > 1e6) {
        throw Error(ErrorCode::SearchSpaceTooLarge,
                    "V^max_len = " + std::to_string(space) + " exceeds the 1e6 enumeration guard");
    }

    OracleResult<typename S::State> result;
    bool have_best = false;
    std::vector<TokenId> prefix;

    const auto consider = [&](double score, bool complete) {
        Hyp h;
        h.tokens = prefix;
        h.score = score;
        h.complete = complete;
        ++result.evaluated;
        if (!have_best || better_hypothesis(h, result.best)) {
            result.best = std::move(h);
            have_best = true;
        }
    };

    const auto dfs = [&](auto&& self, const typename S::State& state, TokenId prev, double score) -> void {
        const ScorerStep<typename S::State> step = scorer.step(state, prev);
        if (cfg.end_id >= 0) {
            prefix.push_back(cfg.end_id);
            consider(score + step.log_probs(cfg.end_id), true);
            prefix.pop_back();
        }
        for (TokenId v = 0; v < vocab; ++v) {
            if (cfg.end_id >= 0 && v == cfg.end_id) continue;
            const double extended = score + step.log_probs(v);
            prefix.push_back(v);
            if (static_cast<int>(prefix.size()) == cfg.max_len) {
                consider(extended, false);
            } else {
                self(self, step.state, v, extended);
            }
            prefix.pop_back();
        }
    };
    dfs(dfs, scorer.start(), cfg.start_id, 0.0);
    return result;
}

} // namespace attnbeam
