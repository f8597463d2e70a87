// Test scorers: a hash-seeded random language model, a hand-crafted
// transition table, a uniform scorer for tie handling, plus the greedy
// rollout reference that width-1 beam search must match.

#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "attnbeam/beam.hpp"
#include "attnbeam/wordmap.hpp"

namespace testsup {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline double unit_from_hash(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

// Deterministic "random" next-token distribution conditioned on the full
// history via hash chaining. Cloneable state, pure step.
class RandomScorer {
  public:
    using State = std::uint64_t;

    RandomScorer(int vocab, std::uint64_t seed) : vocab_(vocab), seed_(seed) {}

    int vocab_size() const { return vocab_; }

    State start() const { return splitmix64(seed_); }

    attnbeam::ScorerStep<State> step(const State& state, attnbeam::TokenId prev) const {
        const State next = splitmix64(state ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(prev + 1)));
        Eigen::VectorXd logits(vocab_);
        for (int v = 0; v < vocab_; ++v) {
            logits(v) = 4.0 * unit_from_hash(splitmix64(next ^ static_cast<std::uint64_t>(v * 2654435761u))) - 2.0;
        }
        const double peak = logits.maxCoeff();
        const Eigen::VectorXd shifted = logits.array() - peak;
        const double lse = std::log(shifted.array().exp().sum());
        return {next, (shifted.array() - lse).matrix()};
    }

  private:
    int vocab_;
    std::uint64_t seed_;
};

// Distribution depends only on the previous token; probabilities given
// explicitly per row. State carries the previous token.
class TableScorer {
  public:
    using State = attnbeam::TokenId;

    TableScorer(int vocab, std::map<attnbeam::TokenId, std::vector<double>> rows)
        : vocab_(vocab), rows_(std::move(rows)) {}

    int vocab_size() const { return vocab_; }

    State start() const { return -1; }

    attnbeam::ScorerStep<State> step(const State&, attnbeam::TokenId prev) const {
        const auto& probs = rows_.at(prev);
        Eigen::VectorXd lp(vocab_);
        for (int v = 0; v < vocab_; ++v) lp(v) = std::log(probs[static_cast<std::size_t>(v)]);
        return {prev, lp};
    }

  private:
    int vocab_;
    std::map<attnbeam::TokenId, std::vector<double>> rows_;
};

// Every token equally likely at every step; exercises tie breaking.
class UniformScorer {
  public:
    using State = int;

    explicit UniformScorer(int vocab) : vocab_(vocab) {}

    int vocab_size() const { return vocab_; }

    State start() const { return 0; }

    attnbeam::ScorerStep<State> step(const State& state, attnbeam::TokenId) const {
        Eigen::VectorXd lp = Eigen::VectorXd::Constant(vocab_, -std::log(static_cast<double>(vocab_)));
        return {state + 1, lp};
    }

  private:
    int vocab_;
};

// Independent greedy decoder: argmax at every step (ties to the smaller
// id), stop on <end> or at max_len.
template <typename Scorer>
std::pair<std::vector<attnbeam::TokenId>, double> greedy_rollout(const Scorer& scorer,
                                                                 const attnbeam::BeamConfig& cfg) {
    std::vector<attnbeam::TokenId> tokens;
    double score = 0.0;
    typename Scorer::State state = scorer.start();
    attnbeam::TokenId prev = cfg.start_id;
    for (int len = 1; len <= cfg.max_len; ++len) {
        const auto step = scorer.step(state, prev);
        int best = 0;
        for (int v = 1; v < scorer.vocab_size(); ++v) {
            if (step.log_probs(v) > step.log_probs(best)) best = v;
        }
        tokens.push_back(best);
        score += step.log_probs(best);
        if (cfg.end_id >= 0 && best == cfg.end_id) break;
        state = step.state;
        prev = best;
    }
    return {tokens, score};
}

} // namespace testsup
