// metrics.hpp
//
// Sentence- and corpus-level caption metrics:
//   BLEU_n   clipped n-gram precision against the best single reference,
//            composite = geometric mean of orders 1..4 (zero if any order
//            is zero; no smoothing, no brevity penalty).
//   ROUGE_n  joint n-gram recall: clipped overlap and totals both summed
//            over the whole reference set.
//   ROUGE-L  LCS F-measure with beta = 1.2, max over references.
//   CIDEr_n  mean TF-IDF cosine against each reference; document
//            frequency counts instances whose reference set contains the
//            n-gram, IDF = ln((1+N)/(1+df)); mean over orders 1..4, no
//            x10 scaling.
//   METEOR   exact-match unigram alignment maximizing matches then
//            minimizing chunks, scored per the 10PR/(R+9P) form with the
//            0.5*(chunks/matches)^3 fragmentation penalty, max over
//            references.
// All values live in [0, 1]; presentation scaling is the CLI's business.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "attnbeam/errors.hpp"
#include "attnbeam/tokenize.hpp"

namespace attnbeam {

struct ScoringInstance {
    TokenSeq candidate;
    std::vector<TokenSeq> references;  // at least one
};

struct NGramCounts {
    int order = 1;
    std::map<std::string, int> counts;  // key: tokens joined with ' '
};

// Sliding-window counts; sequences shorter than n yield an empty map.
inline NGramCounts ngram_counts(const TokenSeq& tokens, int order) {
    if (order < 1) throw Error(ErrorCode::InvalidArgument, "n-gram order must be >= 1");
    NGramCounts out;
    out.order = order;
    if (static_cast<int>(tokens.size()) < order) return out;
    for (std::size_t i = 0; i + static_cast<std::size_t>(order) <= tokens.size(); ++i) {
        std::string key = tokens[i];
        for (int k = 1; k < order; ++k) {
            key.push_back(' ');
            key += tokens[i + static_cast<std::size_t>(k)];
        }
        ++out.counts[key];
    }
    return out;
}

namespace detail {

inline void check_instance(const ScoringInstance& inst) {
    if (inst.references.empty()) {
        throw Error(ErrorCode::InvalidArgument, "scoring instance has no references");
    }
}

// Numerator/denominator of the clipped-precision ratio, kept separate so
// corpus scoring can pool them across instances before dividing.
struct ClippedPrecision {
    long long overlap = 0;
    long long total = 0;
};

inline ClippedPrecision bleu_counts(const ScoringInstance& inst, int order) {
    const NGramCounts cand = ngram_counts(inst.candidate, order);
    std::vector<NGramCounts> refs;
    refs.reserve(inst.references.size());
    for (const auto& ref : inst.references) refs.push_back(ngram_counts(ref, order));

    ClippedPrecision out;
    for (const auto& [gram, count] : cand.counts) {
        int best_ref = 0;
        for (const auto& ref : refs) {
            auto it = ref.counts.find(gram);
            if (it != ref.counts.end()) best_ref = std::max(best_ref, it->second);
        }
        out.overlap += std::min(count, best_ref);
        out.total += count;
    }
    return out;
}

} // namespace detail

inline double bleu_n(const ScoringInstance& inst, int order) {
    detail::check_instance(inst);
    const detail::ClippedPrecision cp = detail::bleu_counts(inst, order);
    if (cp.total == 0) return 0.0;
    return static_cast<double>(cp.overlap) / static_cast<double>(cp.total);
}

namespace detail {

inline double geometric_mean_1_to_4(const std::array<double, 4>& values) {
    double product = 1.0;
    for (double v : values) {
        if (v == 0.0) return 0.0;
        product *= v;
    }
    return std::pow(product, 0.25);
}

} // namespace detail

inline double bleu_composite(const ScoringInstance& inst) {
    std::array<double, 4> parts{};
    for (int n = 1; n <= 4; ++n) parts[static_cast<std::size_t>(n - 1)] = bleu_n(inst, n);
    return detail::geometric_mean_1_to_4(parts);
}

inline double rouge_n(const ScoringInstance& inst, int order) {
    detail::check_instance(inst);
    const NGramCounts cand = ngram_counts(inst.candidate, order);
    long long overlap = 0;
    long long total = 0;
    for (const auto& ref : inst.references) {
        const NGramCounts rc = ngram_counts(ref, order);
        for (const auto& [gram, count] : rc.counts) {
            total += count;
            auto it = cand.counts.find(gram);
            if (it != cand.counts.end()) overlap += std::min(it->second, count);
        }
    }
    if (total == 0) return 0.0;
    return static_cast<double>(overlap) / static_cast<double>(total);
}

namespace detail {

inline int lcs_length(const TokenSeq& a, const TokenSeq& b) {
    const std::size_t m = a.size();
    const std::size_t n = b.size();
    std::vector<int> prev(n + 1, 0);
    std::vector<int> curr(n + 1, 0);
    for (std::size_t i = 1; i <= m; ++i) {
        for (std::size_t j = 1; j <= n; ++j) {
            curr[j] = (a[i - 1] == b[j - 1]) ? prev[j - 1] + 1 : std::max(prev[j], curr[j - 1]);
        }
        std::swap(prev, curr);
    }
    return prev[n];
}

} // namespace detail

inline double rouge_l(const ScoringInstance& inst) {
    detail::check_instance(inst);
    constexpr double kBeta = 1.2;
    constexpr double kBetaSq = kBeta * kBeta;
    double best = 0.0;
    for (const auto& ref : inst.references) {
        const int lcs = detail::lcs_length(inst.candidate, ref);
        if (lcs == 0 || inst.candidate.empty() || ref.empty()) continue;
        const double precision = static_cast<double>(lcs) / static_cast<double>(inst.candidate.size());
        const double recall = static_cast<double>(lcs) / static_cast<double>(ref.size());
        const double f = ((1.0 + kBetaSq) * precision * recall) / (recall + kBetaSq * precision);
        best = std::max(best, f);
    }
    return best;
}

// ---------------------------------------------------------------------------
// CIDEr

struct CiderCorpusStats {
    long long num_instances = 0;                         // N
    std::array<std::map<std::string, int>, 4> doc_freq;  // per order 1..4
};

inline CiderCorpusStats build_cider_stats(const std::vector<ScoringInstance>& instances) {
    CiderCorpusStats stats;
    stats.num_instances = static_cast<long long>(instances.size());
    for (const auto& inst : instances) {
        for (int n = 1; n <= 4; ++n) {
            std::set<std::string> seen;
            for (const auto& ref : inst.references) {
                for (const auto& [gram, count] : ngram_counts(ref, n).counts) {
                    (void)count;
                    seen.insert(gram);
                }
            }
            for (const auto& gram : seen) ++stats.doc_freq[static_cast<std::size_t>(n - 1)][gram];
        }
    }
    return stats;
}

struct CiderScore {
    std::array<double, 4> per_order{};
    double mean = 0.0;
};

namespace detail {

inline double cider_idf(const CiderCorpusStats& stats, int order, const std::string& gram) {
    const auto& df_map = stats.doc_freq[static_cast<std::size_t>(order - 1)];
    const auto it = df_map.find(gram);
    const long long df = it == df_map.end() ? 0 : it->second;
    return std::log(static_cast<double>(1 + stats.num_instances) / static_cast<double>(1 + df));
}

// TF-IDF vector: raw in-sentence count times corpus IDF.
inline std::map<std::string, double> tfidf_vector(const TokenSeq& sentence, int order,
                                                  const CiderCorpusStats& stats) {
    std::map<std::string, double> vec;
    for (const auto& [gram, count] : ngram_counts(sentence, order).counts) {
        vec[gram] = static_cast<double>(count) * cider_idf(stats, order, gram);
    }
    return vec;
}

inline double vector_norm(const std::map<std::string, double>& vec) {
    double sq = 0.0;
    for (const auto& [gram, w] : vec) {
        (void)gram;
        sq += w * w;
    }
    return std::sqrt(sq);
}

inline double cosine(const std::map<std::string, double>& a, const std::map<std::string, double>& b) {
    const double na = vector_norm(a);
    const double nb = vector_norm(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    double dot = 0.0;
    for (const auto& [gram, w] : a) {
        const auto it = b.find(gram);
        if (it != b.end()) dot += w * it->second;
    }
    return dot / (na * nb);
}

} // namespace detail

inline CiderScore cider(const ScoringInstance& inst, const CiderCorpusStats& stats) {
    detail::check_instance(inst);
    if (stats.num_instances < 1) {
        throw Error(ErrorCode::MissingCorpusStats, "CIDEr needs corpus statistics over >= 1 instance");
    }
    CiderScore out;
    for (int n = 1; n <= 4; ++n) {
        const auto cand_vec = detail::tfidf_vector(inst.candidate, n, stats);
        double sum = 0.0;
        for (const auto& ref : inst.references) {
            sum += detail::cosine(cand_vec, detail::tfidf_vector(ref, n, stats));
        }
        out.per_order[static_cast<std::size_t>(n - 1)] = sum / static_cast<double>(inst.references.size());
    }
    out.mean = (out.per_order[0] + out.per_order[1] + out.per_order[2] + out.per_order[3]) / 4.0;
    return out;
}

// ---------------------------------------------------------------------------
// METEOR

struct MeteorAlignment {
    int matched = 0;  // y
    int chunks = 0;   // x
    double precision = 0.0;
    double recall = 0.0;
};

namespace detail {

// Exact maximize-matches-then-minimize-chunks alignment. Candidate
// positions are processed left to right; the used-reference set plus the
// reference slot of the previous candidate position fully determine the
// remaining optimum, so states memoize on (i, prev_slot, used_mask).
class MeteorAligner {
  public:
    MeteorAligner(const TokenSeq& cand, const TokenSeq& ref) : cand_size_(cand.size()) {
        std::map<std::string, int> type_ids;
        const auto type_of = [&type_ids](const std::string& tok) {
            return type_ids.emplace(tok, static_cast<int>(type_ids.size())).first->second;
        };
        cand_types_.reserve(cand.size());
        for (const auto& tok : cand) cand_types_.push_back(type_of(tok));
        ref_types_.reserve(ref.size());
        for (const auto& tok : ref) ref_types_.push_back(type_of(tok));

        const int num_types = static_cast<int>(type_ids.size());
        std::vector<int> cand_count(num_types, 0), ref_count(num_types, 0);
        for (int t : cand_types_) ++cand_count[static_cast<std::size_t>(t)];
        ref_slots_.resize(static_cast<std::size_t>(num_types));
        for (std::size_t j = 0; j < ref_types_.size(); ++j) {
            ++ref_count[static_cast<std::size_t>(ref_types_[j])];
            ref_slots_[static_cast<std::size_t>(ref_types_[j])].push_back(static_cast<int>(j));
        }
        quota_.resize(static_cast<std::size_t>(num_types));
        for (int t = 0; t < num_types; ++t) {
            quota_[static_cast<std::size_t>(t)] =
                std::min(cand_count[static_cast<std::size_t>(t)], ref_count[static_cast<std::size_t>(t)]);
            max_matches_ += quota_[static_cast<std::size_t>(t)];
        }

        // suffix_[i][t]: occurrences of type t in the candidate at or after i.
        suffix_.assign(cand.size() + 1, std::vector<int>(static_cast<std::size_t>(num_types), 0));
        for (std::size_t i = cand.size(); i-- > 0;) {
            suffix_[i] = suffix_[i + 1];
            ++suffix_[i][static_cast<std::size_t>(cand_types_[i])];
        }

        matched_.assign(static_cast<std::size_t>(num_types), 0);
        used_.assign(ref.size(), false);
        mask_words_.assign((ref.size() + 63) / 64, 0ULL);
    }

    MeteorAlignment run() {
        MeteorAlignment out;
        out.matched = max_matches_;
        if (max_matches_ == 0) return out;
        const int adjacencies = best_from(0, -1);
        out.chunks = max_matches_ - adjacencies;
        return out;
    }

  private:
    int best_from(std::size_t i, int prev_slot) {
        if (i == cand_size_) return 0;
        const std::uint64_t key = (static_cast<std::uint64_t>(i) << 32) ^
                                  static_cast<std::uint64_t>(static_cast<std::uint32_t>(prev_slot + 1));
        std::string memo_key;
        memo_key.reserve(8 + mask_words_.size() * 8);
        memo_key.append(reinterpret_cast<const char*>(&key), 8);
        memo_key.append(reinterpret_cast<const char*>(mask_words_.data()), mask_words_.size() * 8);
        if (const auto it = memo_.find(memo_key); it != memo_.end()) return it->second;

        const int type = cand_types_[i];
        int best = -1;
        // Skipping this candidate position is allowed only while the
        // remaining occurrences still cover the type's match quota.
        if (matched_[static_cast<std::size_t>(type)] + suffix_[i + 1][static_cast<std::size_t>(type)] >=
            quota_[static_cast<std::size_t>(type)]) {
            best = best_from(i + 1, -1);
        }
        for (int slot : ref_slots_[static_cast<std::size_t>(type)]) {
            if (used_[static_cast<std::size_t>(slot)]) continue;
            used_[static_cast<std::size_t>(slot)] = true;
            mask_words_[static_cast<std::size_t>(slot) / 64] ^= (1ULL << (slot % 64));
            ++matched_[static_cast<std::size_t>(type)];
            const int bonus = (prev_slot >= 0 && slot == prev_slot + 1) ? 1 : 0;
            best = std::max(best, bonus + best_from(i + 1, slot));
            --matched_[static_cast<std::size_t>(type)];
            mask_words_[static_cast<std::size_t>(slot) / 64] ^= (1ULL << (slot % 64));
            used_[static_cast<std::size_t>(slot)] = false;
        }
        memo_.emplace(std::move(memo_key), best);
        return best;
    }

    std::size_t cand_size_;
    std::vector<int> cand_types_;
    std::vector<int> ref_types_;
    std::vector<std::vector<int>> ref_slots_;
    std::vector<int> quota_;
    std::vector<std::vector<int>> suffix_;
    std::vector<int> matched_;
    std::vector<bool> used_;
    std::vector<std::uint64_t> mask_words_;
    std::unordered_map<std::string, int> memo_;
    int max_matches_ = 0;
};

} // namespace detail

inline MeteorAlignment meteor_alignment(const TokenSeq& candidate, const TokenSeq& reference) {
    detail::MeteorAligner aligner(candidate, reference);
    MeteorAlignment out = aligner.run();
    if (out.matched > 0) {
        out.precision = static_cast<double>(out.matched) / static_cast<double>(candidate.size());
        out.recall = static_cast<double>(out.matched) / static_cast<double>(reference.size());
    }
    return out;
}

inline double meteor(const ScoringInstance& inst) {
    detail::check_instance(inst);
    double best = 0.0;
    for (const auto& ref : inst.references) {
        const MeteorAlignment al = meteor_alignment(inst.candidate, ref);
        if (al.matched == 0) continue;
        const double p = al.precision;
        const double r = al.recall;
        const double fmean = (10.0 * p * r) / (r + 9.0 * p);
        const double frag = static_cast<double>(al.chunks) / static_cast<double>(al.matched);
        const double score = fmean * (1.0 - 0.5 * frag * frag * frag);
        best = std::max(best, score);
    }
    return best;
}

// ---------------------------------------------------------------------------
// Corpus aggregation

struct MetricReport {
    std::array<double, 4> bleu_n{};   // pooled numerator/denominator across instances
    double bleu = 0.0;                // geometric mean of the pooled orders
    std::array<double, 4> rouge_n{};  // per-instance means
    double rouge_l = 0.0;
    std::array<double, 4> cider_n{};  // per-instance means; stats from this corpus
    double cider = 0.0;
    double meteor = 0.0;
    std::size_t instances = 0;
};

inline MetricReport corpus_score(const std::vector<ScoringInstance>& instances) {
    if (instances.empty()) throw Error(ErrorCode::EmptyCorpus, "no scoring instances");
    const CiderCorpusStats stats = build_cider_stats(instances);

    MetricReport report;
    report.instances = instances.size();
    std::array<long long, 4> bleu_overlap{};
    std::array<long long, 4> bleu_total{};
    for (const auto& inst : instances) {
        detail::check_instance(inst);
        for (int n = 1; n <= 4; ++n) {
            const auto cp = detail::bleu_counts(inst, n);
            bleu_overlap[static_cast<std::size_t>(n - 1)] += cp.overlap;
            bleu_total[static_cast<std::size_t>(n - 1)] += cp.total;
            report.rouge_n[static_cast<std::size_t>(n - 1)] += rouge_n(inst, n);
        }
        report.rouge_l += rouge_l(inst);
        report.meteor += meteor(inst);
        const CiderScore cs = cider(inst, stats);
        for (int n = 0; n < 4; ++n) report.cider_n[static_cast<std::size_t>(n)] += cs.per_order[static_cast<std::size_t>(n)];
    }

    const double count = static_cast<double>(instances.size());
    for (int n = 0; n < 4; ++n) {
        report.bleu_n[static_cast<std::size_t>(n)] =
            bleu_total[static_cast<std::size_t>(n)] == 0
                ? 0.0
                : static_cast<double>(bleu_overlap[static_cast<std::size_t>(n)]) /
                      static_cast<double>(bleu_total[static_cast<std::size_t>(n)]);
        report.rouge_n[static_cast<std::size_t>(n)] /= count;
        report.cider_n[static_cast<std::size_t>(n)] /= count;
    }
    report.bleu = detail::geometric_mean_1_to_4(report.bleu_n);
    report.rouge_l /= count;
    report.meteor /= count;
    report.cider = (report.cider_n[0] + report.cider_n[1] + report.cider_n[2] + report.cider_n[3]) / 4.0;
    return report;
}

} // namespace attnbeam
