// wordmap.hpp
//
// Vocabulary management. Ids are contiguous, the four reserved tokens
// always occupy ids 0..3, and the two directions of the map stay exact
// inverses. Serialized form is a flat JSON object {token: id}.

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "attnbeam/errors.hpp"
#include "attnbeam/tokenize.hpp"

namespace attnbeam {

using TokenId = int;

class WordMap {
  public:
    static constexpr TokenId kPad = 0;
    static constexpr TokenId kStart = 1;
    static constexpr TokenId kEnd = 2;
    static constexpr TokenId kUnk = 3;
    static constexpr int kNumReserved = 4;

    static const std::array<std::string, 4>& reserved_tokens() {
        static const std::array<std::string, 4> names = {"<pad>", "<start>", "<end>", "<unk>"};
        return names;
    }

    WordMap() {
        for (const auto& name : reserved_tokens()) append(name);
    }

    int size() const { return static_cast<int>(id_to_token_.size()); }

    bool contains(const std::string& token) const {
        return token_to_id_.find(token) != token_to_id_.end();
    }

    // Unknown tokens map to <unk>.
    TokenId id_of(const std::string& token) const {
        auto it = token_to_id_.find(token);
        return it == token_to_id_.end() ? kUnk : it->second;
    }

    const std::string& token_of(TokenId id) const {
        if (id < 0 || id >= size()) {
            throw Error(ErrorCode::TokenOutOfRange,
                        "id " + std::to_string(id) + " outside vocabulary of size " +
                            std::to_string(size()));
        }
        return id_to_token_[static_cast<std::size_t>(id)];
    }

    static bool is_reserved(TokenId id) { return id >= 0 && id < kNumReserved; }

    // Appends a new token at the next free id. Rejects duplicates and
    // whitespace-bearing tokens; both would break the inverse-map invariant.
    TokenId append(const std::string& token) {
        if (token.empty()) throw Error(ErrorCode::InvalidArgument, "empty token");
        for (char c : token) {
            if (detail::is_ascii_space(c)) {
                throw Error(ErrorCode::InvalidArgument, "token contains whitespace: '" + token + "'");
            }
        }
        if (contains(token)) {
            throw Error(ErrorCode::InvalidArgument, "duplicate token: '" + token + "'");
        }
        TokenId id = size();
        token_to_id_.emplace(token, id);
        id_to_token_.push_back(token);
        return id;
    }

    nlohmann::json to_json() const {
        nlohmann::json obj = nlohmann::json::object();
        for (TokenId id = 0; id < size(); ++id) obj[id_to_token_[id]] = id;
        return obj;
    }

    static WordMap from_json(const nlohmann::json& obj) {
        if (!obj.is_object()) throw Error(ErrorCode::BadFormat, "wordmap is not a JSON object");
        std::vector<std::string> by_id(obj.size());
        std::vector<bool> seen(obj.size(), false);
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            if (!it.value().is_number_integer()) {
                throw Error(ErrorCode::BadFormat, "wordmap id for '" + it.key() + "' is not an integer");
            }
            long long id = it.value().get<long long>();
            if (id < 0 || id >= static_cast<long long>(obj.size()) || seen[static_cast<std::size_t>(id)]) {
                throw Error(ErrorCode::BadFormat,
                            "wordmap ids are not contiguous 0..V-1 (offending id " + std::to_string(id) + ")");
            }
            seen[static_cast<std::size_t>(id)] = true;
            by_id[static_cast<std::size_t>(id)] = it.key();
        }
        if (by_id.size() < kNumReserved) throw Error(ErrorCode::BadFormat, "wordmap lacks reserved tokens");
        for (int i = 0; i < kNumReserved; ++i) {
            if (by_id[static_cast<std::size_t>(i)] != reserved_tokens()[static_cast<std::size_t>(i)]) {
                throw Error(ErrorCode::BadFormat,
                            "reserved token at id " + std::to_string(i) + " is '" + by_id[static_cast<std::size_t>(i)] +
                                "', expected '" + reserved_tokens()[static_cast<std::size_t>(i)] + "'");
            }
        }
        WordMap wm;
        for (std::size_t id = kNumReserved; id < by_id.size(); ++id) wm.append(by_id[id]);
        return wm;
    }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error(ErrorCode::IoError, "cannot open for writing: " + path);
        out << to_json().dump(2) << '\n';
        if (!out) throw Error(ErrorCode::IoError, "write failed: " + path);
    }

    static WordMap load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error(ErrorCode::IoError, "cannot open: " + path);
        nlohmann::json obj;
        try {
            in >> obj;
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::BadFormat, "invalid wordmap JSON in " + path + ": " + e.what());
        }
        return from_json(obj);
    }

  private:
    std::unordered_map<std::string, TokenId> token_to_id_;
    std::vector<std::string> id_to_token_;
};

// Frequency-ordered vocabulary build: tokens seen at least min_count times
// get ids 4..V-1 by descending frequency, ties lexicographic. Corpus order
// cannot influence the result.
inline WordMap build_wordmap(const std::vector<TokenSeq>& corpus, int min_count) {
    if (min_count < 1) throw Error(ErrorCode::InvalidArgument, "min_count must be >= 1");
    std::map<std::string, long long> freq;
    for (const auto& seq : corpus) {
        for (const auto& tok : seq) ++freq[tok];
    }
    std::vector<std::pair<std::string, long long>> entries;
    entries.reserve(freq.size());
    const auto& reserved = WordMap::reserved_tokens();
    for (const auto& [tok, count] : freq) {
        if (count < min_count) continue;
        if (std::find(reserved.begin(), reserved.end(), tok) != reserved.end()) continue;
        entries.emplace_back(tok, count);
    }
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    WordMap wm;
    for (const auto& [tok, count] : entries) {
        (void)count;
        wm.append(tok);
    }
    return wm;
}

// <start> + ids (+<unk> substitution) + <end>, padded with <pad> to max_len.
inline std::vector<TokenId> encode(const TokenSeq& tokens, const WordMap& wm, int max_len) {
    const long long needed = static_cast<long long>(tokens.size()) + 2;
    if (needed > max_len) {
        throw Error(ErrorCode::LengthExceeded,
                    std::to_string(tokens.size()) + " tokens + <start>/<end> exceed max_len " +
                        std::to_string(max_len));
    }
    std::vector<TokenId> ids;
    ids.reserve(static_cast<std::size_t>(max_len));
    ids.push_back(WordMap::kStart);
    for (const auto& tok : tokens) ids.push_back(wm.id_of(tok));
    ids.push_back(WordMap::kEnd);
    while (ids.size() < static_cast<std::size_t>(max_len)) ids.push_back(WordMap::kPad);
    return ids;
}

// Inverse of encode up to reserved tokens: <pad>/<start>/<end>/<unk> are
// stripped, everything else maps back through the vocabulary.
inline TokenSeq decode_ids(const std::vector<TokenId>& ids, const WordMap& wm) {
    TokenSeq out;
    for (TokenId id : ids) {
        if (WordMap::is_reserved(id)) continue;
        out.push_back(wm.token_of(id));
    }
    return out;
}

} // namespace attnbeam
