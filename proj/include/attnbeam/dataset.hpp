// dataset.hpp
//
// CaptionRecord (feature grid + reference captions), JSON-lines dataset
// I/O, and the seeded synthetic generator used instead of full benchmark
// datasets. Synthetic captions are deterministic functions of the feature
// values, so a decoder can genuinely learn the feature->caption mapping.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "attnbeam/errors.hpp"
#include "attnbeam/features.hpp"
#include "attnbeam/tokenize.hpp"

namespace attnbeam {

struct CaptionRecord {
    std::string id;
    FeatureGrid features;
    std::vector<TokenSeq> refs;
};

namespace detail {

// Uniform double in [0, 1) from the standard-defined mt19937_64 stream.
// Avoids std::uniform_real_distribution, whose output is not pinned by the
// standard; this keeps generated datasets identical across toolchains.
inline double next_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double next_symmetric(std::mt19937_64& rng) { return 2.0 * next_unit(rng) - 1.0; }

} // namespace detail

inline std::vector<CaptionRecord> gen_synthetic(std::uint64_t seed, int n_items, int vocab_size,
                                                int pixels, int dim, int max_len) {
    if (n_items < 1 || pixels < 1 || dim < 1 || max_len < 1) {
        throw Error(ErrorCode::InvalidArgument, "gen_synthetic arguments must be positive");
    }
    if (vocab_size < 5) {
        throw Error(ErrorCode::InvalidArgument, "vocab_size must be >= 5");
    }

    std::mt19937_64 rng(seed);

    // Fixed per-seed codebook: one direction vector per vocabulary word.
    std::vector<std::vector<double>> codebook(static_cast<std::size_t>(vocab_size),
                                              std::vector<double>(static_cast<std::size_t>(dim)));
    for (auto& row : codebook) {
        for (auto& v : row) v = detail::next_symmetric(rng);
    }

    std::vector<CaptionRecord> records;
    records.reserve(static_cast<std::size_t>(n_items));
    for (int item = 0; item < n_items; ++item) {
        FeatureGrid grid(pixels, dim);
        for (int p = 0; p < pixels; ++p) {
            for (int d = 0; d < dim; ++d) grid.at(p, d) = static_cast<float>(detail::next_symmetric(rng));
        }

        // Caption = pure function of the mean feature vector.
        std::vector<double> mean(static_cast<std::size_t>(dim), 0.0);
        for (int p = 0; p < pixels; ++p) {
            for (int d = 0; d < dim; ++d) mean[static_cast<std::size_t>(d)] += static_cast<double>(grid.at(p, d));
        }
        for (auto& v : mean) v /= static_cast<double>(pixels);

        int peak = 0;
        for (int d = 1; d < dim; ++d) {
            if (mean[static_cast<std::size_t>(d)] > mean[static_cast<std::size_t>(peak)]) peak = d;
        }
        int length = 3 + peak % 3;
        if (length > max_len) length = max_len;

        TokenSeq caption;
        caption.reserve(static_cast<std::size_t>(length));
        for (int j = 0; j < length; ++j) {
            int best_word = 0;
            double best_score = 0.0;
            for (int w = 0; w < vocab_size; ++w) {
                double score = 0.0;
                for (int d = 0; d < dim; ++d) {
                    score += codebook[static_cast<std::size_t>(w)][static_cast<std::size_t>(d)] *
                             mean[static_cast<std::size_t>((d + j) % dim)];
                }
                if (w == 0 || score > best_score) {
                    best_score = score;
                    best_word = w;
                }
            }
            caption.push_back("w" + std::to_string(best_word));
        }

        char id_buf[16];
        std::snprintf(id_buf, sizeof(id_buf), "syn%04d", item);
        records.push_back(CaptionRecord{id_buf, std::move(grid), {std::move(caption)}});
    }
    return records;
}

// One dataset line: {"id": ..., "features": "<path>.abft", "refs": [...]}.
// Feature paths are resolved relative to the dataset file's directory;
// reference strings go through tokenize() on load.
inline std::vector<CaptionRecord> load_dataset(const std::string& jsonl_path) {
    std::ifstream in(jsonl_path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open: " + jsonl_path);
    const std::filesystem::path base = std::filesystem::path(jsonl_path).parent_path();

    std::vector<CaptionRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::BadFormat,
                        "line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
        }
        if (!obj.is_object() || !obj.contains("id") || !obj.contains("features") || !obj.contains("refs") ||
            !obj["id"].is_string() || !obj["features"].is_string() || !obj["refs"].is_array()) {
            throw Error(ErrorCode::BadFormat,
                        "line " + std::to_string(line_no) + ": expected {id, features, refs}");
        }
        std::vector<TokenSeq> refs;
        for (const auto& r : obj["refs"]) {
            if (!r.is_string()) {
                throw Error(ErrorCode::BadFormat, "line " + std::to_string(line_no) + ": refs must be strings");
            }
            TokenSeq toks = tokenize(r.get<std::string>());
            if (toks.empty()) {
                throw Error(ErrorCode::BadFormat,
                            "line " + std::to_string(line_no) + ": reference tokenizes to nothing");
            }
            refs.push_back(std::move(toks));
        }
        if (refs.empty()) {
            throw Error(ErrorCode::BadFormat, "line " + std::to_string(line_no) + ": refs is empty");
        }
        const std::filesystem::path feat_path = base / obj["features"].get<std::string>();
        records.push_back(CaptionRecord{obj["id"].get<std::string>(), load_features(feat_path.string()),
                                        std::move(refs)});
    }
    return records;
}

// Writes <out_dir>/dataset.jsonl plus features/<id>.abft per record.
// Returns the dataset path.
inline std::string write_dataset(const std::vector<CaptionRecord>& records, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(fs::path(out_dir) / "features", ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create directory: " + out_dir);

    const std::string dataset_path = (fs::path(out_dir) / "dataset.jsonl").string();
    std::ofstream out(dataset_path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot open for writing: " + dataset_path);
    for (const auto& rec : records) {
        const std::string rel = "features/" + rec.id + ".abft";
        save_features(rec.features, (fs::path(out_dir) / rel).string());
        nlohmann::ordered_json obj;
        obj["id"] = rec.id;
        obj["features"] = rel;
        nlohmann::ordered_json refs = nlohmann::ordered_json::array();
        for (const auto& ref : rec.refs) refs.push_back(detokenize(ref));
        obj["refs"] = std::move(refs);
        out << obj.dump() << '\n';
    }
    if (!out) throw Error(ErrorCode::IoError, "write failed: " + dataset_path);
    return dataset_path;
}

} // namespace attnbeam
