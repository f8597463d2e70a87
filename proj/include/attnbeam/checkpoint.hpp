// checkpoint.hpp
//
// Versioned JSON checkpoint carrying the model configuration, training
// configuration, wordmap, and every parameter tensor as {shape, data}
// with decimal doubles. Serialization round-trips values exactly.

#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "attnbeam/errors.hpp"
#include "attnbeam/model.hpp"
#include "attnbeam/train.hpp"
#include "attnbeam/wordmap.hpp"

namespace attnbeam {

constexpr int kCheckpointVersion = 1;

struct Checkpoint {
    ModelParams params;
    TrainConfig train_config;
    WordMap wordmap;
};

inline std::string checkpoint_save(const ModelParams& params, const TrainConfig& train_config,
                                   const WordMap& wordmap) {
    if (!all_finite(params)) {
        throw Error(ErrorCode::NonFiniteValue, "refusing to checkpoint non-finite parameters");
    }
    nlohmann::json doc;
    doc["version"] = kCheckpointVersion;
    doc["config"]["model"] = {{"vocab_size", params.config.vocab_size},
                              {"embed_dim", params.config.embed_dim},
                              {"feature_dim", params.config.feature_dim},
                              {"hidden_dim", params.config.hidden_dim},
                              {"attn_dim", params.config.attn_dim}};
    doc["config"]["train"] = {{"lambda_ds", train_config.lambda_ds},
                              {"learning_rate", train_config.learning_rate},
                              {"epochs", train_config.epochs},
                              {"seed", train_config.seed},
                              {"grad_clip", train_config.grad_clip ? nlohmann::json(*train_config.grad_clip)
                                                                   : nlohmann::json(nullptr)}};
    doc["wordmap"] = wordmap.to_json();

    nlohmann::json tensors = nlohmann::json::object();
    for_each_tensor(const_cast<ModelParams&>(params), [&tensors](const char* name, auto& tensor) {
        nlohmann::json entry;
        if constexpr (std::decay_t<decltype(tensor)>::ColsAtCompileTime == 1) {
            entry["shape"] = {tensor.size()};
        } else {
            entry["shape"] = {tensor.rows(), tensor.cols()};
        }
        std::vector<double> data(static_cast<std::size_t>(tensor.size()));
        for (Eigen::Index i = 0; i < tensor.size(); ++i) data[static_cast<std::size_t>(i)] = tensor(i);
        entry["data"] = std::move(data);
        tensors[name] = std::move(entry);
    });
    doc["params"] = std::move(tensors);
    return doc.dump();
}

inline Checkpoint checkpoint_load(const std::string& bytes) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::CorruptCheckpoint, std::string("invalid JSON: ") + e.what());
    }
    try {
        if (!doc.contains("version") || !doc["version"].is_number_integer()) {
            throw Error(ErrorCode::CorruptCheckpoint, "missing version tag");
        }
        const int version = doc["version"].get<int>();
        if (version != kCheckpointVersion) {
            throw Error(ErrorCode::VersionMismatch,
                        "checkpoint version " + std::to_string(version) + ", this build reads version " +
                            std::to_string(kCheckpointVersion));
        }

        Checkpoint ckpt;
        const auto& model = doc.at("config").at("model");
        ModelConfig config;
        config.vocab_size = model.at("vocab_size").get<int>();
        config.embed_dim = model.at("embed_dim").get<int>();
        config.feature_dim = model.at("feature_dim").get<int>();
        config.hidden_dim = model.at("hidden_dim").get<int>();
        config.attn_dim = model.at("attn_dim").get<int>();

        const auto& train = doc.at("config").at("train");
        ckpt.train_config.lambda_ds = train.at("lambda_ds").get<double>();
        ckpt.train_config.learning_rate = train.at("learning_rate").get<double>();
        ckpt.train_config.epochs = train.at("epochs").get<int>();
        ckpt.train_config.seed = train.at("seed").get<std::uint64_t>();
        if (train.at("grad_clip").is_null()) {
            ckpt.train_config.grad_clip.reset();
        } else {
            ckpt.train_config.grad_clip = train.at("grad_clip").get<double>();
        }

        ckpt.wordmap = WordMap::from_json(doc.at("wordmap"));
        if (ckpt.wordmap.size() != config.vocab_size) {
            throw Error(ErrorCode::CorruptCheckpoint,
                        "wordmap size " + std::to_string(ckpt.wordmap.size()) +
                            " does not match config vocab_size " + std::to_string(config.vocab_size));
        }

        ckpt.params = zeros_like_config(config);
        const auto& tensors = doc.at("params");
        for_each_tensor(ckpt.params, [&tensors](const char* name, auto& tensor) {
            if (!tensors.contains(name)) {
                throw Error(ErrorCode::CorruptCheckpoint, std::string("missing tensor: ") + name);
            }
            const auto& entry = tensors.at(name);
            const auto& shape = entry.at("shape");
            if constexpr (std::decay_t<decltype(tensor)>::ColsAtCompileTime == 1) {
                if (shape.size() != 1 || shape[0].get<Eigen::Index>() != tensor.size()) {
                    throw Error(ErrorCode::CorruptCheckpoint, std::string("bad shape for tensor: ") + name);
                }
            } else {
                if (shape.size() != 2 || shape[0].get<Eigen::Index>() != tensor.rows() ||
                    shape[1].get<Eigen::Index>() != tensor.cols()) {
                    throw Error(ErrorCode::CorruptCheckpoint, std::string("bad shape for tensor: ") + name);
                }
            }
            const auto& data = entry.at("data");
            if (static_cast<Eigen::Index>(data.size()) != tensor.size()) {
                throw Error(ErrorCode::CorruptCheckpoint, std::string("bad data length for tensor: ") + name);
            }
            for (Eigen::Index i = 0; i < tensor.size(); ++i) {
                tensor(i) = data[static_cast<std::size_t>(i)].template get<double>();
            }
        });
        if (!all_finite(ckpt.params)) {
            throw Error(ErrorCode::CorruptCheckpoint, "non-finite parameter value");
        }
        return ckpt;
    } catch (const Error&) {
        throw;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::CorruptCheckpoint, std::string("malformed checkpoint: ") + e.what());
    }
}

inline void checkpoint_save_file(const std::string& path, const ModelParams& params,
                                 const TrainConfig& train_config, const WordMap& wordmap) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot open for writing: " + path);
    out << checkpoint_save(params, train_config, wordmap) << '\n';
    if (!out) throw Error(ErrorCode::IoError, "write failed: " + path);
}

inline Checkpoint checkpoint_load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return checkpoint_load(buf.str());
}

} // namespace attnbeam
