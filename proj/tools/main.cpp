// attnbeam CLI: synthetic data generation, decoder training, beam-search
// captioning, and metric scoring over JSON-lines fixtures.
//
// Exit codes: 0 success, 2 usage or I/O failure, 3 training divergence,
// 4 checkpoint/feature errors, 5 malformed scoring input. Every error
// prints a single line "error: <code>: <message>" to stderr.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "attnbeam/checkpoint.hpp"
#include "attnbeam/dataset.hpp"
#include "attnbeam/errors.hpp"
#include "attnbeam/metrics.hpp"
#include "attnbeam/scorer.hpp"
#include "attnbeam/train.hpp"

namespace {

using attnbeam::Error;
using attnbeam::ErrorCode;

[[noreturn]] void fail(const std::string& kind, const std::string& message, int exit_code) {
    std::string line = message;
    for (char& c : line) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    std::cerr << "error: " << kind << ": " << line << "\n";
    std::exit(exit_code);
}

// Binds config-file keys to CLI options so that explicit flags win and
// unknown keys are rejected.
class ConfigKeys {
  public:
    template <typename T>
    void bind(const std::string& key, T* target) {
        setters_[key] = [target](const nlohmann::json& value) { *target = value.get<T>(); };
    }

    void apply(CLI::App* cmd, const std::string& config_path) const {
        if (config_path.empty()) return;
        std::ifstream in(config_path, std::ios::binary);
        if (!in) fail("usage", "cannot open config file: " + config_path, 2);
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            fail("usage", "invalid config JSON in " + config_path + ": " + e.what(), 2);
        }
        if (!doc.is_object()) fail("usage", "config file must hold a JSON object", 2);
        for (auto it = doc.begin(); it != doc.end(); ++it) {
            const auto setter = setters_.find(it.key());
            if (setter == setters_.end()) {
                fail("usage", "unknown config key '" + it.key() + "' in " + config_path, 2);
            }
            if (cmd->get_option("--" + it.key())->count() > 0) continue;  // flag overrides config
            try {
                setter->second(it.value());
            } catch (const nlohmann::json::exception& e) {
                fail("usage", "bad config value for '" + it.key() + "': " + e.what(), 2);
            }
        }
    }

  private:
    std::map<std::string, std::function<void(const nlohmann::json&)>> setters_;
};

std::string format_fixed4(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", value);
    return buf;
}

// --------------------------------------------------------------------------
// gen

struct GenOptions {
    std::string out;
    std::string config;
    std::uint64_t seed = 0;
    int items = 0;
    int vocab = 20;
    int pixels = 4;
    int dim = 8;
    int max_len = 50;
};

int run_gen(const GenOptions& opt) {
    try {
        const auto records =
            attnbeam::gen_synthetic(opt.seed, opt.items, opt.vocab, opt.pixels, opt.dim, opt.max_len);
        const std::string dataset_path = attnbeam::write_dataset(records, opt.out);

        std::vector<attnbeam::TokenSeq> refs;
        for (const auto& rec : records) {
            for (const auto& ref : rec.refs) refs.push_back(ref);
        }
        const attnbeam::WordMap wordmap = attnbeam::build_wordmap(refs, 1);
        wordmap.save((std::filesystem::path(opt.out) / "wordmap.json").string());

        nlohmann::ordered_json manifest;
        manifest["records"] = records.size();
        manifest["vocab"] = wordmap.size();
        manifest["seed"] = opt.seed;
        manifest["dataset"] = dataset_path;
        std::cout << manifest.dump() << "\n";
        return 0;
    } catch (const Error& e) {
        fail(e.code() == ErrorCode::IoError ? "io" : "usage", e.what(), 2);
    }
}

// --------------------------------------------------------------------------
// train

struct TrainOptions {
    std::string data;
    std::string wordmap;
    std::string out;
    std::string loss_log;
    std::string config;
    int epochs = 100;
    double learning_rate = 4e-4;
    double lambda_ds = 1.0;
    double clip = 5.0;  // 0 disables clipping
    std::uint64_t seed = 0;
    int embed_dim = 16;
    int hidden_dim = 16;
    int attn_dim = 16;
};

int run_train(const TrainOptions& opt) {
    try {
        const std::string wordmap_path =
            opt.wordmap.empty()
                ? (std::filesystem::path(opt.data).parent_path() / "wordmap.json").string()
                : opt.wordmap;
        const attnbeam::WordMap wordmap = attnbeam::WordMap::load(wordmap_path);
        const auto dataset = attnbeam::load_dataset(opt.data);
        if (dataset.empty()) throw Error(ErrorCode::EmptyCorpus, "dataset has no records: " + opt.data);

        attnbeam::ModelConfig model_config;
        model_config.vocab_size = wordmap.size();
        model_config.embed_dim = opt.embed_dim;
        model_config.feature_dim = dataset.front().features.dim();
        model_config.hidden_dim = opt.hidden_dim;
        model_config.attn_dim = opt.attn_dim;

        attnbeam::TrainConfig train_config;
        train_config.lambda_ds = opt.lambda_ds;
        train_config.learning_rate = opt.learning_rate;
        train_config.epochs = opt.epochs;
        train_config.seed = opt.seed;
        if (opt.clip > 0.0) {
            train_config.grad_clip = opt.clip;
        } else {
            train_config.grad_clip.reset();
        }

        attnbeam::ModelParams params = attnbeam::init_params(model_config, opt.seed);
        const attnbeam::TrainResult result = attnbeam::train(dataset, wordmap, std::move(params), train_config);

        attnbeam::checkpoint_save_file(opt.out, result.params, train_config, wordmap);

        const std::string loss_path = opt.loss_log.empty() ? opt.out + ".loss.csv" : opt.loss_log;
        std::ofstream loss(loss_path, std::ios::binary);
        if (!loss) throw Error(ErrorCode::IoError, "cannot open for writing: " + loss_path);
        loss << "epoch,mean_loss,ds_penalty\n";
        char buf[96];
        for (const auto& row : result.trace) {
            std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", row.epoch, row.mean_loss, row.ds_penalty);
            loss << buf;
        }
        if (!loss) throw Error(ErrorCode::IoError, "write failed: " + loss_path);
        return 0;
    } catch (const Error& e) {
        if (e.code() == ErrorCode::NonFiniteLoss) fail("train-divergence", e.what(), 3);
        fail(e.code() == ErrorCode::IoError ? "io" : "usage", e.what(), 2);
    }
}

// --------------------------------------------------------------------------
// decode

struct DecodeOptions {
    std::string model;
    std::vector<std::string> features;
    std::string config;
    int beam = 4;
    int max_len = 50;
};

int run_decode(const DecodeOptions& opt) {
    try {
        const attnbeam::Checkpoint ckpt = attnbeam::checkpoint_load_file(opt.model);
        for (const auto& path : opt.features) {
            const attnbeam::FeatureGrid grid = attnbeam::load_features(path);
            const attnbeam::DecodedCaption cap =
                attnbeam::decode_caption(ckpt.params, ckpt.wordmap, grid, opt.beam, opt.max_len);
            nlohmann::ordered_json line;
            line["id"] = std::filesystem::path(path).stem().string();
            line["caption"] = cap.caption;
            line["log_prob"] = cap.log_prob;
            line["beam"] = opt.beam;
            std::cout << line.dump() << "\n";
        }
        return 0;
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidArgument || e.code() == ErrorCode::EmptyVocab) {
            fail("usage", e.what(), 2);
        }
        fail("model", e.what(), 4);
    }
}

// --------------------------------------------------------------------------
// score

struct ScoreOptions {
    std::string input;
    std::string config;
};

int run_score(const ScoreOptions& opt) {
    try {
        std::ifstream in(opt.input, std::ios::binary);
        if (!in) throw Error(ErrorCode::IoError, "cannot open: " + opt.input);
        std::vector<attnbeam::ScoringInstance> instances;
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
            if (!obj.is_object() || !obj.contains("id") || !obj.contains("candidate") ||
                !obj.contains("refs") || !obj["candidate"].is_string() || !obj["refs"].is_array() ||
                obj["refs"].empty()) {
                throw Error(ErrorCode::BadFormat, "line " + std::to_string(line_no) +
                                                      ": expected {id, candidate, refs[1..]}");
            }
            attnbeam::ScoringInstance inst;
            inst.candidate = attnbeam::tokenize(obj["candidate"].get<std::string>());
            for (const auto& r : obj["refs"]) {
                if (!r.is_string()) {
                    throw Error(ErrorCode::BadFormat,
                                "line " + std::to_string(line_no) + ": refs must be strings");
                }
                inst.references.push_back(attnbeam::tokenize(r.get<std::string>()));
            }
            instances.push_back(std::move(inst));
        }
        if (instances.empty()) throw Error(ErrorCode::EmptyCorpus, "no instances in " + opt.input);

        const attnbeam::MetricReport report = attnbeam::corpus_score(instances);

        // Presentation scale: x100, fixed 4 decimals, documented key order.
        std::string out = "{";
        const auto put = [&out](const std::string& key, double value, bool last = false) {
            out += "\"" + key + "\": " + format_fixed4(100.0 * value);
            if (!last) out += ", ";
        };
        for (int n = 0; n < 4; ++n) put("bleu" + std::to_string(n + 1), report.bleu_n[static_cast<std::size_t>(n)]);
        put("bleu", report.bleu);
        for (int n = 0; n < 4; ++n) put("rouge" + std::to_string(n + 1), report.rouge_n[static_cast<std::size_t>(n)]);
        put("rougeL", report.rouge_l);
        put("cider", report.cider);
        for (int n = 0; n < 4; ++n) put("cider" + std::to_string(n + 1), report.cider_n[static_cast<std::size_t>(n)]);
        put("meteor", report.meteor);
        out += "\"instances\": " + std::to_string(report.instances) + "}";
        std::cout << out << "\n";
        return 0;
    } catch (const Error& e) {
        fail("score-input", e.what(), 5);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"attention-beam captioning toolkit"};
    app.require_subcommand(1);

    GenOptions gen_opt;
    ConfigKeys gen_keys;
    CLI::App* gen = app.add_subcommand("gen", "generate a seeded synthetic caption dataset");
    gen->add_option("--out", gen_opt.out, "output directory")->required();
    gen->add_option("--seed", gen_opt.seed, "generator seed");
    gen->add_option("--items", gen_opt.items, "number of records")->required()->check(CLI::PositiveNumber);
    gen->add_option("--vocab", gen_opt.vocab, "synthetic vocabulary size (>= 5)");
    gen->add_option("--pixels", gen_opt.pixels, "feature grid pixel count P");
    gen->add_option("--dim", gen_opt.dim, "feature dimension D");
    gen->add_option("--max-len", gen_opt.max_len, "caption length cap");
    gen->add_option("--config", gen_opt.config, "JSON config file (flags override)");
    gen_keys.bind("out", &gen_opt.out);
    gen_keys.bind("seed", &gen_opt.seed);
    gen_keys.bind("items", &gen_opt.items);
    gen_keys.bind("vocab", &gen_opt.vocab);
    gen_keys.bind("pixels", &gen_opt.pixels);
    gen_keys.bind("dim", &gen_opt.dim);
    gen_keys.bind("max-len", &gen_opt.max_len);

    TrainOptions train_opt;
    ConfigKeys train_keys;
    CLI::App* train = app.add_subcommand("train", "train the attention decoder on a dataset");
    train->add_option("--data", train_opt.data, "dataset JSONL path")->required();
    train->add_option("--wordmap", train_opt.wordmap, "wordmap JSON (default: wordmap.json beside --data)");
    train->add_option("--out", train_opt.out, "checkpoint output path")->required();
    train->add_option("--loss-log", train_opt.loss_log, "loss CSV path (default: <out>.loss.csv)");
    train->add_option("--epochs", train_opt.epochs, "training epochs")->check(CLI::PositiveNumber);
    train->add_option("--lr", train_opt.learning_rate, "learning rate");
    train->add_option("--lambda-ds", train_opt.lambda_ds, "doubly-stochastic penalty weight");
    train->add_option("--clip", train_opt.clip, "absolute gradient clip (0 disables)");
    train->add_option("--seed", train_opt.seed, "init + shuffle seed");
    train->add_option("--embed-dim", train_opt.embed_dim, "embedding size")->check(CLI::PositiveNumber);
    train->add_option("--hidden-dim", train_opt.hidden_dim, "LSTM hidden size")->check(CLI::PositiveNumber);
    train->add_option("--attn-dim", train_opt.attn_dim, "attention layer size")->check(CLI::PositiveNumber);
    train->add_option("--config", train_opt.config, "JSON config file (flags override)");
    train_keys.bind("data", &train_opt.data);
    train_keys.bind("wordmap", &train_opt.wordmap);
    train_keys.bind("out", &train_opt.out);
    train_keys.bind("loss-log", &train_opt.loss_log);
    train_keys.bind("epochs", &train_opt.epochs);
    train_keys.bind("lr", &train_opt.learning_rate);
    train_keys.bind("lambda-ds", &train_opt.lambda_ds);
    train_keys.bind("clip", &train_opt.clip);
    train_keys.bind("seed", &train_opt.seed);
    train_keys.bind("embed-dim", &train_opt.embed_dim);
    train_keys.bind("hidden-dim", &train_opt.hidden_dim);
    train_keys.bind("attn-dim", &train_opt.attn_dim);

    DecodeOptions decode_opt;
    ConfigKeys decode_keys;
    CLI::App* decode = app.add_subcommand("decode", "caption feature files with beam search");
    decode->add_option("--model", decode_opt.model, "checkpoint path")->required();
    decode->add_option("--features", decode_opt.features, "one or more .abft files")->required();
    decode->add_option("--beam", decode_opt.beam, "beam width k")->check(CLI::PositiveNumber);
    decode->add_option("--max-len", decode_opt.max_len, "decode length cap")->check(CLI::PositiveNumber);
    decode->add_option("--config", decode_opt.config, "JSON config file (flags override)");
    decode_keys.bind("model", &decode_opt.model);
    decode_keys.bind("features", &decode_opt.features);
    decode_keys.bind("beam", &decode_opt.beam);
    decode_keys.bind("max-len", &decode_opt.max_len);

    ScoreOptions score_opt;
    ConfigKeys score_keys;
    CLI::App* score = app.add_subcommand("score", "evaluate candidates against references");
    score->add_option("--input", score_opt.input, "JSONL of {id, candidate, refs}")->required();
    score->add_option("--config", score_opt.config, "JSON config file (flags override)");
    score_keys.bind("input", &score_opt.input);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        fail("usage", e.what(), 2);
    }

    if (gen->parsed()) {
        gen_keys.apply(gen, gen_opt.config);
        return run_gen(gen_opt);
    }
    if (train->parsed()) {
        train_keys.apply(train, train_opt.config);
        return run_train(train_opt);
    }
    if (decode->parsed()) {
        decode_keys.apply(decode, decode_opt.config);
        return run_decode(decode_opt);
    }
    score_keys.apply(score, score_opt.config);
    return run_score(score_opt);
}
