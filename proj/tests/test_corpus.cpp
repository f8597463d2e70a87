#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <sstream>

#include "attnbeam/dataset.hpp"
#include "attnbeam/errors.hpp"
#include "attnbeam/features.hpp"
#include "attnbeam/tokenize.hpp"
#include "attnbeam/wordmap.hpp"

using namespace attnbeam;

TEST_CASE("tokenize lowercases, splits, and strips edge punctuation") {
    CHECK(tokenize("A man rides a Horse.") == TokenSeq{"a", "man", "rides", "a", "horse"});
    CHECK(tokenize("") == TokenSeq{});
    CHECK(tokenize("don't stop") == TokenSeq{"don't", "stop"});
    CHECK(tokenize("  (Hello!)   WORLD?? ") == TokenSeq{"hello", "world"});
    CHECK(tokenize("...") == TokenSeq{});
    CHECK(tokenize("one\ttwo\nthree") == TokenSeq{"one", "two", "three"});
}

TEST_CASE("tokenize is deterministic") {
    const std::string text = "The QUICK brown fox, (jumps)! over; the \"lazy\" dog's back.";
    CHECK(tokenize(text) == tokenize(text));
}

TEST_CASE("build_wordmap orders by frequency then lexicographically") {
    SECTION("min_count 1 keeps both tokens") {
        const WordMap wm = build_wordmap({{"a", "b"}, {"a"}}, 1);
        CHECK(wm.size() == 6);
        CHECK(wm.id_of("<pad>") == 0);
        CHECK(wm.id_of("<start>") == 1);
        CHECK(wm.id_of("<end>") == 2);
        CHECK(wm.id_of("<unk>") == 3);
        CHECK(wm.id_of("a") == 4);
        CHECK(wm.id_of("b") == 5);
    }
    SECTION("min_count 2 drops the singleton") {
        const WordMap wm = build_wordmap({{"a", "b"}, {"a"}}, 2);
        CHECK(wm.contains("a"));
        CHECK_FALSE(wm.contains("b"));
        CHECK(wm.id_of("b") == WordMap::kUnk);
    }
    SECTION("empty corpus leaves only reserved tokens") {
        const WordMap wm = build_wordmap({}, 1);
        CHECK(wm.size() == 4);
    }
    SECTION("tie on frequency breaks lexicographically") {
        const WordMap wm = build_wordmap({{"zeta", "beta"}}, 1);
        CHECK(wm.id_of("beta") == 4);
        CHECK(wm.id_of("zeta") == 5);
    }
}

TEST_CASE("build_wordmap is permutation invariant over the corpus") {
    std::mt19937_64 rng(11);
    std::vector<TokenSeq> corpus;
    const std::vector<std::string> words = {"cat", "dog", "bird", "fish", "ant", "bee"};
    for (int i = 0; i < 40; ++i) {
        TokenSeq seq;
        const int len = 1 + static_cast<int>(rng() % 6);
        for (int k = 0; k < len; ++k) seq.push_back(words[rng() % words.size()]);
        corpus.push_back(std::move(seq));
    }
    const WordMap base = build_wordmap(corpus, 2);
    for (int trial = 0; trial < 5; ++trial) {
        std::shuffle(corpus.begin(), corpus.end(), rng);
        const WordMap shuffled = build_wordmap(corpus, 2);
        REQUIRE(shuffled.size() == base.size());
        for (TokenId id = 0; id < base.size(); ++id) CHECK(shuffled.token_of(id) == base.token_of(id));
    }
}

TEST_CASE("encode adds sentinels, substitutes unknowns, and pads") {
    const WordMap wm = build_wordmap({{"a", "b"}, {"a"}}, 1);
    CHECK(encode({"a"}, wm, 4) == std::vector<TokenId>{1, 4, 2, 0});
    CHECK(encode({}, wm, 2) == std::vector<TokenId>{1, 2});
    CHECK(encode({"z"}, wm, 3) == std::vector<TokenId>{1, 3, 2});
    CHECK_THROWS_AS(encode({"a", "b", "a"}, wm, 4), Error);
    try {
        encode({"a", "b", "a"}, wm, 4);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::LengthExceeded);
    }
}

TEST_CASE("token-level round trip through encode/decode_ids") {
    const std::vector<std::string> texts = {
        "A man rides a Horse.",
        "don't stop believing",
        "the (quick) BROWN fox; jumps!",
    };
    for (const auto& text : texts) {
        const TokenSeq tokens = tokenize(text);
        const WordMap wm = build_wordmap({tokens}, 1);
        const auto ids = encode(tokens, wm, static_cast<int>(tokens.size()) + 2);
        CHECK(detokenize(decode_ids(ids, wm)) == detokenize(tokens));
    }
}

TEST_CASE("wordmap JSON round trip and validation") {
    const WordMap wm = build_wordmap({{"horse", "rides", "horse"}}, 1);
    const WordMap back = WordMap::from_json(wm.to_json());
    REQUIRE(back.size() == wm.size());
    for (TokenId id = 0; id < wm.size(); ++id) CHECK(back.token_of(id) == wm.token_of(id));

    SECTION("non-contiguous ids rejected") {
        nlohmann::json bad = {{"<pad>", 0}, {"<start>", 1}, {"<end>", 2}, {"<unk>", 3}, {"x", 7}};
        CHECK_THROWS_AS(WordMap::from_json(bad), Error);
    }
    SECTION("reserved tokens must sit at ids 0..3") {
        nlohmann::json bad = {{"<pad>", 1}, {"<start>", 0}, {"<end>", 2}, {"<unk>", 3}};
        CHECK_THROWS_AS(WordMap::from_json(bad), Error);
    }
}

TEST_CASE("feature files round trip bit for bit") {
    std::mt19937_64 rng(3);
    FeatureGrid grid(2, 3);
    for (int p = 0; p < 2; ++p) {
        for (int d = 0; d < 3; ++d) {
            grid.at(p, d) = static_cast<float>(static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5);
        }
    }
    std::ostringstream out;
    save_features(grid, out);
    std::istringstream in(out.str());
    const FeatureGrid back = load_features(in);
    CHECK(back == grid);
    CHECK(back.pixels() == 2);
    CHECK(back.dim() == 3);
}

TEST_CASE("feature loader names the failing byte offset") {
    FeatureGrid grid(2, 3);
    std::ostringstream out;
    save_features(grid, out);
    const std::string bytes = out.str();
    REQUIRE(bytes.size() == 12 + 24);

    SECTION("bad magic") {
        std::string bad = bytes;
        bad[0] = 'X';
        std::istringstream in(bad);
        try {
            load_features(in);
            FAIL("expected BadMagic");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::BadMagic);
            CHECK(std::string(e.what()).find("offset 0") != std::string::npos);
        }
    }
    SECTION("truncated payload: five of six floats") {
        std::istringstream in(bytes.substr(0, 12 + 20));
        try {
            load_features(in);
            FAIL("expected TruncatedPayload");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::TruncatedPayload);
            CHECK(std::string(e.what()).find("offset 32") != std::string::npos);
        }
    }
    SECTION("non-finite value reports its offset") {
        std::string bad = bytes;
        // second float (offset 16): set exponent bits for +inf, little endian
        bad[16] = 0x00;
        bad[17] = 0x00;
        bad[18] = static_cast<char>(0x80);
        bad[19] = 0x7f;
        std::istringstream in(bad);
        try {
            load_features(in);
            FAIL("expected NonFiniteValue");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::NonFiniteValue);
            CHECK(std::string(e.what()).find("offset 16") != std::string::npos);
        }
    }
    SECTION("zero pixel header is rejected") {
        std::string bad = bytes;
        bad[4] = 0;  // P = 0
        std::istringstream in(bad);
        CHECK_THROWS_AS(load_features(in), Error);
    }
}

TEST_CASE("gen_synthetic is seed-deterministic and seed-sensitive") {
    const auto a = gen_synthetic(1, 6, 12, 3, 5, 20);
    const auto b = gen_synthetic(1, 6, 12, 3, 5, 20);
    const auto c = gen_synthetic(2, 6, 12, 3, 5, 20);
    REQUIRE(a.size() == 6);
    bool identical = true;
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!(a[i].features == b[i].features) || a[i].refs != b[i].refs || a[i].id != b[i].id) {
            identical = false;
        }
        if (!(a[i].features == c[i].features) || a[i].refs != c[i].refs) differs = true;
    }
    CHECK(identical);
    CHECK(differs);
}

TEST_CASE("gen_synthetic respects vocabulary and length bounds") {
    const auto records = gen_synthetic(9, 8, 20, 4, 8, 50);
    REQUIRE(records.size() == 8);
    for (const auto& rec : records) {
        REQUIRE(rec.refs.size() == 1);
        CHECK(!rec.refs[0].empty());
        CHECK(rec.refs[0].size() <= 50);
        for (const auto& tok : rec.refs[0]) {
            REQUIRE(tok.size() >= 2);
            REQUIRE(tok[0] == 'w');
            const int idx = std::stoi(tok.substr(1));
            CHECK(idx >= 0);
            CHECK(idx < 20);
        }
    }
    CHECK_THROWS_AS(gen_synthetic(1, 0, 20, 4, 8, 50), Error);
    CHECK_THROWS_AS(gen_synthetic(1, 8, 4, 4, 8, 50), Error);
}

TEST_CASE("captions are functions of the features") {
    // Same seed, same generator parameters: records with equal feature
    // grids must carry equal captions (here: all records of one run).
    const auto records = gen_synthetic(5, 10, 15, 4, 6, 30);
    for (const auto& lhs : records) {
        for (const auto& rhs : records) {
            if (lhs.features == rhs.features) CHECK(lhs.refs == rhs.refs);
        }
    }
}
