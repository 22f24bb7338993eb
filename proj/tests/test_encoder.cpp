#include "doctest.h"

#include <cmath>
#include <random>

#include "fgt/encoder.hpp"
#include "fgt/rng.hpp"
#include "oracles.hpp"

using namespace fgt;

namespace {

DependencyParse parse_from_heads(const std::vector<int>& heads) {
    DependencyParse p;
    p.n_words = heads.size();
    p.heads = heads;
    p.relations.assign(heads.size(), "dep");
    p.forms.assign(heads.size(), "w");
    return p;
}

Utterance utterance_of(std::vector<int> ids, std::vector<Span> spans) {
    Utterance u;
    u.phoneme_ids = std::move(ids);
    u.spans = std::move(spans);
    u.words.assign(u.spans.size(), "w");
    return u;
}

}  // namespace

TEST_CASE("word_pool averages within spans") {
    Mat feats = Mat::from_rows({{1.0, 10.0}, {3.0, 30.0}});
    Mat pooled = word_pool(feats, {{0, 2}});
    CHECK(pooled(0, 0) == doctest::Approx(2.0));
    CHECK(pooled(0, 1) == doctest::Approx(20.0));

    Mat single = word_pool(feats, {{0, 1}, {1, 2}});
    CHECK(single(0, 0) == 1.0);
    CHECK(single(1, 1) == 30.0);

    CHECK_THROWS_AS(word_pool(feats, {{0, 0}, {0, 2}}), EmptySpan);
    CHECK_THROWS_AS(word_pool(feats, {{0, 1}}), ShapeMismatch);  // does not cover all rows

    std::mt19937_64 gen(71);
    Mat big = random_matrix(20, 6, -4, 4, gen);
    std::vector<Span> spans = {{0, 3}, {3, 4}, {4, 9}, {9, 16}, {16, 20}};
    Mat got = word_pool(big, spans);
    for (std::size_t w = 0; w < spans.size(); ++w)
        for (std::size_t j = 0; j < 6; ++j) {
            double sum = 0.0;
            for (std::size_t t = spans[w].begin; t < spans[w].end; ++t) sum += big(t, j);
            CHECK(std::fabs(got(w, j) - sum / spans[w].length()) <= 1e-12);
        }
}

TEST_CASE("combine concatenates and round-trips") {
    Mat a = Mat::from_rows({{1.0, 2.0}});
    Mat b = Mat::from_rows({{3.0, 4.0, 5.0}});
    Mat c = combine(a, b);
    REQUIRE(c.cols() == 5);
    for (std::size_t j = 0; j < 5; ++j) CHECK(c(0, j) == doctest::Approx(j + 1.0));

    Mat zero_right = combine(a, Mat(1, 3));
    CHECK(slice_cols(zero_right, 0, 2) == a);
    CHECK(slice_cols(c, 0, 2) == a);
    CHECK(slice_cols(c, 2, 5) == b);
    CHECK_THROWS_AS(combine(Mat(2, 2), Mat(3, 2)), ShapeMismatch);
}

TEST_CASE("broadcast_to_phonemes copies word rows over spans") {
    Mat words = Mat::from_rows({{1.0, -1.0}});
    Mat out = broadcast_to_phonemes(words, {{0, 4}});
    REQUIRE(out.rows() == 4);
    for (std::size_t t = 0; t < 4; ++t) CHECK(out(t, 0) == 1.0);

    Mat two = Mat::from_rows({{1.0}, {2.0}});
    Mat ident = broadcast_to_phonemes(two, {{0, 1}, {1, 2}});
    CHECK(ident == two);

    std::mt19937_64 gen(77);
    Mat wf = random_matrix(4, 5, -2, 2, gen);
    std::vector<Span> spans = {{0, 2}, {2, 3}, {3, 7}, {7, 8}};
    CHECK(max_abs_diff(word_pool(broadcast_to_phonemes(wf, spans), spans), wf) <= 1e-12);
}

TEST_CASE("stats_head: zero net, bias-only, positivity") {
    Mat fused(3, 4);
    auto [mu0, sig0] = stats_head(fused, Mat(4, 6), Mat(1, 6));
    CHECK(max_abs_diff(mu0, Mat(3, 3)) == 0.0);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) CHECK(sig0(i, j) == 1.0);

    Mat bias(1, 2);
    bias(0, 1) = std::log(2.0);
    auto [mu1, sig1] = stats_head(fused, Mat(4, 2), bias);
    CHECK(mu1(0, 0) == 0.0);
    CHECK(sig1(0, 0) == doctest::Approx(2.0));

    std::mt19937_64 gen(83);
    Mat w = random_matrix(4, 6, -2, 2, gen);
    Mat b = random_matrix(1, 6, -2, 2, gen);
    for (int iter = 0; iter < 1000; ++iter) {
        auto [mu, sigma] = stats_head(random_matrix(2, 4, -5, 5, gen), w, b);
        (void)mu;
        for (std::size_t i = 0; i < sigma.rows(); ++i)
            for (std::size_t j = 0; j < sigma.cols(); ++j) CHECK(sigma(i, j) > 0.0);
    }

    CHECK_THROWS_AS(stats_head(fused, Mat(4, 5), Mat(1, 5)), ShapeMismatch);  // odd width
}

TEST_CASE("encode_utterance: zero weights give mu=0 sigma=1") {
    EncoderWeights w = EncoderWeights::zeros(10, 4, 3, 3, 5, 2);
    Utterance u = utterance_of({1, 2, 3, 4, 5}, {{0, 2}, {2, 5}});
    DependencyParse parse = parse_from_heads({0, 1});
    EncoderOutput out = encode_utterance(u, parse, w);
    CHECK(out.mu.rows() == 5);
    CHECK(out.mu.cols() == 2);
    CHECK(max_abs_diff(out.mu, Mat(5, 2)) == 0.0);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 2; ++j) CHECK(out.sigma(i, j) == 1.0);
    CHECK(out.g_text.rows() == 5);
    CHECK(out.g_text.cols() == 5);
    CHECK(out.p_text.cols() == 4);
}

TEST_CASE("encode_utterance: single word, single phoneme") {
    EncoderWeights w = EncoderWeights::seeded(6, 3, 2, 2, 4, 2, 99);
    Utterance u = utterance_of({2}, {{0, 1}});
    EncoderOutput out = encode_utterance(u, parse_from_heads({0}), w);
    CHECK(out.g_text.rows() == 1);
    CHECK(out.mu.rows() == 1);
    // p_text is the raw embedding row
    for (std::size_t j = 0; j < 3; ++j) CHECK(out.p_text(0, j) == w.phoneme_embedding(2, j));
}

TEST_CASE("encode_utterance: errors and determinism") {
    EncoderWeights w = EncoderWeights::seeded(6, 3, 2, 2, 4, 2, 7);
    Utterance u = utterance_of({0, 1, 2}, {{0, 1}, {1, 2}, {2, 3}});
    CHECK_THROWS_AS(encode_utterance(u, parse_from_heads({0, 1}), w), WordCountMismatch);

    Utterance bad = utterance_of({0, 9}, {{0, 1}, {1, 2}});  // id 9 outside V=6
    CHECK_THROWS_AS(encode_utterance(bad, parse_from_heads({0, 1}), w), ShapeMismatch);

    DependencyParse parse = parse_from_heads({2, 0, 2});
    EncoderOutput a = encode_utterance(u, parse, w);
    EncoderOutput b = encode_utterance(u, parse, w);
    CHECK(a.g_text == b.g_text);
    CHECK(a.mu == b.mu);
    CHECK(a.sigma == b.sigma);
}

TEST_CASE("different parses change g_text but not p_text or T") {
    EncoderWeights w = EncoderWeights::seeded(8, 4, 3, 3, 5, 2, 4242);
    Utterance u = utterance_of({0, 1, 2, 3, 4}, {{0, 1}, {1, 3}, {3, 4}, {4, 5}});
    DependencyParse chain = parse_from_heads({2, 3, 4, 0});   // 1←2←3←4(root)
    DependencyParse star = parse_from_heads({2, 0, 2, 2});    // all under word 2

    EncoderOutput a = encode_utterance(u, chain, w);
    EncoderOutput b = encode_utterance(u, star, w);
    CHECK(a.p_text == b.p_text);
    CHECK(a.mu.rows() == b.mu.rows());  // T invariance
    CHECK(max_abs_diff(a.g_text, b.g_text) > 1e-6);
}

TEST_CASE("word-order consistency: permuting words permutes g_text blocks") {
    EncoderWeights w = EncoderWeights::seeded(8, 4, 3, 3, 5, 2, 31337);
    // three words with phoneme blocks [0,1], [2], [3,4,5]
    Utterance u = utterance_of({0, 1, 2, 3, 4, 5}, {{0, 2}, {2, 3}, {3, 6}});
    DependencyParse parse = parse_from_heads({2, 0, 2});
    EncoderOutput base = encode_utterance(u, parse, w);

    // permutation old→new position: 0→1, 1→2, 2→0
    std::vector<std::size_t> pi = {1, 2, 0};
    Utterance pu = utterance_of({3, 4, 5, 0, 1, 2}, {{0, 3}, {3, 5}, {5, 6}});
    DependencyParse pp = parse_from_heads({3, 3, 0});  // heads remapped under pi
    EncoderOutput perm = encode_utterance(pu, pp, w);

    std::vector<Span> old_spans = u.spans;
    std::vector<Span> new_spans = pu.spans;
    double worst = 0.0;
    for (std::size_t word = 0; word < 3; ++word) {
        const Span& a = old_spans[word];
        const Span& b = new_spans[pi[word]];
        REQUIRE(a.length() == b.length());
        for (std::size_t k = 0; k < a.length(); ++k)
            for (std::size_t j = 0; j < base.g_text.cols(); ++j)
                worst = std::max(worst, std::fabs(base.g_text(a.begin + k, j) -
                                                  perm.g_text(b.begin + k, j)));
    }
    CHECK(worst <= 1e-8);
}

TEST_CASE("tile-engine execution path matches the serial encoder bit for bit") {
    EncoderWeights w = EncoderWeights::seeded(8, 4, 3, 3, 5, 2, 1717);
    Utterance u = utterance_of({0, 1, 2, 3, 4, 5}, {{0, 2}, {2, 3}, {3, 5}, {5, 6}});
    DependencyParse parse = parse_from_heads({2, 0, 2, 3});
    EncoderOutput serial = encode_utterance(u, parse, w);
    EncoderOutput tiled = encode_utterance(u, parse, w, {3, 2});
    CHECK(serial.g_text == tiled.g_text);
    CHECK(serial.mu == tiled.mu);
    CHECK(serial.sigma == tiled.sigma);
}
