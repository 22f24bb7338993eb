#include "fgt/encoder.hpp"

#include <cmath>

#include "fgt/bsp.hpp"
#include "fgt/rng.hpp"

namespace fgt {

namespace {

void check_spans(const std::vector<Span>& spans, std::size_t total) {
    std::size_t cursor = 0;
    for (std::size_t w = 0; w < spans.size(); ++w) {
        if (spans[w].begin != cursor)
            throw ShapeMismatch("spans must be contiguous from 0 (word " + std::to_string(w) + ")");
        if (spans[w].end <= spans[w].begin)
            throw EmptySpan("span of word " + std::to_string(w) + " is empty");
        cursor = spans[w].end;
    }
    if (cursor != total)
        throw ShapeMismatch("spans cover " + std::to_string(cursor) + " rows, expected " +
                            std::to_string(total));
}

}  // namespace

void EncoderWeights::validate() const {
    if (gcn.w0.rows() != embed_dim())
        throw ShapeMismatch("weights: gcn W0 rows must equal embedding width");
    if (gcn.w0.cols() != gcn.w1.rows())
        throw ShapeMismatch("weights: gcn W0/W1 inner dimensions disagree");
    if (combine_w.rows() != embed_dim() + gcn_out_dim())
        throw ShapeMismatch("weights: combine expects width E+F = " +
                            std::to_string(embed_dim() + gcn_out_dim()) + ", has rows " +
                            std::to_string(combine_w.rows()));
    if (combine_b.rows() != 1 || combine_b.cols() != combine_w.cols())
        throw ShapeMismatch("weights: combine bias must be 1x" + std::to_string(combine_w.cols()));
    if (stats_w.rows() != proj_dim() + embed_dim())
        throw ShapeMismatch("weights: stats head expects width G+E = " +
                            std::to_string(proj_dim() + embed_dim()) + ", has rows " +
                            std::to_string(stats_w.rows()));
    if (stats_w.cols() == 0 || stats_w.cols() % 2 != 0)
        throw ShapeMismatch("weights: stats head must emit an even number of outputs");
    if (stats_b.rows() != 1 || stats_b.cols() != stats_w.cols())
        throw ShapeMismatch("weights: stats bias must be 1x" + std::to_string(stats_w.cols()));
}

EncoderWeights EncoderWeights::seeded(std::size_t vocab, std::size_t embed, std::size_t hidden,
                                      std::size_t gcn_out, std::size_t proj, std::size_t stats,
                                      std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    EncoderWeights w;
    // fan_in for the embedding table is the embedding width, not the vocabulary
    const double ebound = 1.0 / std::sqrt(static_cast<double>(embed));
    w.phoneme_embedding = random_matrix(vocab, embed, -ebound, ebound, gen);
    w.gcn.w0 = fan_in_init(embed, hidden, gen);
    w.gcn.w1 = fan_in_init(hidden, gcn_out, gen);
    w.gcn.hidden_activation = Activation::relu;
    w.gcn.output_activation = Activation::none;
    w.combine_w = fan_in_init(embed + gcn_out, proj, gen);
    w.combine_b = Mat(1, proj);
    w.stats_w = fan_in_init(proj + embed, 2 * stats, gen);
    w.stats_b = Mat(1, 2 * stats);
    w.validate();
    return w;
}

EncoderWeights EncoderWeights::zeros(std::size_t vocab, std::size_t embed, std::size_t hidden,
                                     std::size_t gcn_out, std::size_t proj, std::size_t stats) {
    EncoderWeights w;
    w.phoneme_embedding = Mat(vocab, embed);
    w.gcn.w0 = Mat(embed, hidden);
    w.gcn.w1 = Mat(hidden, gcn_out);
    w.gcn.hidden_activation = Activation::relu;
    w.gcn.output_activation = Activation::none;
    w.combine_w = Mat(embed + gcn_out, proj);
    w.combine_b = Mat(1, proj);
    w.stats_w = Mat(proj + embed, 2 * stats);
    w.stats_b = Mat(1, 2 * stats);
    w.validate();
    return w;
}

Mat word_pool(const Mat& phoneme_features, const std::vector<Span>& spans) {
    check_spans(spans, phoneme_features.rows());
    Mat out(spans.size(), phoneme_features.cols());
    for (std::size_t w = 0; w < spans.size(); ++w) {
        const Span& s = spans[w];
        for (std::size_t t = s.begin; t < s.end; ++t)
            for (std::size_t j = 0; j < phoneme_features.cols(); ++j)
                out(w, j) += phoneme_features(t, j);
        const double inv = 1.0 / static_cast<double>(s.length());
        for (std::size_t j = 0; j < phoneme_features.cols(); ++j) out(w, j) *= inv;
    }
    return out;
}

Mat combine(const Mat& wp_out, const Mat& gcn_out) {
    if (wp_out.rows() != gcn_out.rows())
        throw ShapeMismatch("combine: row counts differ (" + std::to_string(wp_out.rows()) +
                            " vs " + std::to_string(gcn_out.rows()) + ")");
    return concat_cols(wp_out, gcn_out);
}

Mat broadcast_to_phonemes(const Mat& word_features, const std::vector<Span>& spans) {
    if (word_features.rows() != spans.size())
        throw ShapeMismatch("broadcast_to_phonemes: one span per word row required");
    std::size_t total = spans.empty() ? 0 : spans.back().end;
    check_spans(spans, total);
    Mat out(total, word_features.cols());
    for (std::size_t w = 0; w < spans.size(); ++w)
        for (std::size_t t = spans[w].begin; t < spans[w].end; ++t)
            for (std::size_t j = 0; j < word_features.cols(); ++j) out(t, j) = word_features(w, j);
    return out;
}

std::pair<Mat, Mat> stats_head(const Mat& fused, const Mat& weights, const Mat& bias) {
    if (weights.cols() == 0 || weights.cols() % 2 != 0)
        throw ShapeMismatch("stats_head: output width must be even (mu | log sigma)");
    Mat lin = add_row_broadcast(matmul(fused, weights), bias);
    const std::size_t d = weights.cols() / 2;
    Mat mu = slice_cols(lin, 0, d);
    Mat log_sigma = slice_cols(lin, d, 2 * d);
    Mat sigma(log_sigma.rows(), log_sigma.cols());
    for (std::size_t i = 0; i < sigma.rows(); ++i)
        for (std::size_t j = 0; j < sigma.cols(); ++j) sigma(i, j) = std::exp(log_sigma(i, j));
    return {std::move(mu), std::move(sigma)};
}

EncoderOutput encode_utterance(const Utterance& utterance, const DependencyParse& parse,
                               const EncoderWeights& weights, const GcnExecution& exec) {
    weights.validate();
    if (utterance.words.size() != parse.n_words)
        throw WordCountMismatch("utterance has " + std::to_string(utterance.words.size()) +
                                " words, parse has " + std::to_string(parse.n_words));
    check_spans(utterance.spans, utterance.phoneme_ids.size());

    const std::size_t t_len = utterance.phoneme_ids.size();
    Mat p_text(t_len, weights.embed_dim());
    for (std::size_t t = 0; t < t_len; ++t) {
        int id = utterance.phoneme_ids[t];
        if (id < 0 || static_cast<std::size_t>(id) >= weights.phoneme_embedding.rows())
            throw ShapeMismatch("phoneme id " + std::to_string(id) +
                                " outside embedding table of size " +
                                std::to_string(weights.phoneme_embedding.rows()));
        for (std::size_t j = 0; j < weights.embed_dim(); ++j)
            p_text(t, j) = weights.phoneme_embedding(static_cast<std::size_t>(id), j);
    }

    Mat wp = word_pool(p_text, utterance.spans);
    SynGraph graph = build_syntax_graph(parse);

    GcnParams params = weights.gcn;
    params.output_activation = Activation::none;  // encoder consumes raw node features
    Mat gcn_out;
    if (exec.tiles > 1 || exec.workers > 1) {
        CsrGraph csr = CsrGraph::from_syngraph(graph);
        TilePlan plan = partition(graph.n, std::max<std::size_t>(exec.tiles, 1));
        gcn_out = bsp_forward(wp, csr, params, plan, std::max<unsigned>(exec.workers, 1));
    } else {
        gcn_out = gcn_forward(wp, graph.A_hat, params);
    }

    Mat combined = combine(wp, gcn_out);
    Mat projected = add_row_broadcast(matmul(combined, weights.combine_w), weights.combine_b);

    EncoderOutput out;
    out.g_text = broadcast_to_phonemes(projected, utterance.spans);
    out.p_text = std::move(p_text);
    Mat fused = concat_cols(out.g_text, out.p_text);
    auto [mu, sigma] = stats_head(fused, weights.stats_w, weights.stats_b);
    out.mu = std::move(mu);
    out.sigma = std::move(sigma);
    return out;
}

}  // namespace fgt
