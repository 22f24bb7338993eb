#pragma once

#include <utility>

#include "fgt/gcnmath.hpp"
#include "fgt/matrix.hpp"
#include "fgt/syngraph.hpp"
#include "fgt/textfront.hpp"

namespace fgt {

struct EmptySpan : std::runtime_error { explicit EmptySpan(const std::string& m) : std::runtime_error(m) {} };
struct WordCountMismatch : std::runtime_error { explicit WordCountMismatch(const std::string& m) : std::runtime_error(m) {} };

/// All learned parameters of the graph encoder.
///   phoneme_embedding V×E, gcn (E→H→F), combine (E+F)×G with bias,
///   stats head (G+E)×2D with bias; first D outputs are μ, last D log σ.
struct EncoderWeights {
    Mat phoneme_embedding;
    GcnParams gcn;
    Mat combine_w;
    Mat combine_b;  // 1×G
    Mat stats_w;
    Mat stats_b;  // 1×2D

    std::size_t embed_dim() const { return phoneme_embedding.cols(); }
    std::size_t gcn_out_dim() const { return gcn.w1.cols(); }
    std::size_t proj_dim() const { return combine_w.cols(); }
    std::size_t stats_dim() const { return stats_w.cols() / 2; }

    /// Throws ShapeMismatch when any dimension is inconsistent.
    void validate() const;

    /// Seeded construction; biases start at zero. Deterministic per seed.
    static EncoderWeights seeded(std::size_t vocab, std::size_t embed, std::size_t hidden,
                                 std::size_t gcn_out, std::size_t proj, std::size_t stats,
                                 std::uint64_t seed);
    static EncoderWeights zeros(std::size_t vocab, std::size_t embed, std::size_t hidden,
                                std::size_t gcn_out, std::size_t proj, std::size_t stats);
};

struct EncoderOutput {
    Mat g_text;  // T×G phoneme-rate syntactic embedding
    Mat p_text;  // T×E phoneme embedding
    Mat mu;      // T×D
    Mat sigma;   // T×D, strictly positive
};

/// Row w = mean of phoneme_features over span w.
Mat word_pool(const Mat& phoneme_features, const std::vector<Span>& spans);

/// Row-wise concatenation [wp_out | gcn_out].
Mat combine(const Mat& wp_out, const Mat& gcn_out);

/// Copies word row w into every phoneme row of span w.
Mat broadcast_to_phonemes(const Mat& word_features, const std::vector<Span>& spans);

/// Linear projection to 2D values; μ is the first half, σ = exp(second half).
std::pair<Mat, Mat> stats_head(const Mat& fused, const Mat& weights, const Mat& bias);

/// Routes the encoder's GCN through the tile engine when tiles or workers
/// exceed 1; the result is bit-identical to the serial path either way.
struct GcnExecution {
    std::size_t tiles = 1;
    unsigned workers = 1;
};

EncoderOutput encode_utterance(const Utterance& utterance, const DependencyParse& parse,
                               const EncoderWeights& weights, const GcnExecution& exec = {});

}  // namespace fgt
