#pragma once

#include <cstdint>
#include <vector>

#include "fgt/matrix.hpp"

namespace fgt {

struct NonPositiveSigma : std::runtime_error { explicit NonPositiveSigma(const std::string& m) : std::runtime_error(m) {} };
struct TooFewFrames : std::runtime_error { explicit TooFewFrames(const std::string& m) : std::runtime_error(m) {} };

/// Monotonic, surjective frame→token assignment: assign[s+1] is assign[s] or
/// assign[s]+1, starting at token 0 and ending at the last token.
struct AlignmentPath {
    std::vector<std::size_t> assign;  // length S, token index per frame
};

/// Diagonal-Gaussian log likelihood of every (frame, token) pair:
/// L[s][t] = Σ_k −log σ[t][k] − ½log(2π) − (frames[s][k] − μ[t][k])² / (2σ[t][k]²).
Mat loglik_lattice(const Mat& mu, const Mat& sigma, const Mat& frames);

/// Dynamic program Q[s][t] = L[s][t] + max(Q[s−1][t], Q[s−1][t−1]) with
/// backtracking; ties prefer staying on the same token. Requires S ≥ T.
AlignmentPath mas(const Mat& lattice);

/// Frames assigned to each token; sums to S, every entry ≥ 1 for valid paths.
std::vector<std::int64_t> durations(const AlignmentPath& path, std::size_t t_text);

/// Σ_s L[s][assign[s]], summed in ascending frame order.
double path_score(const Mat& lattice, const AlignmentPath& path);

}  // namespace fgt
