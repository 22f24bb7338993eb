#include "fgt/align.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace fgt {

namespace {
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
}

Mat loglik_lattice(const Mat& mu, const Mat& sigma, const Mat& frames) {
    if (!mu.same_shape(sigma))
        throw ShapeMismatch("loglik_lattice: mu and sigma shapes differ");
    if (frames.cols() != mu.cols())
        throw ShapeMismatch("loglik_lattice: frame width " + std::to_string(frames.cols()) +
                            " != stats width " + std::to_string(mu.cols()));
    for (std::size_t t = 0; t < sigma.rows(); ++t)
        for (std::size_t k = 0; k < sigma.cols(); ++k)
            if (!(sigma(t, k) > 0.0))
                throw NonPositiveSigma("sigma[" + std::to_string(t) + "][" + std::to_string(k) +
                                       "] = " + std::to_string(sigma(t, k)));

    Mat lattice(frames.rows(), mu.rows());
    for (std::size_t s = 0; s < frames.rows(); ++s) {
        for (std::size_t t = 0; t < mu.rows(); ++t) {
            double ll = 0.0;
            for (std::size_t k = 0; k < mu.cols(); ++k) {
                const double sd = sigma(t, k);
                const double diff = frames(s, k) - mu(t, k);
                ll += -std::log(sd) - kHalfLog2Pi - diff * diff / (2.0 * sd * sd);
            }
            lattice(s, t) = ll;
        }
    }
    return lattice;
}

AlignmentPath mas(const Mat& lattice) {
    const std::size_t S = lattice.rows();
    const std::size_t T = lattice.cols();
    if (T == 0 || S == 0) throw ShapeMismatch("mas: lattice must have at least one frame and token");
    if (S < T)
        throw TooFewFrames("mas: " + std::to_string(S) + " frames cannot cover " +
                           std::to_string(T) + " tokens");

    const double neg_inf = -std::numeric_limits<double>::infinity();
    Mat q(S, T, neg_inf);
    q(0, 0) = lattice(0, 0);
    for (std::size_t s = 1; s < S; ++s) {
        // Reachable band: t <= s, and enough frames must remain for the tail.
        const std::size_t t_lo = T + s >= S ? T + s - S : 0;
        const std::size_t t_hi = std::min(s, T - 1);
        for (std::size_t t = t_lo; t <= t_hi; ++t) {
            const double stay = q(s - 1, t);
            const double advance = t > 0 ? q(s - 1, t - 1) : neg_inf;
            const double best = stay >= advance ? stay : advance;
            if (best == neg_inf) continue;
            q(s, t) = lattice(s, t) + best;
        }
    }

    AlignmentPath path;
    path.assign.assign(S, 0);
    std::size_t t = T - 1;
    path.assign[S - 1] = t;
    for (std::size_t s = S - 1; s > 0; --s) {
        // Tie-break toward staying on the same token.
        if (t > 0 && q(s - 1, t) < q(s - 1, t - 1)) --t;
        path.assign[s - 1] = t;
    }
    return path;
}

std::vector<std::int64_t> durations(const AlignmentPath& path, std::size_t t_text) {
    std::vector<std::int64_t> d(t_text, 0);
    for (std::size_t tok : path.assign) {
        if (tok >= t_text)
            throw ShapeMismatch("durations: path token " + std::to_string(tok) +
                                " outside T_text = " + std::to_string(t_text));
        ++d[tok];
    }
    return d;
}

double path_score(const Mat& lattice, const AlignmentPath& path) {
    double score = 0.0;
    for (std::size_t s = 0; s < path.assign.size(); ++s) score += lattice(s, path.assign[s]);
    return score;
}

}  // namespace fgt
