#include "fgt/gcnmath.hpp"

#include <cmath>
#include <stdexcept>

#include "fgt/rng.hpp"

namespace fgt {

Mat softmax_rows(const Mat& m) {
    Mat out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        if (m.cols() == 0) continue;
        double mx = m(i, 0);
        for (std::size_t j = 1; j < m.cols(); ++j)
            if (m(i, j) > mx) mx = m(i, j);
        double sum = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) {
            out(i, j) = std::exp(m(i, j) - mx);
            sum += out(i, j);
        }
        for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) /= sum;
    }
    return out;
}

Mat apply_activation(const Mat& m, Activation act) {
    switch (act) {
        case Activation::none:
            return m;
        case Activation::relu: {
            Mat out(m.rows(), m.cols());
            for (std::size_t i = 0; i < m.rows(); ++i)
                for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = relu_scalar(m(i, j));
            return out;
        }
        case Activation::softmax_rows:
            return softmax_rows(m);
    }
    throw std::invalid_argument("unknown activation");
}

Mat gcn_layer(const Mat& h_in, const Mat& a_hat, const Mat& w, Activation act) {
    if (a_hat.rows() != a_hat.cols())
        throw ShapeMismatch("gcn_layer: A_hat must be square");
    if (a_hat.cols() != h_in.rows())
        throw ShapeMismatch("gcn_layer: A_hat is " + std::to_string(a_hat.rows()) + "x" +
                            std::to_string(a_hat.cols()) + " but H has " +
                            std::to_string(h_in.rows()) + " rows");
    if (h_in.cols() != w.rows())
        throw ShapeMismatch("gcn_layer: H width " + std::to_string(h_in.cols()) +
                            " incompatible with W rows " + std::to_string(w.rows()));
    return apply_activation(matmul(a_hat, matmul(h_in, w)), act);
}

Mat gcn_forward(const Mat& x, const Mat& a_hat, const GcnParams& params) {
    if (params.w0.cols() != params.w1.rows())
        throw ShapeMismatch("gcn_forward: W0 cols " + std::to_string(params.w0.cols()) +
                            " != W1 rows " + std::to_string(params.w1.rows()));
    Mat hidden = gcn_layer(x, a_hat, params.w0, params.hidden_activation);
    return gcn_layer(hidden, a_hat, params.w1, params.output_activation);
}

Mat mean_aggregate_layer(const Mat& h_in, const SynGraph& graph, const Mat& w) {
    if (h_in.rows() != graph.n)
        throw ShapeMismatch("mean_aggregate_layer: H rows != node count");
    if (h_in.cols() != w.rows())
        throw ShapeMismatch("mean_aggregate_layer: H width incompatible with W rows");
    Mat mean(graph.n, h_in.cols());
    for (std::size_t v = 0; v < graph.n; ++v) {
        // N(v) under A_tilde: ascending scan naturally includes the self loop.
        std::int64_t count = 0;
        for (std::size_t u = 0; u < graph.n; ++u) {
            if (graph.A_tilde(v, u) == 0.0) continue;
            for (std::size_t k = 0; k < h_in.cols(); ++k) mean(v, k) += h_in(u, k);
            ++count;
        }
        for (std::size_t k = 0; k < h_in.cols(); ++k) mean(v, k) /= static_cast<double>(count);
    }
    return apply_activation(matmul(mean, w), Activation::relu);
}

std::pair<double, double> laplacian_penalty(const Mat& f_out, const Mat& a, const RegConfig& cfg) {
    if (a.rows() != a.cols()) throw ShapeMismatch("laplacian_penalty: A must be square");
    if (f_out.rows() != a.rows())
        throw ShapeMismatch("laplacian_penalty: F rows != A dimension");
    if (cfg.lambda < 0.0) throw std::invalid_argument("laplacian_penalty: lambda must be >= 0");
    double penalty = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            if (a(i, j) == 0.0) continue;
            double sq = 0.0;
            for (std::size_t k = 0; k < f_out.cols(); ++k) {
                double d = f_out(i, k) - f_out(j, k);
                sq += d * d;
            }
            penalty += a(i, j) * sq;
        }
    }
    return {cfg.base_loss + cfg.lambda * penalty, penalty};
}

GcnGradients gcn_gradients(const Mat& x, const Mat& a_hat, const GcnParams& params,
                           const Mat& upstream) {
    if (params.hidden_activation != Activation::relu && params.hidden_activation != Activation::none)
        throw std::invalid_argument("gcn_gradients: unsupported hidden activation");

    // Forward pass, keeping the intermediates the backward pass needs.
    Mat p = matmul(x, params.w0);
    Mat q = matmul(a_hat, p);
    Mat r = apply_activation(q, params.hidden_activation);
    Mat s = matmul(r, params.w1);
    Mat t = matmul(a_hat, s);
    if (!upstream.same_shape(t))
        throw ShapeMismatch("gcn_gradients: upstream must be " + std::to_string(t.rows()) + "x" +
                            std::to_string(t.cols()));

    Mat dt(t.rows(), t.cols());
    switch (params.output_activation) {
        case Activation::none:
            dt = upstream;
            break;
        case Activation::softmax_rows: {
            Mat z = softmax_rows(t);
            for (std::size_t i = 0; i < z.rows(); ++i) {
                double dot = 0.0;
                for (std::size_t j = 0; j < z.cols(); ++j) dot += upstream(i, j) * z(i, j);
                for (std::size_t j = 0; j < z.cols(); ++j)
                    dt(i, j) = z(i, j) * (upstream(i, j) - dot);
            }
            break;
        }
        case Activation::relu:
            for (std::size_t i = 0; i < t.rows(); ++i)
                for (std::size_t j = 0; j < t.cols(); ++j)
                    dt(i, j) = t(i, j) > 0.0 ? upstream(i, j) : 0.0;
            break;
    }

    Mat a_hat_t = transpose(a_hat);
    Mat ds = matmul(a_hat_t, dt);
    GcnGradients g;
    g.w1 = matmul(transpose(r), ds);
    Mat dr = matmul(ds, transpose(params.w1));
    Mat dq = dr;
    if (params.hidden_activation == Activation::relu) {
        for (std::size_t i = 0; i < q.rows(); ++i)
            for (std::size_t j = 0; j < q.cols(); ++j)
                if (q(i, j) <= 0.0) dq(i, j) = 0.0;
    }
    Mat dp = matmul(a_hat_t, dq);
    g.w0 = matmul(transpose(x), dp);
    g.x = matmul(dp, transpose(params.w0));
    return g;
}

Mat fan_in_init(std::size_t rows, std::size_t cols, std::mt19937_64& gen) {
    double bound = 1.0 / std::sqrt(static_cast<double>(rows));
    return random_matrix(rows, cols, -bound, bound, gen);
}

GcnParams init_gcn_params(std::size_t in_dim, std::size_t hidden_dim, std::size_t out_dim,
                          Activation output_activation, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    GcnParams p;
    p.w0 = fan_in_init(in_dim, hidden_dim, gen);
    p.w1 = fan_in_init(hidden_dim, out_dim, gen);
    p.hidden_activation = Activation::relu;
    p.output_activation = output_activation;
    return p;
}

}  // namespace fgt
