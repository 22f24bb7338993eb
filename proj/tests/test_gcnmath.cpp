#include "doctest.h"

#include <random>

#include "fgt/gcnmath.hpp"
#include "fgt/rng.hpp"
#include "fgt/syngraph.hpp"
#include "oracles.hpp"

using namespace fgt;

namespace {

SynGraph graph_from_heads(const std::vector<int>& heads) {
    DependencyParse p;
    p.n_words = heads.size();
    p.heads = heads;
    p.relations.assign(heads.size(), "dep");
    p.forms.assign(heads.size(), "w");
    return build_syntax_graph(p);
}

SynGraph random_graph(std::size_t n, std::mt19937_64& gen) {
    return graph_from_heads(oracle::random_tree_heads(n, gen));
}

Mat identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

}  // namespace

TEST_CASE("softmax_rows basics and shift invariance") {
    Mat z = softmax_rows(Mat::from_rows({{0.0, 0.0}}));
    CHECK(z(0, 0) == doctest::Approx(0.5));
    CHECK(z(0, 1) == doctest::Approx(0.5));

    Mat big = softmax_rows(Mat::from_rows({{1000.0, 1000.0}}));
    CHECK(big(0, 0) == doctest::Approx(0.5));  // max-shift prevents overflow

    std::mt19937_64 gen(99);
    for (int iter = 0; iter < 100; ++iter) {
        Mat row = random_matrix(1, 5, -20, 20, gen);
        double c = uniform(gen, -50, 50);
        Mat shifted = row;
        for (std::size_t j = 0; j < 5; ++j) shifted(0, j) += c;
        CHECK(max_abs_diff(softmax_rows(row), softmax_rows(shifted)) <= 1e-12);
    }
}

TEST_CASE("gcn_layer: identity graph, zero weights, dense oracle") {
    Mat w = identity(2);
    Mat out = gcn_layer(Mat::from_rows({{-2.0, 3.0}}), identity(1), w, Activation::relu);
    CHECK(out(0, 0) == 0.0);
    CHECK(out(0, 1) == 3.0);

    std::mt19937_64 gen(3);
    SynGraph g = random_graph(4, gen);
    Mat h = random_matrix(4, 3, -2, 2, gen);
    CHECK(max_abs_diff(gcn_layer(h, g.A_hat, Mat(3, 5), Activation::relu), Mat(4, 5)) == 0.0);

    Mat wr = random_matrix(3, 5, -1, 1, gen);
    Mat got = gcn_layer(h, g.A_hat, wr, Activation::relu);
    oracle::EMat expect =
        oracle::relu(oracle::normalized_adjacency(4, g.edges) * oracle::to_eigen(h) * oracle::to_eigen(wr));
    CHECK(oracle::max_abs(oracle::to_eigen(got) - expect) <= 1e-12);

    CHECK_THROWS_AS(gcn_layer(h, g.A_hat, Mat(4, 2), Activation::relu), ShapeMismatch);
    CHECK_THROWS_AS(gcn_layer(Mat(3, 3), g.A_hat, Mat(3, 2), Activation::relu), ShapeMismatch);
}

TEST_CASE("gcn_forward matches composed layers and the softmax contract") {
    GcnParams zero;
    zero.w0 = Mat(3, 4);
    zero.w1 = Mat(4, 2);
    zero.output_activation = Activation::softmax_rows;
    Mat z = gcn_forward(Mat(5, 3), identity(5), zero);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(z(i, 0) == doctest::Approx(0.5));
        CHECK(z(i, 1) == doctest::Approx(0.5));
    }

    GcnParams one;
    one.w0 = Mat(1, 1, 1.0);
    one.w1 = Mat(1, 1, 1.0);
    one.output_activation = Activation::softmax_rows;
    CHECK(gcn_forward(Mat(1, 1, 3.0), identity(1), one)(0, 0) == 1.0);

    std::mt19937_64 gen(17);
    SynGraph g = random_graph(6, gen);
    GcnParams p;
    p.w0 = random_matrix(3, 4, -1, 1, gen);
    p.w1 = random_matrix(4, 2, -1, 1, gen);
    p.output_activation = Activation::softmax_rows;
    Mat x = random_matrix(6, 3, -2, 2, gen);

    Mat composed = gcn_layer(gcn_layer(x, g.A_hat, p.w0, Activation::relu), g.A_hat, p.w1,
                             Activation::softmax_rows);
    CHECK(max_abs_diff(gcn_forward(x, g.A_hat, p), composed) <= 1e-12);

    GcnParams raw = p;
    raw.output_activation = Activation::none;
    oracle::EMat raw_expect = oracle::gcn_forward(oracle::to_eigen(x),
                                                  oracle::normalized_adjacency(6, g.edges),
                                                  oracle::to_eigen(p.w0), oracle::to_eigen(p.w1),
                                                  /*softmax_out=*/false);
    CHECK(oracle::max_abs(oracle::to_eigen(gcn_forward(x, g.A_hat, raw)) - raw_expect) <= 1e-12);

    for (std::size_t i = 0; i < 6; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < 2; ++j) sum += composed(i, j);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("relu idempotence through identity layers") {
    std::mt19937_64 gen(5);
    Mat h = random_matrix(4, 4, -3, 3, gen);
    Mat once = gcn_layer(h, identity(4), identity(4), Activation::relu);
    Mat twice = gcn_layer(once, identity(4), identity(4), Activation::relu);
    CHECK(max_abs_diff(once, twice) == 0.0);
}

TEST_CASE("permutation equivariance of gcn_forward") {
    std::mt19937_64 gen(29);
    for (int iter = 0; iter < 10; ++iter) {
        std::size_t n = 3 + gen() % 8;
        SynGraph g = random_graph(n, gen);
        GcnParams p;
        p.w0 = random_matrix(3, 5, -1, 1, gen);
        p.w1 = random_matrix(5, 2, -1, 1, gen);
        p.output_activation = Activation::softmax_rows;
        Mat x = random_matrix(n, 3, -2, 2, gen);
        Mat z = gcn_forward(x, g.A_hat, p);

        std::vector<std::size_t> perm(n);
        for (std::size_t i = 0; i < n; ++i) perm[i] = i;
        std::shuffle(perm.begin(), perm.end(), gen);
        Mat px(n, x.cols());
        Mat pa(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < x.cols(); ++j) px(perm[i], j) = x(i, j);
            for (std::size_t j = 0; j < n; ++j) pa(perm[i], perm[j]) = g.A_hat(i, j);
        }
        Mat pz = gcn_forward(px, pa, p);
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < z.cols(); ++j)
                worst = std::max(worst, std::fabs(pz(perm[i], j) - z(i, j)));
        CHECK(worst <= 1e-8);
    }
}

TEST_CASE("mean_aggregate_layer") {
    SUBCASE("all nodes share a feature vector") {
        SynGraph g = graph_from_heads({2, 0, 2});
        Mat h(3, 2);
        for (std::size_t i = 0; i < 3; ++i) {
            h(i, 0) = -1.5;
            h(i, 1) = 2.5;
        }
        Mat out = mean_aggregate_layer(h, g, identity(2));
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(out(i, 0) == 0.0);  // relu clips the negative component
            CHECK(out(i, 1) == doctest::Approx(2.5).epsilon(1e-15));
        }
    }
    SUBCASE("isolated node sees only itself") {
        SynGraph g = graph_from_heads({0});
        Mat h = Mat::from_rows({{3.0, -4.0}});
        Mat out = mean_aggregate_layer(h, g, identity(2));
        CHECK(out(0, 0) == 3.0);
        CHECK(out(0, 1) == 0.0);
    }
    SUBCASE("matches the per-node loop oracle") {
        std::mt19937_64 gen(41);
        SynGraph g = random_graph(5, gen);
        Mat h = random_matrix(5, 3, -2, 2, gen);
        Mat w = random_matrix(3, 4, -1, 1, gen);
        Mat got = mean_aggregate_layer(h, g, w);
        for (std::size_t v = 0; v < 5; ++v) {
            std::vector<double> mean(3, 0.0);
            double count = 0;
            for (std::size_t u = 0; u < 5; ++u) {
                if (g.A_tilde(v, u) == 0.0) continue;
                for (std::size_t k = 0; k < 3; ++k) mean[k] += h(u, k);
                count += 1;
            }
            for (std::size_t j = 0; j < 4; ++j) {
                double acc = 0.0;
                for (std::size_t k = 0; k < 3; ++k) acc += mean[k] / count * w(k, j);
                CHECK(got(v, j) == doctest::Approx(acc > 0 ? acc : 0.0).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("laplacian penalty: examples, quadratic-form identity, invariances") {
    SUBCASE("constant rows give zero penalty") {
        Mat f(4, 3, 7.0);
        Mat a(4, 4);
        a(0, 1) = a(1, 0) = a(2, 3) = a(3, 2) = 1.0;
        auto [total, penalty] = laplacian_penalty(f, a, {0.5, 9.0});
        CHECK(penalty == 0.0);
        CHECK(total == 9.0);
    }
    SUBCASE("two nodes, ordered pairs count twice") {
        Mat f = Mat::from_rows({{0.0}, {1.0}});
        Mat a = Mat::from_rows({{0.0, 1.0}, {1.0, 0.0}});
        auto [total, penalty] = laplacian_penalty(f, a, {1.0, 0.0});
        CHECK(penalty == 2.0);
        CHECK(total == 2.0);
    }
    SUBCASE("identity with 2·trace(F'ΔF) on random graphs") {
        std::mt19937_64 gen(59);
        for (int iter = 0; iter < 50; ++iter) {
            std::size_t n = 2 + gen() % 18;
            auto edges = oracle::random_edges(n, 0.3, gen);
            Mat a(n, n);
            for (auto [i, j] : edges) a(i, j) = a(j, i) = 1.0;
            Mat f = random_matrix(n, 1 + gen() % 5, -3, 3, gen);
            auto [total, penalty] = laplacian_penalty(f, a, {1.0, 0.0});
            (void)total;
            double expect = oracle::laplacian_quadratic_form(oracle::to_eigen(f), edges, n);
            CHECK(std::fabs(penalty - expect) <= 1e-10);
            CHECK(penalty >= 0.0);

            // adding a constant row vector to every row leaves the penalty unchanged
            Mat shifted = f;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < f.cols(); ++j) shifted(i, j) += 2.75;
            auto [t2, p2] = laplacian_penalty(shifted, a, {1.0, 0.0});
            (void)t2;
            CHECK(std::fabs(p2 - penalty) <= 1e-10);
        }
    }
    SUBCASE("zero exactly when constant on each connected component") {
        // two components: {0,1} and {2,3,4}
        Mat a(5, 5);
        a(0, 1) = a(1, 0) = 1.0;
        a(2, 3) = a(3, 2) = a(3, 4) = a(4, 3) = 1.0;
        Mat f(5, 1);
        f(0, 0) = f(1, 0) = 4.0;
        f(2, 0) = f(3, 0) = f(4, 0) = -1.0;
        CHECK(laplacian_penalty(f, a, {1.0, 0.0}).second == 0.0);
        f(1, 0) = 4.5;
        CHECK(laplacian_penalty(f, a, {1.0, 0.0}).second > 0.0);
    }
    SUBCASE("negative lambda rejected") {
        CHECK_THROWS_AS(laplacian_penalty(Mat(2, 1), Mat(2, 2), {-1.0, 0.0}), std::invalid_argument);
    }
}

TEST_CASE("gcn_gradients: trivial cases and finite differences") {
    std::mt19937_64 gen(613);
    SynGraph g = random_graph(6, gen);
    GcnParams p;
    p.w0 = random_matrix(5, 4, -1, 1, gen);
    p.w1 = random_matrix(4, 3, -1, 1, gen);
    p.output_activation = Activation::softmax_rows;
    Mat x = random_matrix(6, 5, -1, 1, gen);

    SUBCASE("zero upstream, zero signal") {
        GcnGradients zg = gcn_gradients(x, g.A_hat, p, Mat(6, 3));
        CHECK(max_abs_diff(zg.w0, Mat(5, 4)) == 0.0);
        CHECK(max_abs_diff(zg.w1, Mat(4, 3)) == 0.0);
        CHECK(max_abs_diff(zg.x, Mat(6, 5)) == 0.0);

        GcnParams pn = p;
        pn.output_activation = Activation::none;
        GcnGradients zx = gcn_gradients(Mat(6, 5), g.A_hat, pn, random_matrix(6, 3, -1, 1, gen));
        CHECK(max_abs_diff(zx.w1, Mat(4, 3)) == 0.0);  // relu(0) kills the W1 signal
    }

    SUBCASE("matches central finite differences for both output activations") {
        for (Activation out_act : {Activation::softmax_rows, Activation::none}) {
            p.output_activation = out_act;
            Mat upstream = random_matrix(6, 3, -1, 1, gen);
            GcnGradients analytic = gcn_gradients(x, g.A_hat, p, upstream);

            auto loss_for = [&](const Mat& x_, const GcnParams& p_) {
                Mat z = gcn_forward(x_, g.A_hat, p_);
                double j = 0.0;
                for (std::size_t i = 0; i < z.rows(); ++i)
                    for (std::size_t k = 0; k < z.cols(); ++k) j += upstream(i, k) * z(i, k);
                return j;
            };
            const double h = 1e-5;
            Mat fd_w0 = oracle::finite_difference(
                [&](const Mat& m) { GcnParams q = p; q.w0 = m; return loss_for(x, q); }, p.w0, h);
            Mat fd_w1 = oracle::finite_difference(
                [&](const Mat& m) { GcnParams q = p; q.w1 = m; return loss_for(x, q); }, p.w1, h);
            Mat fd_x = oracle::finite_difference([&](const Mat& m) { return loss_for(m, p); }, x, h);

            CHECK(oracle::gradient_rel_error(analytic.w0, fd_w0) <= 1e-4);
            CHECK(oracle::gradient_rel_error(analytic.w1, fd_w1) <= 1e-4);
            CHECK(oracle::gradient_rel_error(analytic.x, fd_x) <= 1e-4);
        }
    }
}

TEST_CASE("seeded initialization is deterministic and bounded") {
    GcnParams a = init_gcn_params(6, 4, 3, Activation::none, 12345);
    GcnParams b = init_gcn_params(6, 4, 3, Activation::none, 12345);
    CHECK(a.w0 == b.w0);
    CHECK(a.w1 == b.w1);
    GcnParams c = init_gcn_params(6, 4, 3, Activation::none, 54321);
    CHECK(max_abs_diff(a.w0, c.w0) > 0.0);
    const double bound = 1.0 / std::sqrt(6.0);
    for (std::size_t i = 0; i < a.w0.rows(); ++i)
        for (std::size_t j = 0; j < a.w0.cols(); ++j) {
            CHECK(a.w0(i, j) >= -bound);
            CHECK(a.w0(i, j) < bound);
        }
}
