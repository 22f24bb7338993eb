#include "fgt/bsp.hpp"

#include <algorithm>
#include <barrier>
#include <chrono>
#include <cmath>
#include <cstring>
#include <map>
#include <stdexcept>
#include <thread>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "fgt/rng.hpp"

namespace fgt {

namespace {

std::size_t lemire_bounded(std::mt19937_64& gen, std::size_t n) {
    return static_cast<std::size_t>((static_cast<unsigned __int128>(gen()) * n) >> 64);
}

/// Per-layer view of one weight matrix in the requested scalar type.
template <typename Scalar>
struct LayerSpec {
    const Scalar* w = nullptr;  // w_in × w_out, row-major
    std::size_t w_in = 0;
    std::size_t w_out = 0;
    Activation act = Activation::relu;
};

template <typename Scalar>
struct TileState {
    std::size_t begin = 0, end = 0;
    std::vector<Scalar> h;        // owned input rows of the current layer
    std::vector<Scalar> proj;     // owned projected rows (H·W)
    std::vector<Scalar> halo;     // received neighbor projections
    std::vector<Scalar> scratch;  // pre-activation rows in unfused mode
    std::vector<std::size_t> halo_ids;  // sorted global node ids
    std::vector<std::size_t> in_msgs;   // schedule indices with dst == this tile
};

template <typename Scalar>
Scalar norm_coeff(std::int64_t deg_v, std::int64_t deg_u) {
    return Scalar(1) / std::sqrt(static_cast<Scalar>(deg_v) * static_cast<Scalar>(deg_u));
}

template <typename Scalar>
void softmax_row_inplace(Scalar* row, std::size_t width) {
    if (width == 0) return;
    Scalar mx = row[0];
    for (std::size_t j = 1; j < width; ++j)
        if (row[j] > mx) mx = row[j];
    Scalar sum = 0;
    for (std::size_t j = 0; j < width; ++j) {
        row[j] = std::exp(row[j] - mx);
        sum += row[j];
    }
    for (std::size_t j = 0; j < width; ++j) row[j] /= sum;
}

/// row · W with terms added in ascending k order (matches serial matmul).
template <typename Scalar>
void project_row(const Scalar* row, const LayerSpec<Scalar>& layer, Scalar* out) {
    for (std::size_t j = 0; j < layer.w_out; ++j) out[j] = 0;
    for (std::size_t k = 0; k < layer.w_in; ++k) {
        const Scalar hk = row[k];
        const Scalar* wrow = layer.w + k * layer.w_out;
        for (std::size_t j = 0; j < layer.w_out; ++j) out[j] += hk * wrow[j];
    }
}

/// Aggregates projected neighbor rows of node v into acc, ascending node id.
/// `stride` is the row pitch of the proj/halo buffers.
template <typename Scalar>
void aggregate_node(std::size_t v, const CsrGraph& g, const TilePlan& plan,
                    const std::vector<TileState<Scalar>>& tiles, std::size_t my_tile,
                    std::size_t width, std::size_t stride, Scalar* acc) {
    const TileState<Scalar>& mine = tiles[my_tile];
    for (std::size_t j = 0; j < width; ++j) acc[j] = 0;
    for (std::size_t u : g.row(v)) {
        const Scalar coeff = norm_coeff<Scalar>(g.deg_tilde[v], g.deg_tilde[u]);
        const Scalar* src;
        if (plan.owner[u] == my_tile) {
            src = mine.proj.data() + (u - mine.begin) * stride;
        } else {
            auto it = std::lower_bound(mine.halo_ids.begin(), mine.halo_ids.end(), u);
            src = mine.halo.data() + static_cast<std::size_t>(it - mine.halo_ids.begin()) * stride;
        }
        for (std::size_t j = 0; j < width; ++j) acc[j] += coeff * src[j];
    }
}

template <typename Scalar>
void activate_row(Scalar* row, std::size_t width, Activation act) {
    switch (act) {
        case Activation::none:
            break;
        case Activation::relu:
            for (std::size_t j = 0; j < width; ++j) row[j] = row[j] > Scalar(0) ? row[j] : Scalar(0);
            break;
        case Activation::softmax_rows:
            softmax_row_inplace(row, width);
            break;
    }
}

template <typename Scalar>
std::vector<Scalar> run_engine(const std::vector<Scalar>& x, std::size_t in_dim,
                               const CsrGraph& g, const std::vector<LayerSpec<Scalar>>& layers,
                               const TilePlan& plan, const ExchangeSchedule& schedule,
                               unsigned workers, bool fused) {
    const std::size_t n_tiles = plan.n_tiles;
    std::size_t max_w = in_dim;
    for (const auto& l : layers) max_w = std::max(max_w, l.w_out);

    // All buffers are sized up front; worker bodies never allocate.
    std::vector<TileState<Scalar>> tiles(n_tiles);
    for (std::size_t t = 0; t < n_tiles; ++t) {
        TileState<Scalar>& st = tiles[t];
        st.begin = plan.tile_ranges[t].first;
        st.end = plan.tile_ranges[t].second;
        const std::size_t rows = st.end - st.begin;
        st.h.resize(rows * max_w);
        st.proj.resize(rows * max_w);
        st.scratch.resize(fused ? 0 : rows * max_w);
        for (std::size_t i = 0; i < rows; ++i)
            std::copy_n(x.data() + (st.begin + i) * in_dim, in_dim, st.h.data() + i * max_w);
    }
    for (std::size_t m = 0; m < schedule.messages.size(); ++m) {
        const ExchangeMessage& msg = schedule.messages[m];
        tiles[msg.dst_tile].in_msgs.push_back(m);
        auto& ids = tiles[msg.dst_tile].halo_ids;
        ids.insert(ids.end(), msg.node_ids.begin(), msg.node_ids.end());
    }
    for (auto& st : tiles) {
        std::sort(st.halo_ids.begin(), st.halo_ids.end());
        st.halo_ids.erase(std::unique(st.halo_ids.begin(), st.halo_ids.end()), st.halo_ids.end());
        st.halo.resize(st.halo_ids.size() * max_w);
    }

    const std::size_t out_dim = layers.back().w_out;
    std::vector<Scalar> out(g.n * out_dim);

    const unsigned nw = workers;
    std::barrier sync(static_cast<std::ptrdiff_t>(nw));
    std::vector<std::exception_ptr> errors(nw);

    auto worker_fn = [&](unsigned wid) {
        try {
            for (std::size_t li = 0; li < layers.size(); ++li) {
                const LayerSpec<Scalar>& layer = layers[li];
                const std::size_t w_out = layer.w_out;
                const bool last = li + 1 == layers.size();

                // compute phase: project owned rows
                for (std::size_t t = wid; t < n_tiles; t += nw) {
                    TileState<Scalar>& st = tiles[t];
                    for (std::size_t i = 0; i < st.end - st.begin; ++i)
                        project_row(st.h.data() + i * max_w, layer, st.proj.data() + i * max_w);
                }
                sync.arrive_and_wait();

                // exchange phase: each destination tile pulls per the schedule
                for (std::size_t t = wid; t < n_tiles; t += nw) {
                    TileState<Scalar>& st = tiles[t];
                    for (std::size_t mi : st.in_msgs) {
                        const ExchangeMessage& msg = schedule.messages[mi];
                        const TileState<Scalar>& src = tiles[msg.src_tile];
                        for (std::size_t u : msg.node_ids) {
                            auto it = std::lower_bound(st.halo_ids.begin(), st.halo_ids.end(), u);
                            std::copy_n(src.proj.data() + (u - src.begin) * max_w, w_out,
                                        st.halo.data() +
                                            static_cast<std::size_t>(it - st.halo_ids.begin()) * max_w);
                        }
                    }
                }
                sync.arrive_and_wait();

                // compute phase: aggregate + activation into the next layer input
                for (std::size_t t = wid; t < n_tiles; t += nw) {
                    TileState<Scalar>& st = tiles[t];
                    const std::size_t rows = st.end - st.begin;
                    for (std::size_t i = 0; i < rows; ++i) {
                        Scalar* dst = last ? out.data() + (st.begin + i) * out_dim
                                           : st.h.data() + i * max_w;
                        Scalar* row = fused ? dst : st.scratch.data() + i * max_w;
                        aggregate_node(st.begin + i, g, plan, tiles, t, w_out, max_w, row);
                        if (fused) activate_row(row, w_out, layer.act);
                    }
                    if (!fused) {
                        for (std::size_t i = 0; i < rows; ++i)
                            activate_row(st.scratch.data() + i * max_w, w_out, layer.act);
                        for (std::size_t i = 0; i < rows; ++i) {
                            Scalar* dst = last ? out.data() + (st.begin + i) * out_dim
                                               : st.h.data() + i * max_w;
                            std::copy_n(st.scratch.data() + i * max_w, w_out, dst);
                        }
                    }
                }
                // The aggregate above and the next layer's projection are both
                // tile-local, so they form a single compute phase: no barrier
                // until the next exchange.
            }
        } catch (...) {
            errors[wid] = std::current_exception();
        }
    };

    if (nw == 1) {
        worker_fn(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nw);
        for (unsigned wid = 0; wid < nw; ++wid) pool.emplace_back(worker_fn, wid);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

template <typename Scalar>
std::vector<Scalar> mat_to_scalars(const Mat& m) {
    std::vector<Scalar> v(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) v[i] = static_cast<Scalar>(m.data()[i]);
    return v;
}

}  // namespace

CsrGraph CsrGraph::from_edges(std::size_t n,
                              std::span<const std::pair<std::size_t, std::size_t>> edges) {
    CsrGraph g;
    g.n = n;
    std::vector<std::size_t> deg(n, 1);  // self loop
    for (auto [u, v] : edges) {
        ++deg[u];
        ++deg[v];
    }
    g.offsets.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) g.offsets[i + 1] = g.offsets[i] + deg[i];
    g.neighbors.resize(g.offsets[n]);
    std::vector<std::size_t> cursor(g.offsets.begin(), g.offsets.end() - 1);
    for (std::size_t i = 0; i < n; ++i) g.neighbors[cursor[i]++] = i;
    for (auto [u, v] : edges) {
        g.neighbors[cursor[u]++] = v;
        g.neighbors[cursor[v]++] = u;
    }
    for (std::size_t i = 0; i < n; ++i)
        std::sort(g.neighbors.begin() + static_cast<std::ptrdiff_t>(g.offsets[i]),
                  g.neighbors.begin() + static_cast<std::ptrdiff_t>(g.offsets[i + 1]));
    g.deg_tilde.assign(deg.begin(), deg.end());
    return g;
}

CsrGraph CsrGraph::from_syngraph(const SynGraph& g) { return from_edges(g.n, g.edges); }

TilePlan partition(std::size_t n_nodes, std::size_t n_tiles) {
    if (n_tiles == 0) throw ZeroTiles("partition: n_tiles must be >= 1");
    TilePlan plan;
    plan.n_tiles = n_tiles;
    plan.owner.resize(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i)
        plan.owner[i] = static_cast<std::uint32_t>(
            static_cast<unsigned __int128>(i) * n_tiles / n_nodes);
    plan.tile_ranges.resize(n_tiles);
    for (std::size_t t = 0; t < n_tiles; ++t) {
        auto begin_of = [&](std::size_t tt) -> std::size_t {
            if (n_nodes == 0) return 0;
            return static_cast<std::size_t>(
                (static_cast<unsigned __int128>(tt) * n_nodes + n_tiles - 1) / n_tiles);
        };
        plan.tile_ranges[t] = {begin_of(t), begin_of(t + 1)};
    }
    return plan;
}

ExchangeSchedule plan_exchange(const TilePlan& plan, const CsrGraph& graph) {
    std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> buckets;
    for (std::size_t v = 0; v < graph.n; ++v) {
        const std::size_t dst = plan.owner[v];
        for (std::size_t u : graph.row(v)) {
            if (u == v) continue;
            const std::size_t src = plan.owner[u];
            if (src != dst) buckets[{src, dst}].push_back(u);
        }
    }
    ExchangeSchedule sched;
    for (auto& [key, ids] : buckets) {
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        sched.messages.push_back({key.first, key.second, std::move(ids)});
    }
    return sched;
}

std::vector<std::size_t> tile_memory_bytes(const TilePlan& plan, const CsrGraph& graph,
                                           const ExchangeSchedule& schedule,
                                           std::size_t max_feature_dim, std::size_t scalar_size) {
    (void)graph;
    std::vector<std::size_t> halo_rows(plan.n_tiles, 0);
    for (const auto& msg : schedule.messages) halo_rows[msg.dst_tile] += msg.node_ids.size();
    std::vector<std::size_t> bytes(plan.n_tiles);
    for (std::size_t t = 0; t < plan.n_tiles; ++t) {
        std::size_t owned = plan.tile_size(t);
        // h + proj + one output/scratch row set, plus received halo rows
        bytes[t] = (3 * owned + halo_rows[t]) * max_feature_dim * scalar_size;
    }
    return bytes;
}

Mat bsp_forward(const Mat& x, const CsrGraph& graph, const GcnParams& params,
                const TilePlan& plan, const ExchangeSchedule& schedule, unsigned workers,
                bool fused) {
    if (workers == 0) throw std::invalid_argument("bsp_forward: workers must be >= 1");
    if (plan.owner.size() != graph.n)
        throw ShapeMismatch("bsp_forward: plan covers " + std::to_string(plan.owner.size()) +
                            " nodes, graph has " + std::to_string(graph.n));
    if (x.rows() != graph.n)
        throw ShapeMismatch("bsp_forward: X rows != node count");
    if (x.cols() != params.w0.rows())
        throw ShapeMismatch("bsp_forward: X width incompatible with W0");
    if (params.w0.cols() != params.w1.rows())
        throw ShapeMismatch("bsp_forward: W0/W1 inner dimensions disagree");

    if (plan.memory_budget) {
        std::size_t max_w = std::max({x.cols(), params.w0.cols(), params.w1.cols()});
        auto usage = tile_memory_bytes(plan, graph, schedule, max_w, sizeof(double));
        for (std::size_t t = 0; t < usage.size(); ++t)
            if (usage[t] > *plan.memory_budget)
                throw std::runtime_error("bsp_forward: tile " + std::to_string(t) +
                                         " needs " + std::to_string(usage[t]) +
                                         " bytes, budget is " + std::to_string(*plan.memory_budget));
    }

    std::vector<double> xv(x.data(), x.data() + x.size());
    std::vector<double> w0 = mat_to_scalars<double>(params.w0);
    std::vector<double> w1 = mat_to_scalars<double>(params.w1);
    std::vector<LayerSpec<double>> layers = {
        {w0.data(), params.w0.rows(), params.w0.cols(), params.hidden_activation},
        {w1.data(), params.w1.rows(), params.w1.cols(), params.output_activation},
    };
    std::vector<double> flat =
        run_engine<double>(xv, x.cols(), graph, layers, plan, schedule, workers, fused);
    Mat out(graph.n, params.w1.cols());
    std::copy(flat.begin(), flat.end(), out.data());
    return out;
}

Mat bsp_forward(const Mat& x, const CsrGraph& graph, const GcnParams& params,
                const TilePlan& plan, unsigned workers, bool fused) {
    return bsp_forward(x, graph, params, plan, plan_exchange(plan, graph), workers, fused);
}

std::vector<std::pair<std::size_t, std::size_t>> random_graph_edges(std::size_t n_nodes,
                                                                    std::size_t avg_degree,
                                                                    std::mt19937_64& gen) {
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    if (n_nodes < 2) return edges;
    std::size_t target = n_nodes * avg_degree / 2;
    const std::size_t max_edges = n_nodes * (n_nodes - 1) / 2;
    target = std::min(target, max_edges);
    edges.reserve(target);
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(target * 2);
    std::size_t attempts = 0;
    const std::size_t attempt_cap = 20 * target + 1000;
    while (edges.size() < target && attempts < attempt_cap) {
        ++attempts;
        std::size_t u = lemire_bounded(gen, n_nodes);
        std::size_t v = lemire_bounded(gen, n_nodes);
        if (u == v) continue;
        if (u > v) std::swap(u, v);
        std::uint64_t key = static_cast<std::uint64_t>(u) * n_nodes + v;
        if (seen.insert(key).second) edges.emplace_back(u, v);
    }
    std::sort(edges.begin(), edges.end());
    return edges;
}

BenchReport bench(const BenchConfig& cfg) {
    if (cfg.n_nodes == 0 || cfg.avg_degree == 0 || cfg.feature_dim == 0 || cfg.n_tiles == 0 ||
        cfg.repeats == 0 || cfg.workers.empty())
        throw std::invalid_argument("bench: all parameters must be positive");
    for (unsigned w : cfg.workers)
        if (w == 0) throw std::invalid_argument("bench: worker counts must be >= 1");

    std::mt19937_64 gen(cfg.seed);
    auto edges = random_graph_edges(cfg.n_nodes, cfg.avg_degree, gen);
    CsrGraph graph = CsrGraph::from_edges(cfg.n_nodes, edges);
    Mat x = random_matrix(cfg.n_nodes, cfg.feature_dim, -1.0, 1.0, gen);
    Mat w0 = fan_in_init(cfg.feature_dim, cfg.feature_dim, gen);
    Mat w1 = fan_in_init(cfg.feature_dim, cfg.feature_dim, gen);

    TilePlan plan = partition(cfg.n_nodes, cfg.n_tiles);
    ExchangeSchedule schedule = plan_exchange(plan, graph);

    // Bench mode runs single precision for throughput realism; the
    // double-precision path is what the equivalence tests exercise.
    std::vector<float> xf = mat_to_scalars<float>(x);
    std::vector<float> w0f = mat_to_scalars<float>(w0);
    std::vector<float> w1f = mat_to_scalars<float>(w1);
    std::vector<LayerSpec<float>> layers = {
        {w0f.data(), w0.rows(), w0.cols(), Activation::relu},
        {w1f.data(), w1.rows(), w1.cols(), Activation::none},
    };

    BenchReport report;
    report.config = cfg;
    report.n_edges = edges.size();
    volatile float sink = 0;
    for (unsigned w : cfg.workers) {
        std::vector<double> times;
        times.reserve(cfg.repeats);
        for (unsigned r = 0; r < cfg.repeats; ++r) {
            auto t0 = std::chrono::steady_clock::now();
            std::vector<float> out = run_engine<float>(xf, cfg.feature_dim, graph, layers, plan,
                                                       schedule, w, cfg.fused);
            auto t1 = std::chrono::steady_clock::now();
            sink = sink + out[0] + out[out.size() - 1];
            times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
        std::sort(times.begin(), times.end());
        double median = times.size() % 2 == 1
                            ? times[times.size() / 2]
                            : 0.5 * (times[times.size() / 2 - 1] + times[times.size() / 2]);
        report.timings_ms.push_back(median);
    }
    std::size_t baseline = 0;
    for (std::size_t i = 0; i < cfg.workers.size(); ++i)
        if (cfg.workers[i] == 1) {
            baseline = i;
            break;
        }
    for (double t : report.timings_ms) report.speedup.push_back(report.timings_ms[baseline] / t);
    return report;
}

std::string bench_report_json(const BenchReport& report) {
    nlohmann::json j;
    j["config"] = {
        {"n_nodes", report.config.n_nodes},
        {"n_edges", report.n_edges},
        {"avg_degree", report.config.avg_degree},
        {"feature_dim", report.config.feature_dim},
        {"n_tiles", report.config.n_tiles},
        {"workers", report.config.workers},
        {"repeats", report.config.repeats},
        {"seed", report.config.seed},
        {"fused", report.config.fused},
        {"precision", "f32"},
    };
    j["timings_ms"] = report.timings_ms;
    j["speedup"] = report.speedup;
    return j.dump(2);
}

}  // namespace fgt
