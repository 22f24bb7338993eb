#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fgt/gcnmath.hpp"
#include "fgt/matrix.hpp"
#include "fgt/syngraph.hpp"

namespace fgt {

struct ZeroTiles : std::runtime_error { explicit ZeroTiles(const std::string& m) : std::runtime_error(m) {} };

/// Adjacency-list form of the syntax graph used by the tile engine; neighbor
/// lists include the node itself (the self-connection) in ascending order, so
/// aggregation visits exactly the nonzero pattern of A_tilde.
struct CsrGraph {
    std::size_t n = 0;
    std::vector<std::size_t> offsets;    // n+1
    std::vector<std::size_t> neighbors;  // ascending per node, self included
    std::vector<std::int64_t> deg_tilde;

    std::span<const std::size_t> row(std::size_t v) const {
        return {neighbors.data() + offsets[v], offsets[v + 1] - offsets[v]};
    }
    std::size_t edge_count() const { return (neighbors.size() - n) / 2; }

    static CsrGraph from_edges(std::size_t n,
                               std::span<const std::pair<std::size_t, std::size_t>> edges);
    static CsrGraph from_syngraph(const SynGraph& g);
};

/// Assignment of nodes to tiles: node i lives on tile floor(i·n_tiles/n),
/// so tile node ranges are contiguous and sizes differ by at most one.
struct TilePlan {
    std::size_t n_tiles = 0;
    std::vector<std::uint32_t> owner;                               // per node
    std::vector<std::pair<std::size_t, std::size_t>> tile_ranges;   // [begin,end) per tile
    std::optional<std::size_t> memory_budget = std::nullopt;        // bytes per tile

    std::size_t tile_size(std::size_t t) const {
        return tile_ranges[t].second - tile_ranges[t].first;
    }
};

TilePlan partition(std::size_t n_nodes, std::size_t n_tiles);

struct ExchangeMessage {
    std::size_t src_tile = 0;
    std::size_t dst_tile = 0;
    std::vector<std::size_t> node_ids;  // sorted, duplicate-free
};

/// The per-superstep message list. Neighbor sets do not change between GCN
/// layers, so the same schedule is replayed in every superstep.
struct ExchangeSchedule {
    std::vector<ExchangeMessage> messages;  // sorted by (src_tile, dst_tile)
};

ExchangeSchedule plan_exchange(const TilePlan& plan, const CsrGraph& graph);

/// Worst-case per-tile bytes for one superstep at the given feature width:
/// owned input/output rows plus received halo rows.
std::vector<std::size_t> tile_memory_bytes(const TilePlan& plan, const CsrGraph& graph,
                                           const ExchangeSchedule& schedule,
                                           std::size_t max_feature_dim, std::size_t scalar_size);

/// Two-layer GCN forward on the tile engine: per superstep, tiles project
/// their owned rows, synchronize, exchange halo rows per the schedule,
/// synchronize, then aggregate and activate. Output is bit-identical to
/// gcn_forward (fixed ascending-neighbor accumulation order).
Mat bsp_forward(const Mat& x, const CsrGraph& graph, const GcnParams& params,
                const TilePlan& plan, unsigned workers, bool fused = true);

/// Overload with a precomputed schedule (what the benchmark times).
Mat bsp_forward(const Mat& x, const CsrGraph& graph, const GcnParams& params,
                const TilePlan& plan, const ExchangeSchedule& schedule, unsigned workers,
                bool fused = true);

struct BenchConfig {
    std::size_t n_nodes = 0;
    std::size_t avg_degree = 0;
    std::size_t feature_dim = 0;
    std::size_t n_tiles = 1;
    std::vector<unsigned> workers = {1};
    unsigned repeats = 1;
    std::uint64_t seed = 0;
    bool fused = true;
};

struct BenchReport {
    BenchConfig config;
    std::size_t n_edges = 0;
    std::vector<double> timings_ms;  // median per worker count
    std::vector<double> speedup;     // wall_ms(1 worker) / wall_ms(k workers)
};

/// Seeded synthetic graph + features; times the tile engine (f32) per worker
/// count and reports medians. Same seed, same graph.
BenchReport bench(const BenchConfig& cfg);

/// Single JSON document with keys `config`, `timings_ms`, `speedup`.
std::string bench_report_json(const BenchReport& report);

/// Deterministic synthetic graph used by bench (exposed for tests).
std::vector<std::pair<std::size_t, std::size_t>> random_graph_edges(std::size_t n_nodes,
                                                                    std::size_t avg_degree,
                                                                    std::mt19937_64& gen);

}  // namespace fgt
