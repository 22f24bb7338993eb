#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fgt/matrix.hpp"

namespace fgt {

struct MalformedLine : std::runtime_error { explicit MalformedLine(const std::string& m) : std::runtime_error(m) {} };
struct CyclicParse : std::runtime_error { explicit CyclicParse(const std::string& m) : std::runtime_error(m) {} };
struct MultipleRoots : std::runtime_error { explicit MultipleRoots(const std::string& m) : std::runtime_error(m) {} };

/// One dependency-parsed sentence. Heads are 1-based, 0 marks the root.
struct DependencyParse {
    std::size_t n_words = 0;
    std::vector<int> heads;
    std::vector<std::string> relations;
    std::vector<std::string> forms;
};

/// Reads CoNLL-U text (10 tab-separated columns, blank-line sentence breaks,
/// `#` comments). Multiword-token ranges ("3-4") and empty nodes ("3.1") are
/// skipped. Validates single root and acyclicity per sentence.
std::vector<DependencyParse> parse_conllu(const std::string& text);

/// Throws when the parse violates its invariants (single root, no self-head,
/// acyclic, heads in range). `sentence_no` is used in diagnostics.
void validate_parse(const DependencyParse& parse, std::size_t sentence_no = 0);

/// Removes rows whose DEPREL equals `relation`, reattaching any orphaned
/// dependents to the nearest surviving ancestor (the root if none survives).
DependencyParse strip_relation(const DependencyParse& parse, const std::string& relation);

/// Undirected syntax graph over the words of one sentence: dependency edges
/// bidirectionalized, self-connections added for normalization.
struct SynGraph {
    std::size_t n = 0;
    std::vector<std::pair<std::size_t, std::size_t>> edges;  // i<j, sorted, unique
    Mat A;                                                   // 0/1 symmetric, zero diagonal
    Mat A_tilde;                                             // A + I
    std::vector<std::int64_t> deg_tilde;                     // row sums of A_tilde
    Mat A_hat;                                               // D̃^(-1/2) Ã D̃^(-1/2)
};

SynGraph build_syntax_graph(const DependencyParse& parse);

/// Recomputes D̃^(-1/2) Ã D̃^(-1/2) from the graph's adjacency and degrees.
Mat normalized_adjacency(const SynGraph& graph);

struct LaplacianMatrix {
    Mat delta;  // D - A, self-loops excluded; rows sum to exactly 0
};

LaplacianMatrix unnormalized_laplacian(const SynGraph& graph);

}  // namespace fgt
