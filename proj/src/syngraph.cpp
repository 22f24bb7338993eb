#include "fgt/syngraph.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fgt {

namespace {

struct Row {
    int id = 0;
    std::string form;
    int head = 0;
    std::string deprel;
    std::size_t line_no = 0;
};

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
        std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            cols.push_back(line.substr(start));
            break;
        }
        cols.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return cols;
}

bool parse_int(const std::string& s, int& out) {
    if (s.empty()) return false;
    int v = 0;
    for (char c : s) {
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
        if (v > 1000000) return false;
    }
    out = v;
    return true;
}

DependencyParse finalize_sentence(std::vector<Row>& rows, std::size_t sentence_no) {
    DependencyParse p;
    p.n_words = rows.size();
    for (const Row& r : rows) {
        if (r.head < 0 || static_cast<std::size_t>(r.head) > rows.size())
            throw MalformedLine("line " + std::to_string(r.line_no) + ": head " +
                                std::to_string(r.head) + " out of range [0, " +
                                std::to_string(rows.size()) + "]");
        p.heads.push_back(r.head);
        p.relations.push_back(r.deprel);
        p.forms.push_back(r.form);
    }
    rows.clear();
    validate_parse(p, sentence_no);
    return p;
}

}  // namespace

void validate_parse(const DependencyParse& parse, std::size_t sentence_no) {
    const std::string where = "sentence " + std::to_string(sentence_no);
    if (parse.heads.size() != parse.n_words || parse.forms.size() != parse.n_words ||
        parse.relations.size() != parse.n_words)
        throw MalformedLine(where + ": field lengths disagree with word count");

    std::size_t roots = 0;
    for (std::size_t i = 0; i < parse.n_words; ++i) {
        int h = parse.heads[i];
        if (h < 0 || static_cast<std::size_t>(h) > parse.n_words)
            throw MalformedLine(where + ": head out of range at word " + std::to_string(i + 1));
        if (h == 0) ++roots;
    }
    if (roots > 1) throw MultipleRoots(where + ": " + std::to_string(roots) + " roots");

    // Walk the head chain from every word; re-entering an in-progress chain
    // means a cycle (this also covers the zero-root case and self-heads).
    std::vector<int> color(parse.n_words, 0);  // 0 unvisited, 1 on path, 2 done
    for (std::size_t start = 0; start < parse.n_words; ++start) {
        std::size_t w = start;
        std::vector<std::size_t> path;
        while (color[w] == 0) {
            color[w] = 1;
            path.push_back(w);
            int h = parse.heads[w];
            if (h == 0) break;
            w = static_cast<std::size_t>(h - 1);
        }
        if (color[w] == 1 && (parse.heads[w] != 0))
            throw CyclicParse(where + ": head chain from word " + std::to_string(start + 1) +
                              " forms a cycle");
        for (std::size_t v : path) color[v] = 2;
    }
    if (roots == 0 && parse.n_words > 0) throw CyclicParse(where + ": no root");
}

std::vector<DependencyParse> parse_conllu(const std::string& text) {
    std::vector<DependencyParse> parses;
    std::vector<Row> rows;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    int expected_id = 1;

    auto flush = [&] {
        if (!rows.empty()) {
            parses.push_back(finalize_sentence(rows, parses.size() + 1));
            expected_id = 1;
        }
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            flush();
            continue;
        }
        if (line[0] == '#') continue;

        std::vector<std::string> cols = split_tabs(line);
        if (cols.size() != 10)
            throw MalformedLine("line " + std::to_string(line_no) + ": expected 10 tab-separated columns, got " +
                                std::to_string(cols.size()));
        const std::string& id_field = cols[0];
        if (id_field.find('-') != std::string::npos || id_field.find('.') != std::string::npos)
            continue;  // multiword-token range or empty node

        Row r;
        r.line_no = line_no;
        if (!parse_int(id_field, r.id) || r.id != expected_id)
            throw MalformedLine("line " + std::to_string(line_no) + ": bad or non-consecutive ID '" +
                                id_field + "'");
        ++expected_id;
        r.form = cols[1];
        if (!parse_int(cols[6], r.head))
            throw MalformedLine("line " + std::to_string(line_no) + ": bad HEAD '" + cols[6] + "'");
        r.deprel = cols[7];
        rows.push_back(std::move(r));
    }
    flush();
    return parses;
}

DependencyParse strip_relation(const DependencyParse& parse, const std::string& relation) {
    std::vector<bool> keep(parse.n_words);
    std::vector<int> new_index(parse.n_words, -1);
    int count = 0;
    for (std::size_t i = 0; i < parse.n_words; ++i) {
        keep[i] = parse.relations[i] != relation;
        if (keep[i]) new_index[i] = count++;
    }

    DependencyParse out;
    out.n_words = static_cast<std::size_t>(count);
    for (std::size_t i = 0; i < parse.n_words; ++i) {
        if (!keep[i]) continue;
        int h = parse.heads[i];
        while (h != 0 && !keep[static_cast<std::size_t>(h - 1)])
            h = parse.heads[static_cast<std::size_t>(h - 1)];
        out.heads.push_back(h == 0 ? 0 : new_index[static_cast<std::size_t>(h - 1)] + 1);
        out.relations.push_back(parse.relations[i]);
        out.forms.push_back(parse.forms[i]);
    }
    if (out.n_words > 0) validate_parse(out);
    return out;
}

SynGraph build_syntax_graph(const DependencyParse& parse) {
    SynGraph g;
    g.n = parse.n_words;
    for (std::size_t i = 0; i < parse.n_words; ++i) {
        int h = parse.heads[i];
        if (h == 0) continue;
        std::size_t a = i, b = static_cast<std::size_t>(h - 1);
        g.edges.emplace_back(std::min(a, b), std::max(a, b));
    }
    std::sort(g.edges.begin(), g.edges.end());
    g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());

    g.A = Mat(g.n, g.n);
    for (auto [i, j] : g.edges) {
        g.A(i, j) = 1.0;
        g.A(j, i) = 1.0;
    }
    g.A_tilde = g.A;
    for (std::size_t i = 0; i < g.n; ++i) g.A_tilde(i, i) = 1.0;

    g.deg_tilde.assign(g.n, 1);  // self-connection
    for (auto [i, j] : g.edges) {
        ++g.deg_tilde[i];
        ++g.deg_tilde[j];
    }
    g.A_hat = normalized_adjacency(g);
    return g;
}

Mat normalized_adjacency(const SynGraph& graph) {
    Mat a_hat(graph.n, graph.n);
    for (std::size_t i = 0; i < graph.n; ++i) {
        for (std::size_t j = 0; j < graph.n; ++j) {
            double a = graph.A_tilde(i, j);
            if (a == 0.0) continue;
            a_hat(i, j) = a / std::sqrt(static_cast<double>(graph.deg_tilde[i]) *
                                        static_cast<double>(graph.deg_tilde[j]));
        }
    }
    return a_hat;
}

LaplacianMatrix unnormalized_laplacian(const SynGraph& graph) {
    std::vector<std::int64_t> deg(graph.n, 0);
    for (auto [i, j] : graph.edges) {
        ++deg[i];
        ++deg[j];
    }
    LaplacianMatrix lap;
    lap.delta = Mat(graph.n, graph.n);
    for (std::size_t i = 0; i < graph.n; ++i) lap.delta(i, i) = static_cast<double>(deg[i]);
    for (auto [i, j] : graph.edges) {
        lap.delta(i, j) = -1.0;
        lap.delta(j, i) = -1.0;
    }
    return lap;
}

}  // namespace fgt
