#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fgt/align.hpp"
#include "fgt/bsp.hpp"
#include "fgt/encoder.hpp"
#include "fgt/gcnmath.hpp"
#include "fgt/syngraph.hpp"
#include "fgt/tensorio.hpp"
#include "fgt/textfront.hpp"

namespace {

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw fgt::IoError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fgt::EncoderWeights weights_from_container(const fgt::TensorContainer& c) {
    fgt::EncoderWeights w;
    w.phoneme_embedding = c.at("phoneme_embedding").as_matrix();
    w.gcn.w0 = c.at("gcn.W0").as_matrix();
    w.gcn.w1 = c.at("gcn.W1").as_matrix();
    w.gcn.hidden_activation = fgt::Activation::relu;
    w.gcn.output_activation = fgt::Activation::none;
    w.combine_w = c.at("combine.W").as_matrix();
    w.combine_b = c.at("combine.b").as_matrix();
    w.stats_w = c.at("stats.W").as_matrix();
    w.stats_b = c.at("stats.b").as_matrix();
    w.validate();
    return w;
}

std::string join_forms(const fgt::DependencyParse& parse) {
    std::string text;
    for (std::size_t i = 0; i < parse.forms.size(); ++i) {
        if (i) text += ' ';
        text += parse.forms[i];
    }
    return text;
}

struct EncodeOpts {
    std::string lexicon, conllu, weights, out, text;
    std::size_t tiles = 1;
    unsigned workers = 1;
};

int run_encode(const EncodeOpts& o) {
    std::string stage = "io";
    try {
        stage = "lexicon";
        fgt::Lexicon lex = fgt::Lexicon::load_file(o.lexicon);

        stage = "parse";
        std::vector<fgt::DependencyParse> parses = fgt::parse_conllu(read_text_file(o.conllu));
        if (parses.empty()) throw std::runtime_error("no sentences in '" + o.conllu + "'");
        std::vector<fgt::DependencyParse> filtered;
        for (const auto& p : parses) filtered.push_back(fgt::strip_relation(p, "punct"));

        stage = "shape";
        fgt::EncoderWeights weights = weights_from_container(fgt::read_container_file(o.weights));
        if (weights.phoneme_embedding.rows() < lex.phoneme_inventory.size())
            throw fgt::ShapeMismatch("embedding table smaller than phoneme inventory");

        stage = "encode";
        if (!o.text.empty() && parses.size() != 1)
            throw std::runtime_error("--text requires exactly one CoNLL-U sentence, got " +
                                     std::to_string(parses.size()));

        fgt::TensorContainer out;
        for (std::size_t i = 0; i < filtered.size(); ++i) {
            stage = "lexicon";
            std::string text = !o.text.empty() ? o.text : join_forms(filtered[i]);
            fgt::Utterance utt = fgt::build_utterance(text, lex);
            stage = "encode";
            fgt::EncoderOutput enc =
                fgt::encode_utterance(utt, filtered[i], weights, {o.tiles, o.workers});
            const std::string sfx = "." + std::to_string(i);
            out.add(fgt::Tensor::f64_matrix("g_text" + sfx, enc.g_text));
            out.add(fgt::Tensor::f64_matrix("p_text" + sfx, enc.p_text));
            out.add(fgt::Tensor::f64_matrix("mu" + sfx, enc.mu));
            out.add(fgt::Tensor::f64_matrix("sigma" + sfx, enc.sigma));
        }
        stage = "io";
        fgt::write_container_file(o.out, out);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "fgt encode: stage " << stage << ": " << e.what() << "\n";
        return 1;
    }
}

struct AlignOpts {
    std::string weights, frames, out;
};

const fgt::Tensor& find_tensor(const fgt::TensorContainer& c, const std::string& name) {
    if (const fgt::Tensor* t = c.find(name)) return *t;
    if (const fgt::Tensor* t = c.find(name + ".0")) return *t;
    throw fgt::MalformedHeader("missing tensor '" + name + "'");
}

int run_align(const AlignOpts& o) {
    try {
        fgt::TensorContainer stats = fgt::read_container_file(o.weights);
        fgt::Mat mu = find_tensor(stats, "mu").as_matrix();
        fgt::Mat sigma = find_tensor(stats, "sigma").as_matrix();
        fgt::TensorContainer fc = fgt::read_container_file(o.frames);
        fgt::Mat frames = find_tensor(fc, "frames").as_matrix();

        fgt::Mat lattice = fgt::loglik_lattice(mu, sigma, frames);
        fgt::AlignmentPath path = fgt::mas(lattice);
        std::vector<std::int64_t> d = fgt::durations(path, mu.rows());
        double total = fgt::path_score(lattice, path);

        fgt::TensorContainer out;
        std::vector<double> dd(d.begin(), d.end());
        std::vector<double> pp(path.assign.begin(), path.assign.end());
        out.add(fgt::Tensor::f64_vector("durations", dd));
        out.add(fgt::Tensor::f64_vector("path", pp));
        fgt::write_container_file(o.out, out);

        std::printf("%.6f\n", total);
        return 0;
    } catch (const fgt::TooFewFrames&) {
        std::cerr << "fgt align: frames fewer than tokens\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "fgt align: " << e.what() << "\n";
        return 1;
    }
}

struct BenchOpts {
    fgt::BenchConfig cfg;
    std::string out;
};

int run_bench(const BenchOpts& o) {
    try {
        fgt::BenchReport report = fgt::bench(o.cfg);
        std::string json = fgt::bench_report_json(report);
        if (o.out.empty()) {
            std::cout << json << "\n";
        } else {
            std::ofstream f(o.out, std::ios::trunc);
            if (!f) throw fgt::IoError("cannot open '" + o.out + "'");
            f << json << "\n";
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "fgt bench: " << e.what() << "\n";
        return 1;
    }
}

struct InitOpts {
    std::string lexicon, dims, out;
    std::uint64_t seed = 0;
    bool zero_init = false;
};

int run_init_weights(const InitOpts& o) {
    try {
        std::vector<std::size_t> dims;
        std::stringstream ss(o.dims);
        std::string part;
        while (std::getline(ss, part, ',')) {
            std::size_t pos = 0;
            unsigned long v = 0;
            try {
                v = std::stoul(part, &pos);
            } catch (...) {
                throw std::runtime_error("--dims must be E,F,G,D positive integers");
            }
            if (pos != part.size() || v == 0)
                throw std::runtime_error("--dims must be E,F,G,D positive integers");
            dims.push_back(v);
        }
        if (dims.size() != 4)
            throw std::runtime_error("--dims must have exactly four components E,F,G,D");
        const std::size_t E = dims[0], F = dims[1], G = dims[2], D = dims[3];
        const std::size_t H = F;  // GCN hidden width follows the output width

        fgt::Lexicon lex = fgt::Lexicon::load_file(o.lexicon);
        const std::size_t V = lex.phoneme_inventory.size();

        fgt::EncoderWeights w = o.zero_init ? fgt::EncoderWeights::zeros(V, E, H, F, G, D)
                                            : fgt::EncoderWeights::seeded(V, E, H, F, G, D, o.seed);

        fgt::TensorContainer c;
        c.add(fgt::Tensor::f64_matrix("phoneme_embedding", w.phoneme_embedding));
        c.add(fgt::Tensor::f64_matrix("gcn.W0", w.gcn.w0));
        c.add(fgt::Tensor::f64_matrix("gcn.W1", w.gcn.w1));
        c.add(fgt::Tensor::f64_matrix("combine.W", w.combine_w));
        c.add(fgt::Tensor::f64_vector("combine.b", w.combine_b.row(0)));
        c.add(fgt::Tensor::f64_matrix("stats.W", w.stats_w));
        c.add(fgt::Tensor::f64_vector("stats.b", w.stats_b.row(0)));
        fgt::write_container_file(o.out, c);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "fgt init-weights: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"syntax-aware graph encoder: encode, align, bench, init-weights"};
    app.require_subcommand(1);

    EncodeOpts enc;
    CLI::App* enc_cmd = app.add_subcommand("encode", "encode sentences into g_text/p_text/mu/sigma");
    enc_cmd->add_option("--lexicon", enc.lexicon, "lexicon file")->required();
    enc_cmd->add_option("--conllu", enc.conllu, "CoNLL-U parses")->required();
    enc_cmd->add_option("--weights", enc.weights, "encoder weights (.fgt)")->required();
    enc_cmd->add_option("--out", enc.out, "output container (.fgt)")->required();
    enc_cmd->add_option("--text", enc.text, "inline text (single-sentence input only)");
    enc_cmd->add_option("--tiles", enc.tiles, "tile count for the GCN");
    enc_cmd->add_option("--workers", enc.workers, "worker threads for the GCN");

    AlignOpts aln;
    CLI::App* aln_cmd = app.add_subcommand("align", "monotonic alignment + durations");
    aln_cmd->add_option("--weights", aln.weights, "stats container holding mu/sigma (.fgt)")->required();
    aln_cmd->add_option("--frames", aln.frames, "frames container (.fgt)")->required();
    aln_cmd->add_option("--out", aln.out, "output container (.fgt)")->required();

    BenchOpts ben;
    ben.cfg.n_nodes = 100000;
    ben.cfg.avg_degree = 8;
    ben.cfg.feature_dim = 16;
    ben.cfg.n_tiles = 64;
    ben.cfg.workers = {1};
    ben.cfg.repeats = 5;
    CLI::App* ben_cmd = app.add_subcommand("bench", "tile-engine speedup benchmark");
    ben_cmd->add_option("--nodes", ben.cfg.n_nodes, "node count");
    ben_cmd->add_option("--degree", ben.cfg.avg_degree, "average degree");
    ben_cmd->add_option("--dims", ben.cfg.feature_dim, "feature dimension");
    ben_cmd->add_option("--tiles", ben.cfg.n_tiles, "tile count");
    ben_cmd->add_option("--workers", ben.cfg.workers, "worker counts, comma separated")
        ->delimiter(',');
    ben_cmd->add_option("--repeats", ben.cfg.repeats, "repeats per configuration");
    ben_cmd->add_option("--seed", ben.cfg.seed, "graph/feature seed");
    ben_cmd->add_flag("--fused,!--unfused", ben.cfg.fused, "fuse aggregation and activation");
    ben_cmd->add_option("--out", ben.out, "write the JSON report here instead of stdout");

    InitOpts ini;
    CLI::App* ini_cmd = app.add_subcommand("init-weights", "write seeded encoder weights");
    ini_cmd->add_option("--lexicon", ini.lexicon, "lexicon file (sizes the embedding)")->required();
    ini_cmd->add_option("--dims", ini.dims, "E,F,G,D")->required();
    ini_cmd->add_option("--seed", ini.seed, "64-bit seed")->required();
    ini_cmd->add_option("--out", ini.out, "output weights (.fgt)")->required();
    ini_cmd->add_flag("--zero-init", ini.zero_init, "write all-zero weights");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (enc_cmd->parsed()) return run_encode(enc);
    if (aln_cmd->parsed()) return run_align(aln);
    if (ben_cmd->parsed()) return run_bench(ben);
    if (ini_cmd->parsed()) return run_init_weights(ini);
    return 2;
}
