#include "loop/gnn/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <fstream>
#include <random>
#include <set>

namespace loop::gnn {

std::vector<double> Matrix::apply(std::span<const double> x) const {
    if (x.size() != cols)
        throw ShapeMismatch("matrix with " + std::to_string(cols) + " columns applied to vector of " +
                            std::to_string(x.size()));
    std::vector<double> out(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = data.data() + r * cols;
        double acc = 0.0;
        for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
        out[r] = acc;
    }
    return out;
}

double elu(double x) { return x > 0.0 ? x : std::expm1(x); }

double leaky_relu(double x) { return x > 0.0 ? x : kLeakySlope * x; }

namespace {

// mt19937_64 output is fully specified; the mapping to [0,1) is done by hand
// because distribution objects differ between standard libraries.
class PortableUniform {
public:
    explicit PortableUniform(std::uint64_t seed) : rng_(seed) {}
    double next(double limit) {
        double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
        return static_cast<double>(static_cast<float>((2.0 * u - 1.0) * limit));
    }

private:
    std::mt19937_64 rng_;
};

void xavier(std::vector<double>& v, std::size_t fan_in, std::size_t fan_out, PortableUniform& rng) {
    double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& x : v) x = rng.next(limit);
}

std::vector<const std::vector<double>*> tensors(const GnnWeights& w) {
    std::vector<const std::vector<double>*> out = {&w.W_input.data, &w.b_input};
    for (const auto& layer : w.layers)
        for (const auto& h : layer.heads) {
            out.push_back(&h.W.data);
            out.push_back(&h.a_src);
            out.push_back(&h.a_dst);
        }
    out.push_back(&w.W_edge.data);
    out.push_back(&w.b_edge);
    return out;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> expected_shapes() {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> out = {{kHidden, embedding::kDim}, {kHidden, 1}};
    std::size_t in = kHidden;
    for (std::size_t l = 0; l < kLayers; ++l) {
        for (std::size_t h = 0; h < kHeads; ++h) {
            out.push_back({kHidden, static_cast<std::uint32_t>(in)});
            out.push_back({kHidden, 1});
            out.push_back({kHidden, 1});
        }
        in = l + 1 < kLayers ? kHidden * kHeads : kHidden;
    }
    out.push_back({kRelations, static_cast<std::uint32_t>(2 * in)});
    out.push_back({kRelations, 1});
    return out;
}

GnnWeights empty_architecture() {
    GnnWeights w;
    w.W_input = Matrix(kHidden, embedding::kDim);
    w.b_input.assign(kHidden, 0.0);
    std::size_t in = kHidden;
    for (std::size_t l = 0; l < kLayers; ++l) {
        LayerWeights layer;
        layer.concat = l + 1 < kLayers;
        for (std::size_t h = 0; h < kHeads; ++h)
            layer.heads.push_back({Matrix(kHidden, in), std::vector<double>(kHidden), std::vector<double>(kHidden)});
        in = layer.output_width();
        w.layers.push_back(std::move(layer));
    }
    w.W_edge = Matrix(kRelations, 2 * in);
    w.b_edge.assign(kRelations, 0.0);
    return w;
}

void put_u32(std::ostream& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw WeightFileError("truncated weight file");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

GnnWeights GnnWeights::seeded(std::uint64_t seed) {
    GnnWeights w = empty_architecture();
    PortableUniform rng(seed);
    xavier(w.W_input.data, embedding::kDim, kHidden, rng);
    for (auto& layer : w.layers)
        for (auto& h : layer.heads) {
            xavier(h.W.data, h.W.cols, kHidden, rng);
            xavier(h.a_src, kHidden, 1, rng);
            xavier(h.a_dst, kHidden, 1, rng);
        }
    xavier(w.W_edge.data, w.W_edge.cols, kRelations, rng);
    return w;
}

void GnnWeights::check() const {
    auto fail = [](const std::string& what) { throw ShapeMismatch("gnn weights: " + what); };
    if (W_input.rows == 0 || W_input.cols != embedding::kDim) fail("input projection must take 384 inputs");
    if (W_input.data.size() != W_input.rows * W_input.cols) fail("input projection storage");
    if (b_input.size() != W_input.rows) fail("input bias width");
    if (layers.empty()) fail("no attention layers");
    std::size_t width = W_input.rows;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        if (layer.heads.empty()) fail("layer without heads");
        for (const auto& h : layer.heads) {
            if (h.W.cols != width || h.W.rows != kHidden || h.W.data.size() != h.W.rows * h.W.cols)
                fail("layer " + std::to_string(l + 1) + " projection shape");
            if (h.a_src.size() != kHidden || h.a_dst.size() != kHidden)
                fail("layer " + std::to_string(l + 1) + " attention vector width");
        }
        width = layer.output_width();
    }
    if (W_edge.rows != kRelations || W_edge.cols != 2 * width || W_edge.data.size() != W_edge.rows * W_edge.cols)
        fail("edge classifier shape");
    if (b_edge.size() != kRelations) fail("edge classifier bias");
    for (const auto* t : tensors(*this))
        for (double x : *t)
            if (!std::isfinite(x)) fail("non-finite weight");
}

void GnnWeights::save(const std::filesystem::path& path) const {
    check();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw WeightFileError("cannot write " + path.string());
    auto all = tensors(*this);
    out.write("LGNN", 4);
    put_u32(out, kWeightFormatVersion);
    put_u32(out, static_cast<std::uint32_t>(all.size()));
    auto shapes = expected_shapes();
    // Actual shapes, which equal the expected ones after check().
    std::vector<std::pair<std::uint32_t, std::uint32_t>> actual = {
        {static_cast<std::uint32_t>(W_input.rows), static_cast<std::uint32_t>(W_input.cols)},
        {static_cast<std::uint32_t>(b_input.size()), 1}};
    for (const auto& layer : layers)
        for (const auto& h : layer.heads) {
            actual.push_back({static_cast<std::uint32_t>(h.W.rows), static_cast<std::uint32_t>(h.W.cols)});
            actual.push_back({static_cast<std::uint32_t>(h.a_src.size()), 1});
            actual.push_back({static_cast<std::uint32_t>(h.a_dst.size()), 1});
        }
    actual.push_back({static_cast<std::uint32_t>(W_edge.rows), static_cast<std::uint32_t>(W_edge.cols)});
    actual.push_back({static_cast<std::uint32_t>(b_edge.size()), 1});
    if (actual != shapes) throw ShapeMismatch("gnn weights do not match the persisted architecture");
    for (auto [r, c] : actual) {
        put_u32(out, r);
        put_u32(out, c);
    }
    for (const auto* t : all)
        for (double x : *t) {
            float f = static_cast<float>(x);
            std::uint32_t bits;
            std::memcpy(&bits, &f, 4);
            put_u32(out, bits);
        }
    if (!out) throw WeightFileError("failed writing " + path.string());
}

GnnWeights GnnWeights::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw WeightFileError("cannot open " + path.string());
    char magic[4];
    if (!in.read(magic, 4) || std::string(magic, 4) != "LGNN") throw WeightFileError("not a weight file: bad magic");
    std::uint32_t version = get_u32(in);
    if (version != kWeightFormatVersion) throw WeightFileError("unsupported weight file version " + std::to_string(version));
    std::uint32_t count = get_u32(in);
    auto shapes = expected_shapes();
    if (count != shapes.size()) throw ShapeMismatch("weight file has " + std::to_string(count) + " tensors");
    for (std::size_t i = 0; i < count; ++i) {
        std::uint32_t r = get_u32(in), c = get_u32(in);
        if (std::make_pair(r, c) != shapes[i])
            throw ShapeMismatch("weight file tensor " + std::to_string(i) + " has shape " + std::to_string(r) + "x" +
                                std::to_string(c));
    }
    GnnWeights w = empty_architecture();
    for (const auto* t : tensors(w)) {
        auto& v = const_cast<std::vector<double>&>(*t);
        for (double& x : v) {
            std::uint32_t bits = get_u32(in);
            float f;
            std::memcpy(&f, &bits, 4);
            x = f;
        }
    }
    if (in.peek() != std::char_traits<char>::eof()) throw WeightFileError("trailing bytes in weight file");
    w.check();
    return w;
}

std::size_t TaskGraph::add_node(std::string id, std::string text, const embedding::Embedder& embedder) {
    Node n{std::move(id), std::move(text), {}};
    n.embedding = embedder.embed(n.text);
    nodes.push_back(std::move(n));
    return nodes.size() - 1;
}

void TaskGraph::add_edge(std::size_t src, std::size_t dst) {
    if (src >= nodes.size() || dst >= nodes.size()) throw std::invalid_argument("edge references a missing node");
    edges.emplace_back(src, dst);
}

void TaskGraph::check() const {
    std::set<std::string> ids;
    for (const auto& n : nodes)
        if (!ids.insert(n.id).second) throw std::invalid_argument("duplicate node id '" + n.id + "'");
    for (auto [s, d] : edges)
        if (s >= nodes.size() || d >= nodes.size()) throw std::invalid_argument("edge references a missing node");
}

Features node_init(const TaskGraph& g, const GnnWeights& w) {
    if (w.W_input.cols != embedding::kDim || w.b_input.size() != w.W_input.rows)
        throw ShapeMismatch("input projection is not shape-compatible with 384-dimensional embeddings");
    g.check();
    Features out;
    out.reserve(g.nodes.size());
    for (const auto& n : g.nodes) {
        auto h = w.W_input.apply(n.embedding);
        for (std::size_t i = 0; i < h.size(); ++i) h[i] = std::max(0.0, h[i] + w.b_input[i]);
        out.push_back(std::move(h));
    }
    return out;
}

Features gat_layer(const Features& h, const std::vector<std::vector<std::size_t>>& in_neighbours,
                   const LayerWeights& layer, LayerAttention* attention) {
    const std::size_t n = h.size();
    if (in_neighbours.size() != n) throw ShapeMismatch("neighbour lists do not match node count");
    if (attention) attention->assign(layer.heads.size(), HeadAttention(n));
    Features out(n, std::vector<double>(layer.output_width(), 0.0));

    for (std::size_t k = 0; k < layer.heads.size(); ++k) {
        const auto& head = layer.heads[k];
        std::vector<std::vector<double>> z(n);
        std::vector<double> src_score(n), dst_score(n);
        for (std::size_t i = 0; i < n; ++i) {
            z[i] = head.W.apply(h[i]);
            double s = 0.0, d = 0.0;
            for (std::size_t c = 0; c < kHidden; ++c) {
                s += head.a_src[c] * z[i][c];
                d += head.a_dst[c] * z[i][c];
            }
            src_score[i] = s;
            dst_score[i] = d;
        }
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<std::size_t> nb = in_neighbours[i];
            nb.push_back(i);
            std::sort(nb.begin(), nb.end());
            nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
            // Aggregate in order of neighbour content so that results do not
            // depend on node numbering.
            std::stable_sort(nb.begin(), nb.end(), [&](std::size_t a, std::size_t b) { return z[a] < z[b]; });

            std::vector<double> logits(nb.size());
            double top = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < nb.size(); ++j) {
                logits[j] = leaky_relu(src_score[i] + dst_score[nb[j]]);
                top = std::max(top, logits[j]);
            }
            double denom = 0.0;
            for (double& l : logits) {
                l = std::exp(l - top);
                denom += l;
            }
            std::vector<double> agg(kHidden, 0.0);
            for (std::size_t j = 0; j < nb.size(); ++j) {
                double alpha = logits[j] / denom;
                if (attention) (*attention)[k][i].emplace_back(nb[j], alpha);
                for (std::size_t c = 0; c < kHidden; ++c) agg[c] += alpha * z[nb[j]][c];
            }
            if (layer.concat) {
                std::copy(agg.begin(), agg.end(), out[i].begin() + static_cast<std::ptrdiff_t>(k * kHidden));
            } else {
                for (std::size_t c = 0; c < kHidden; ++c) out[i][c] += agg[c];
            }
        }
    }
    for (auto& row : out)
        for (double& x : row) {
            if (!layer.concat) x /= static_cast<double>(layer.heads.size());
            x = elu(x);
        }
    return out;
}

Features gat_forward(const TaskGraph& g, const Features& h0, const GnnWeights& w,
                     std::vector<LayerAttention>* attention) {
    g.check();
    if (h0.size() != g.nodes.size()) throw ShapeMismatch("feature count does not match node count");
    std::vector<std::vector<std::size_t>> in_neighbours(g.nodes.size());
    for (auto [s, d] : g.edges) in_neighbours[d].push_back(s);
    if (attention) attention->clear();
    Features h = h0;
    for (const auto& layer : w.layers) {
        for (const auto& row : h)
            if (row.size() != layer.input_width()) throw ShapeMismatch("layer input width mismatch");
        LayerAttention la;
        h = gat_layer(h, in_neighbours, layer, attention ? &la : nullptr);
        if (attention) attention->push_back(std::move(la));
    }
    return h;
}

RelationPrediction predict_from_logits(std::span<const double> logits) {
    if (logits.size() != kRelations) throw ShapeMismatch("expected 5 relation logits");
    RelationPrediction p;
    double top = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (std::size_t i = 0; i < kRelations; ++i) {
        p.distribution[i] = std::isinf(top) ? (logits[i] == top ? 1.0 : 0.0) : std::exp(logits[i] - top);
        denom += p.distribution[i];
    }
    std::size_t best = 0;
    for (std::size_t i = 0; i < kRelations; ++i) {
        p.distribution[i] /= denom;
        if (p.distribution[i] > p.distribution[best]) best = i;
    }
    p.relation = kAllRelations[best];
    p.confidence = p.distribution[best];
    return p;
}

RelationPrediction classify_edge(std::span<const double> h_u, std::span<const double> h_v, const GnnWeights& w) {
    std::vector<double> pair(h_u.begin(), h_u.end());
    pair.insert(pair.end(), h_v.begin(), h_v.end());
    auto logits = w.W_edge.apply(pair);
    for (std::size_t i = 0; i < logits.size() && i < w.b_edge.size(); ++i) logits[i] += w.b_edge[i];
    return predict_from_logits(logits);
}

}  // namespace loop::gnn
