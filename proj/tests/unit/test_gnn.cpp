#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "loop/gnn/gnn.hpp"

using namespace loop;
using namespace loop::gnn;
namespace fs = std::filesystem;

namespace {

TaskGraph random_graph(std::mt19937& rng, std::size_t n, double edge_p) {
    static const embedding::HashEmbedder embedder;
    TaskGraph g;
    for (std::size_t i = 0; i < n; ++i)
        g.add_node("n" + std::to_string(i), "node text " + std::to_string(rng() % 1000), embedder);
    std::uniform_real_distribution<double> u(0, 1);
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t d = 0; d < n; ++d)
            if (s != d && u(rng) < edge_p) g.add_edge(s, d);
    return g;
}

// Straight-line forward pass: no neighbour sorting, plain loops.
std::vector<std::vector<double>> scratch_forward(const TaskGraph& g, const GnnWeights& w) {
    const std::size_t n = g.nodes.size();
    std::vector<std::vector<double>> h(n);
    for (std::size_t i = 0; i < n; ++i) {
        h[i].assign(w.W_input.rows, 0.0);
        for (std::size_t r = 0; r < w.W_input.rows; ++r) {
            double s = w.b_input[r];
            for (std::size_t c = 0; c < w.W_input.cols; ++c) s += w.W_input.at(r, c) * g.nodes[i].embedding[c];
            h[i][r] = s > 0 ? s : 0;
        }
    }
    for (const auto& layer : w.layers) {
        std::vector<std::vector<double>> next(n, std::vector<double>(layer.output_width(), 0.0));
        for (std::size_t k = 0; k < layer.heads.size(); ++k) {
            const auto& hd = layer.heads[k];
            std::vector<std::vector<double>> z(n, std::vector<double>(hd.W.rows, 0.0));
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t r = 0; r < hd.W.rows; ++r)
                    for (std::size_t c = 0; c < hd.W.cols; ++c) z[i][r] += hd.W.at(r, c) * h[i][c];
            for (std::size_t i = 0; i < n; ++i) {
                std::vector<std::size_t> nb = {i};
                for (auto [s, d] : g.edges)
                    if (d == i && std::find(nb.begin(), nb.end(), s) == nb.end()) nb.push_back(s);
                std::vector<double> e;
                for (std::size_t j : nb) {
                    double v = 0;
                    for (std::size_t c = 0; c < z[i].size(); ++c) v += hd.a_src[c] * z[i][c] + hd.a_dst[c] * z[j][c];
                    e.push_back(v > 0 ? v : 0.2 * v);
                }
                double sum = 0;
                for (double v : e) sum += std::exp(v);
                for (std::size_t t = 0; t < nb.size(); ++t) {
                    double a = std::exp(e[t]) / sum;
                    for (std::size_t c = 0; c < z[i].size(); ++c) {
                        if (layer.concat) next[i][k * z[i].size() + c] += a * z[nb[t]][c];
                        else next[i][c] += a * z[nb[t]][c] / static_cast<double>(layer.heads.size());
                    }
                }
            }
        }
        for (auto& row : next)
            for (double& x : row) x = x > 0 ? x : std::exp(x) - 1.0;
        h = std::move(next);
    }
    return h;
}

}  // namespace

TEST_CASE("seeded weights") {
    auto a = GnnWeights::seeded(1), b = GnnWeights::seeded(1), c = GnnWeights::seeded(2);
    CHECK(a == b);
    CHECK_FALSE(a == c);
    CHECK_NOTHROW(a.check());
    CHECK(a.W_input.rows == 64);
    CHECK(a.W_input.cols == 384);
    CHECK(a.layers.size() == 3);
    CHECK(a.layers[0].heads.size() == 4);
    CHECK(a.layers[0].output_width() == 256);
    CHECK(a.layers[2].output_width() == 64);
    CHECK(a.W_edge.cols == 128);
    double limit = std::sqrt(6.0 / (384 + 64));
    for (double x : a.W_input.data) CHECK(std::abs(x) <= limit);
    for (double x : a.W_input.data) CHECK(static_cast<double>(static_cast<float>(x)) == x);
}

TEST_CASE("node_init") {
    auto w = GnnWeights::seeded(3);
    TaskGraph g;
    g.nodes.push_back({"a", "a", {}});
    for (std::size_t i = 0; i < embedding::kDim; ++i) g.nodes[0].embedding[i] = 1.0 / std::sqrt(384.0) * (i % 2);
    embedding::normalize(g.nodes[0].embedding);

    SUBCASE("identity projection") {
        w.W_input = Matrix(kHidden, embedding::kDim);
        for (std::size_t i = 0; i < kHidden; ++i) w.W_input.at(i, i) = 1.0;
        std::fill(w.b_input.begin(), w.b_input.end(), 0.0);
        auto h = node_init(g, w);
        for (std::size_t i = 0; i < kHidden; ++i) CHECK(h[0][i] == g.nodes[0].embedding[i]);
    }
    SUBCASE("large negative bias clamps to zero") {
        std::fill(w.b_input.begin(), w.b_input.end(), -1e6);
        auto h = node_init(g, w);
        for (double x : h[0]) CHECK(x == 0.0);
    }
    SUBCASE("matches a hand computation on a two-node graph") {
        embedding::HashEmbedder e;
        TaskGraph two;
        two.add_node("x", "pick up ball", e);
        two.add_node("y", "drop ball", e);
        two.add_edge(0, 1);
        auto h = node_init(two, w);
        for (std::size_t n = 0; n < 2; ++n)
            for (std::size_t r = 0; r < kHidden; ++r) {
                double s = w.b_input[r];
                for (std::size_t c = 0; c < embedding::kDim; ++c) s += w.W_input.at(r, c) * two.nodes[n].embedding[c];
                CHECK(std::abs(h[n][r] - std::max(0.0, s)) < 1e-6);
                CHECK(h[n][r] >= 0.0);
            }
    }
    SUBCASE("shape mismatch") {
        w.W_input = Matrix(kHidden, 100);
        CHECK_THROWS_AS(node_init(g, w), ShapeMismatch);
    }
}

TEST_CASE("attention rows are distributions and isolated nodes attend to themselves") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937 rng(static_cast<std::uint32_t>(seed));
        auto w = GnnWeights::seeded(seed);
        auto g = random_graph(rng, 2 + rng() % 6, 0.4);
        std::vector<LayerAttention> att;
        auto h0 = node_init(g, w);
        auto out = gat_forward(g, h0, w, &att);
        REQUIRE(att.size() == kLayers);
        for (const auto& layer : att)
            for (const auto& head : layer)
                for (const auto& row : head) {
                    double s = 0;
                    for (auto [j, a] : row) {
                        CHECK(a >= 0.0);
                        s += a;
                    }
                    CHECK(std::abs(s - 1.0) < 1e-6);
                }
    }

    auto w = GnnWeights::seeded(9);
    embedding::HashEmbedder e;
    TaskGraph g;
    g.add_node("lonely", "isolated goal", e);
    g.add_node("p", "other", e);
    g.add_node("q", "another", e);
    g.add_edge(1, 2);
    auto h0 = node_init(g, w);
    std::vector<std::vector<std::size_t>> in(3);
    in[2] = {1};
    LayerAttention att;
    auto h1 = gat_layer(h0, in, w.layers[0], &att);
    for (std::size_t k = 0; k < kHeads; ++k) {
        REQUIRE(att[k][0].size() == 1);
        CHECK(att[k][0][0].first == 0);
        CHECK(att[k][0][0].second == 1.0);
        auto z = w.layers[0].heads[k].W.apply(h0[0]);
        for (std::size_t c = 0; c < kHidden; ++c) CHECK(h1[0][k * kHidden + c] == elu(z[c]));
    }
}

TEST_CASE("forward pass matches a straight-line recomputation") {
    std::mt19937 rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        auto w = GnnWeights::seeded(100 + trial);
        auto g = random_graph(rng, 5, 0.5);
        auto got = gat_forward(g, node_init(g, w), w);
        auto want = scratch_forward(g, w);
        for (std::size_t i = 0; i < got.size(); ++i)
            for (std::size_t c = 0; c < got[i].size(); ++c) CHECK(std::abs(got[i][c] - want[i][c]) < 1e-9);
    }
}

TEST_CASE("relabeling and storage order do not change results") {
    std::mt19937 rng(77);
    for (int trial = 0; trial < 30; ++trial) {
        auto w = GnnWeights::seeded(static_cast<std::uint64_t>(trial));
        auto g = random_graph(rng, 3 + rng() % 6, 0.45);
        auto out = gat_forward(g, node_init(g, w), w);

        std::vector<std::size_t> perm(g.nodes.size());
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        TaskGraph p;
        p.nodes.resize(g.nodes.size());
        for (std::size_t i = 0; i < g.nodes.size(); ++i) p.nodes[perm[i]] = g.nodes[i];
        for (auto [s, d] : g.edges) p.edges.emplace_back(perm[s], perm[d]);
        std::shuffle(p.edges.begin(), p.edges.end(), rng);
        auto pout = gat_forward(p, node_init(p, w), w);
        for (std::size_t i = 0; i < g.nodes.size(); ++i) CHECK(pout[perm[i]] == out[i]);
    }
}

TEST_CASE("edge classification") {
    SUBCASE("equal logits") {
        std::vector<double> logits(5, 0.7);
        auto p = predict_from_logits(logits);
        CHECK(p.relation == Relation::ENABLES);
        CHECK(p.confidence == doctest::Approx(0.2).epsilon(1e-12));
        for (double d : p.distribution) CHECK(d == doctest::Approx(0.2).epsilon(1e-12));
    }
    SUBCASE("dominant logit") {
        auto p = predict_from_logits(std::vector<double>{0, 0, 0, 800, 0});
        CHECK(p.relation == Relation::PREVENTS);
        CHECK(p.confidence == doctest::Approx(1.0).epsilon(1e-12));
        auto q = predict_from_logits(std::vector<double>{0, 0, 0, 0, std::numeric_limits<double>::infinity()});
        CHECK(q.relation == Relation::MODIFIES);
        CHECK(q.confidence == 1.0);
    }
    SUBCASE("tie between later classes resolves to the earlier one") {
        auto p = predict_from_logits(std::vector<double>{0, 1, 3, 3, 1});
        CHECK(p.relation == Relation::PRODUCES);
    }
    SUBCASE("seeded pair against a scratch softmax") {
        auto w = GnnWeights::seeded(11);
        std::mt19937 rng(3);
        auto g = random_graph(rng, 4, 0.5);
        auto h = gat_forward(g, node_init(g, w), w);
        auto p = classify_edge(h[0], h[1], w);
        std::vector<double> logits(5);
        for (std::size_t r = 0; r < 5; ++r) {
            double s = w.b_edge[r];
            for (std::size_t c = 0; c < 64; ++c) s += w.W_edge.at(r, c) * h[0][c] + w.W_edge.at(r, 64 + c) * h[1][c];
            logits[r] = s;
        }
        double z = 0;
        for (double l : logits) z += std::exp(l);
        double total = 0;
        for (std::size_t r = 0; r < 5; ++r) {
            CHECK(std::abs(p.distribution[r] - std::exp(logits[r]) / z) < 1e-6);
            total += p.distribution[r];
        }
        CHECK(std::abs(total - 1.0) < 1e-6);
        CHECK(p.confidence == *std::max_element(p.distribution.begin(), p.distribution.end()));
    }
    SUBCASE("argmax is stable under shifts") {
        std::mt19937 rng(8);
        std::uniform_real_distribution<double> u(-5, 5);
        for (int i = 0; i < 200; ++i) {
            std::vector<double> l(5);
            for (double& x : l) x = u(rng);
            auto base = predict_from_logits(l);
            double shift = std::abs(u(rng)) * 10;
            for (double& x : l) x += shift;
            CHECK(predict_from_logits(l).relation == base.relation);
        }
    }
}

TEST_CASE("weight file") {
    fs::path dir = fs::temp_directory_path() / ("loop-test-gnn-" + std::to_string(::getpid()));
    fs::create_directories(dir);
    auto w = GnnWeights::seeded(42);
    w.save(dir / "w.bin");
    CHECK(GnnWeights::load(dir / "w.bin") == w);

    {
        std::ifstream in(dir / "w.bin", std::ios::binary);
        char head[12];
        in.read(head, 12);
        CHECK(std::string(head, 4) == "LGNN");
        CHECK(head[4] == 1);
    }
    auto corrupt = [&](std::size_t offset, char value) {
        std::fstream f(dir / "w.bin", std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(static_cast<std::streamoff>(offset));
        f.put(value);
    };
    corrupt(0, 'X');
    CHECK_THROWS_AS(GnnWeights::load(dir / "w.bin"), WeightFileError);
    w.save(dir / "w.bin");
    corrupt(4, 9);
    CHECK_THROWS_AS(GnnWeights::load(dir / "w.bin"), WeightFileError);
    w.save(dir / "w.bin");
    corrupt(12, 63);  // first tensor rows
    CHECK_THROWS_AS(GnnWeights::load(dir / "w.bin"), ShapeMismatch);
    w.save(dir / "w.bin");
    fs::resize_file(dir / "w.bin", fs::file_size(dir / "w.bin") - 3);
    CHECK_THROWS_AS(GnnWeights::load(dir / "w.bin"), WeightFileError);
    CHECK_THROWS_AS(GnnWeights::load(dir / "missing.bin"), WeightFileError);

    auto bad = w;
    bad.b_edge.pop_back();
    CHECK_THROWS_AS(bad.check(), ShapeMismatch);
    fs::remove_all(dir);
}

TEST_CASE("task graph checks") {
    embedding::HashEmbedder e;
    TaskGraph g;
    g.add_node("a", "x", e);
    CHECK_THROWS_AS(g.add_edge(0, 3), std::invalid_argument);
    g.nodes.push_back(g.nodes[0]);
    CHECK_THROWS_AS(g.check(), std::invalid_argument);
    CHECK(to_string(Relation::PREVENTS) == std::string("PREVENTS"));
    CHECK(parse_relation("modifies") == Relation::MODIFIES);
    CHECK_THROWS(parse_relation("causes"));
}
