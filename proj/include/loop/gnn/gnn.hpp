#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "loop/causal/relation.hpp"
#include "loop/embedding/embedding.hpp"

namespace loop::gnn {

inline constexpr std::size_t kHidden = 64;  // per head
inline constexpr std::size_t kHeads = 4;
inline constexpr std::size_t kLayers = 3;
inline constexpr std::size_t kRelations = 5;
inline constexpr double kLeakySlope = 0.2;
inline constexpr std::uint32_t kWeightFormatVersion = 1;

class ShapeMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class WeightFileError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    /// this * x
    std::vector<double> apply(std::span<const double> x) const;
    bool operator==(const Matrix&) const = default;
};

struct HeadWeights {
    Matrix W;                   // kHidden x input width
    std::vector<double> a_src;  // scores the receiving node
    std::vector<double> a_dst;  // scores the neighbour
    bool operator==(const HeadWeights&) const = default;
};

struct LayerWeights {
    std::vector<HeadWeights> heads;
    bool concat = true;  // false: average heads
    std::size_t input_width() const { return heads.empty() ? 0 : heads.front().W.cols; }
    std::size_t output_width() const { return concat ? kHidden * heads.size() : kHidden; }
    bool operator==(const LayerWeights&) const = default;
};

struct GnnWeights {
    Matrix W_input;  // kHidden x embedding::kDim
    std::vector<double> b_input;
    std::vector<LayerWeights> layers;
    Matrix W_edge;  // kRelations x 2*final width
    std::vector<double> b_edge;

    /// Xavier-uniform weights from a portable generator, rounded to float
    /// precision so a save/load round trip is exact. Biases start at zero.
    static GnnWeights seeded(std::uint64_t seed);
    /// Throws ShapeMismatch.
    void check() const;

    /// "LGNN", u32 version, u32 tensor count, (u32 rows, u32 cols) per
    /// tensor, then every tensor as little-endian float32.
    void save(const std::filesystem::path& path) const;
    static GnnWeights load(const std::filesystem::path& path);

    bool operator==(const GnnWeights&) const = default;
};

struct TaskGraph {
    struct Node {
        std::string id;
        std::string text;
        embedding::Vector embedding{};
    };
    std::vector<Node> nodes;
    std::vector<std::pair<std::size_t, std::size_t>> edges;  // (src, dst)

    std::size_t add_node(std::string id, std::string text, const embedding::Embedder& embedder);
    void add_edge(std::size_t src, std::size_t dst);
    /// Throws std::invalid_argument on duplicate ids or dangling edges.
    void check() const;
};

using Features = std::vector<std::vector<double>>;

/// For one head: per node, (neighbour index, attention weight) pairs in
/// aggregation order. The node itself is always among its neighbours.
using HeadAttention = std::vector<std::vector<std::pair<std::size_t, double>>>;
using LayerAttention = std::vector<HeadAttention>;

Features node_init(const TaskGraph& g, const GnnWeights& w);

/// One attention layer. `in_neighbours[i]` lists sources of edges into i.
Features gat_layer(const Features& h, const std::vector<std::vector<std::size_t>>& in_neighbours,
                   const LayerWeights& layer, LayerAttention* attention = nullptr);

Features gat_forward(const TaskGraph& g, const Features& h0, const GnnWeights& w,
                     std::vector<LayerAttention>* attention = nullptr);

struct RelationPrediction {
    Relation relation = Relation::ENABLES;
    double confidence = 0.0;
    std::array<double, kRelations> distribution{};
};

/// Softmax with argmax ties broken by enum order.
RelationPrediction predict_from_logits(std::span<const double> logits);

RelationPrediction classify_edge(std::span<const double> h_u, std::span<const double> h_v, const GnnWeights& w);

double elu(double x);
double leaky_relu(double x);

}  // namespace loop::gnn
