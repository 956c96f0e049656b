#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <shared_mutex>

#include "loop/util/fair_shared_mutex.hpp"
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "loop/pddl/model.hpp"

namespace loop::embedding {

inline constexpr std::size_t kDim = 384;
inline constexpr std::uint64_t kDefaultSeed = 0x5eed1e55ULL;

/// Unit-norm vector of kDim components.
using Vector = std::array<double, kDim>;

class EmptyText : public std::invalid_argument {
public:
    EmptyText() : std::invalid_argument("cannot embed empty text") {}
};

class DimensionMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class EmbedderError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dot product of two unit vectors. Throws DimensionMismatch.
double cosine(std::span<const double> a, std::span<const double> b);

/// Scales to unit L2 norm. Returns false when the input is all zeros.
bool normalize(std::span<double> v);

/// Lowercased alphanumeric runs.
std::vector<std::string> tokenize(std::string_view text);

class Embedder {
public:
    virtual ~Embedder() = default;
    /// Throws EmptyText when `text` is blank.
    virtual Vector embed(std::string_view text) const = 0;
    virtual std::string name() const = 0;
};

/// Signed feature hashing of unigrams and bigrams.
class HashEmbedder final : public Embedder {
public:
    explicit HashEmbedder(std::uint64_t seed = kDefaultSeed) : seed_(seed) {}
    Vector embed(std::string_view text) const override;
    std::string name() const override { return "hash"; }

    /// (bucket, sign) for every feature the text contributes, before normalization.
    std::vector<std::pair<std::size_t, double>> features(std::string_view text) const;

private:
    std::pair<std::size_t, double> slot(std::string_view feature) const;
    std::uint64_t seed_;
};

/// Runs a command once per text: the text plus a newline on stdin, kDim
/// whitespace-separated floats on stdout. The result is re-normalized.
class ProcessEmbedder final : public Embedder {
public:
    explicit ProcessEmbedder(std::string command, double timeout_seconds = 30.0)
        : command_(std::move(command)), timeout_(timeout_seconds) {}
    Vector embed(std::string_view text) const override;
    std::string name() const override { return "process"; }

private:
    std::string command_;
    double timeout_;
};

/// Memoizes another provider keyed by a content hash of the text.
class CachingEmbedder final : public Embedder {
public:
    explicit CachingEmbedder(std::shared_ptr<const Embedder> inner) : inner_(std::move(inner)) {}
    Vector embed(std::string_view text) const override;
    std::string name() const override { return inner_->name(); }
    std::size_t size() const;

private:
    std::shared_ptr<const Embedder> inner_;
    mutable util::FairSharedMutex mutex_;
    mutable std::unordered_map<std::uint64_t, std::pair<std::string, Vector>> cache_;
};

/// Problem name, then objects, then goal literals, each in canonical order.
std::string linearize_problem(const pddl::ProblemModel& problem);

}  // namespace loop::embedding
