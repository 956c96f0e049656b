#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <shared_mutex>

#include "loop/util/fair_shared_mutex.hpp"
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "loop/embedding/embedding.hpp"

namespace loop::memory {

inline constexpr std::size_t kDefaultCapacity = 1000;

enum class ExperienceOutcome { success, failure };

const char* to_string(ExperienceOutcome o);

struct Experience {
    embedding::Vector embedding{};
    std::string domain;
    std::string problem_digest;
    std::vector<std::string> plan;  // action names, e.g. "(pick robby ball1 rooma left)"
    ExperienceOutcome outcome = ExperienceOutcome::failure;
    std::size_t plan_length = 0;
    double wall_time = 0.0;
    std::int64_t timestamp = 0;  // unix milliseconds

    /// Throws std::invalid_argument: success needs a nonempty plan, the plan
    /// length must match, and the embedding must be finite and unit-norm.
    void check() const;

    nlohmann::json to_json() const;
    static Experience from_json(const nlohmann::json& j);

    bool operator==(const Experience&) const = default;
};

struct StoredExperience {
    std::uint64_t sequence = 0;  // 1-based insertion number
    Experience experience;
};

struct Match {
    StoredExperience entry;
    double similarity = 0.0;
};

struct SuccessRate {
    double rate = 0.0;
    std::size_t count = 0;
};

/// Ring buffer of the most recent experiences. Reads may run concurrently;
/// inserts take an exclusive lock.
class MemoryStore {
public:
    explicit MemoryStore(std::size_t capacity = kDefaultCapacity);
    MemoryStore(const MemoryStore& other);
    MemoryStore& operator=(const MemoryStore& other);

    /// Evicts the oldest entry when full. Returns the sequence number.
    std::uint64_t insert(Experience e);

    /// Success entries only, by cosine descending, newer first on ties.
    std::vector<Match> retrieve_similar(std::span<const double> query, std::size_t k = 3) const;

    SuccessRate domain_success_rate(const std::string& domain) const;

    std::size_t size() const;
    std::size_t capacity() const { return capacity_; }
    std::uint64_t inserted() const;
    /// Oldest first.
    std::vector<StoredExperience> entries() const;

    /// Every later insert is also appended as one JSON line.
    void attach_log(const std::filesystem::path& path);
    /// Replays an append log with ring semantics.
    static MemoryStore replay_log(const std::filesystem::path& path, std::size_t capacity = kDefaultCapacity);

    nlohmann::json export_json() const;
    /// Validates every entry and the capacity bound. Throws std::invalid_argument.
    static MemoryStore import_json(const nlohmann::json& j);
    void save(const std::filesystem::path& path) const;
    static MemoryStore load(const std::filesystem::path& path);

private:
    std::size_t capacity_;
    std::uint64_t next_sequence_ = 1;
    std::deque<StoredExperience> ring_;
    std::unique_ptr<std::ofstream> log_;
    mutable util::FairSharedMutex mutex_;
};

}  // namespace loop::memory
