#include "loop/memory/experience.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

namespace loop::memory {

using nlohmann::json;

const char* to_string(ExperienceOutcome o) { return o == ExperienceOutcome::success ? "success" : "failure"; }

namespace {

ExperienceOutcome parse_outcome(const std::string& s) {
    if (s == "success") return ExperienceOutcome::success;
    if (s == "failure") return ExperienceOutcome::failure;
    throw std::invalid_argument("unknown experience outcome '" + s + "'");
}

}  // namespace

void Experience::check() const {
    if (outcome == ExperienceOutcome::success && plan.empty())
        throw std::invalid_argument("successful experience without a plan");
    if (plan_length != plan.size()) throw std::invalid_argument("plan length does not match the plan");
    if (domain.empty()) throw std::invalid_argument("experience without a domain");
    double sq = 0.0;
    for (double x : embedding) {
        if (!std::isfinite(x)) throw std::invalid_argument("non-finite embedding component");
        sq += x * x;
    }
    if (std::abs(std::sqrt(sq) - 1.0) > 1e-6) throw std::invalid_argument("experience embedding is not unit-norm");
    if (!(wall_time >= 0.0)) throw std::invalid_argument("negative wall time");
}

json Experience::to_json() const {
    return json{{"embedding", std::vector<double>(embedding.begin(), embedding.end())},
                {"domain", domain},
                {"problem_digest", problem_digest},
                {"plan", plan},
                {"outcome", to_string(outcome)},
                {"plan_length", plan_length},
                {"wall_time", wall_time},
                {"timestamp", timestamp}};
}

Experience Experience::from_json(const json& j) {
    Experience e;
    auto v = j.at("embedding").get<std::vector<double>>();
    if (v.size() != embedding::kDim)
        throw std::invalid_argument("experience embedding has " + std::to_string(v.size()) + " components");
    std::copy(v.begin(), v.end(), e.embedding.begin());
    e.domain = j.at("domain").get<std::string>();
    e.problem_digest = j.at("problem_digest").get<std::string>();
    e.plan = j.at("plan").get<std::vector<std::string>>();
    e.outcome = parse_outcome(j.at("outcome").get<std::string>());
    e.plan_length = j.at("plan_length").get<std::size_t>();
    e.wall_time = j.at("wall_time").get<double>();
    e.timestamp = j.at("timestamp").get<std::int64_t>();
    e.check();
    return e;
}

MemoryStore::MemoryStore(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("memory capacity must be positive");
}

MemoryStore::MemoryStore(const MemoryStore& other) : capacity_(other.capacity_) {
    std::shared_lock lock(other.mutex_);
    next_sequence_ = other.next_sequence_;
    ring_ = other.ring_;
}

MemoryStore& MemoryStore::operator=(const MemoryStore& other) {
    if (this == &other) return *this;
    std::deque<StoredExperience> ring;
    std::uint64_t next;
    std::size_t cap;
    {
        std::shared_lock lock(other.mutex_);
        ring = other.ring_;
        next = other.next_sequence_;
        cap = other.capacity_;
    }
    std::unique_lock lock(mutex_);
    ring_ = std::move(ring);
    next_sequence_ = next;
    capacity_ = cap;
    return *this;
}

std::uint64_t MemoryStore::insert(Experience e) {
    e.check();
    std::unique_lock lock(mutex_);
    const std::uint64_t seq = next_sequence_++;
    if (log_) {
        *log_ << json{{"sequence", seq}, {"experience", e.to_json()}}.dump() << '\n';
        log_->flush();
    }
    if (ring_.size() == capacity_) ring_.pop_front();
    ring_.push_back({seq, std::move(e)});
    return seq;
}

std::vector<Match> MemoryStore::retrieve_similar(std::span<const double> query, std::size_t k) const {
    std::shared_lock lock(mutex_);
    std::vector<Match> all;
    for (const auto& s : ring_) {
        if (s.experience.outcome != ExperienceOutcome::success) continue;
        all.push_back({s, embedding::cosine(query, s.experience.embedding)});
    }
    auto better = [](const Match& a, const Match& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.entry.sequence > b.entry.sequence;
    };
    std::size_t n = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(), better);
    all.resize(n);
    return all;
}

SuccessRate MemoryStore::domain_success_rate(const std::string& domain) const {
    std::shared_lock lock(mutex_);
    SuccessRate r;
    std::size_t wins = 0;
    for (const auto& s : ring_) {
        if (s.experience.domain != domain) continue;
        ++r.count;
        if (s.experience.outcome == ExperienceOutcome::success) ++wins;
    }
    r.rate = r.count ? static_cast<double>(wins) / static_cast<double>(r.count) : 0.0;
    return r;
}

std::size_t MemoryStore::size() const {
    std::shared_lock lock(mutex_);
    return ring_.size();
}

std::uint64_t MemoryStore::inserted() const {
    std::shared_lock lock(mutex_);
    return next_sequence_ - 1;
}

std::vector<StoredExperience> MemoryStore::entries() const {
    std::shared_lock lock(mutex_);
    return {ring_.begin(), ring_.end()};
}

void MemoryStore::attach_log(const std::filesystem::path& path) {
    auto out = std::make_unique<std::ofstream>(path, std::ios::app);
    if (!*out) throw std::runtime_error("cannot open memory log " + path.string());
    std::unique_lock lock(mutex_);
    log_ = std::move(out);
}

MemoryStore MemoryStore::replay_log(const std::filesystem::path& path, std::size_t capacity) {
    MemoryStore store(capacity);
    std::ifstream in(path);
    if (!in) return store;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            auto j = json::parse(line);
            store.insert(Experience::from_json(j.at("experience")));
            store.next_sequence_ = std::max(store.next_sequence_, j.at("sequence").get<std::uint64_t>() + 1);
            store.ring_.back().sequence = store.next_sequence_ - 1;
        } catch (const std::exception& e) {
            throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return store;
}

json MemoryStore::export_json() const {
    std::shared_lock lock(mutex_);
    json entries = json::array();
    for (const auto& s : ring_) entries.push_back({{"sequence", s.sequence}, {"experience", s.experience.to_json()}});
    return json{{"kind", "experience-memory"},
                {"version", 1},
                {"capacity", capacity_},
                {"next_sequence", next_sequence_},
                {"entries", std::move(entries)}};
}

MemoryStore MemoryStore::import_json(const json& j) {
    try {
        if (j.at("kind").get<std::string>() != "experience-memory")
            throw std::invalid_argument("not an experience-memory document");
        MemoryStore store(j.at("capacity").get<std::size_t>());
        const auto& entries = j.at("entries");
        if (entries.size() > store.capacity_) throw std::invalid_argument("more entries than capacity");
        std::uint64_t last = 0;
        for (const auto& e : entries) {
            auto seq = e.at("sequence").get<std::uint64_t>();
            if (seq <= last) throw std::invalid_argument("entries are not in insertion order");
            last = seq;
            store.ring_.push_back({seq, Experience::from_json(e.at("experience"))});
        }
        store.next_sequence_ = std::max(j.at("next_sequence").get<std::uint64_t>(), last + 1);
        return store;
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("malformed memory document: ") + e.what());
    }
}

void MemoryStore::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << export_json().dump(1) << '\n';
}

MemoryStore MemoryStore::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
    return import_json(j);
}

}  // namespace loop::memory
