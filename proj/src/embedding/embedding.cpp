#include "loop/embedding/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <mutex>
#include <sstream>

#include "loop/util/hash.hpp"
#include "loop/util/subprocess.hpp"

namespace loop::embedding {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

}  // namespace

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw DimensionMismatch("cosine of vectors with " + std::to_string(a.size()) + " and " +
                                std::to_string(b.size()) + " components");
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
    return std::clamp(dot, -1.0, 1.0);
}

bool normalize(std::span<double> v) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    if (sq == 0.0) return false;
    double inv = 1.0 / std::sqrt(sq);
    for (double& x : v) x *= inv;
    return true;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::pair<std::size_t, double> HashEmbedder::slot(std::string_view feature) const {
    std::uint64_t h = fnv1a64(feature, seed_);
    return {static_cast<std::size_t>(h % kDim), (h >> 63) ? -1.0 : 1.0};
}

std::vector<std::pair<std::size_t, double>> HashEmbedder::features(std::string_view text) const {
    auto tokens = tokenize(text);
    std::vector<std::pair<std::size_t, double>> out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        out.push_back(slot("u:" + tokens[i]));
        if (i + 1 < tokens.size()) out.push_back(slot("b:" + tokens[i] + " " + tokens[i + 1]));
    }
    return out;
}

Vector HashEmbedder::embed(std::string_view text) const {
    std::string_view body = trim(text);
    if (body.empty()) throw EmptyText();
    Vector v{};
    for (auto [bucket, sign] : features(body)) v[bucket] += sign;
    if (!normalize(v)) {
        v.fill(0.0);
        auto [bucket, sign] = slot("t:" + std::string(body));
        v[bucket] = sign;
    }
    return v;
}

Vector ProcessEmbedder::embed(std::string_view text) const {
    std::string body(trim(text));
    if (body.empty()) throw EmptyText();
    std::replace(body.begin(), body.end(), '\n', ' ');
    auto r = util::run_shell(command_, body + "\n", timeout_);
    if (r.timed_out) throw EmbedderError("embedder timed out");
    if (r.exit_code != 0) throw EmbedderError("embedder exited with code " + std::to_string(r.exit_code));
    std::istringstream in(r.out);
    std::vector<double> values;
    double x;
    while (in >> x) values.push_back(x);
    if (!in.eof()) throw EmbedderError("embedder output is not numeric");
    if (values.size() != kDim)
        throw DimensionMismatch("embedder returned " + std::to_string(values.size()) + " components, expected " +
                                std::to_string(kDim));
    Vector v{};
    for (std::size_t i = 0; i < kDim; ++i) {
        if (!std::isfinite(values[i])) throw EmbedderError("embedder returned a non-finite component");
        v[i] = values[i];
    }
    if (!normalize(v)) throw EmbedderError("embedder returned a zero vector");
    return v;
}

Vector CachingEmbedder::embed(std::string_view text) const {
    const std::uint64_t key = fnv1a64(text);
    {
        std::shared_lock lock(mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end() && it->second.first == text) return it->second.second;
    }
    Vector v = inner_->embed(text);
    std::unique_lock lock(mutex_);
    cache_.insert_or_assign(key, std::make_pair(std::string(text), v));
    return v;
}

std::size_t CachingEmbedder::size() const {
    std::shared_lock lock(mutex_);
    return cache_.size();
}

std::string linearize_problem(const pddl::ProblemModel& problem) {
    std::vector<std::string> objects;
    for (const auto& o : problem.objects) objects.push_back(o.name + " " + o.type);
    std::sort(objects.begin(), objects.end());
    std::vector<std::string> goals;
    for (const auto& g : problem.goal) goals.push_back(pddl::to_string(g));
    std::sort(goals.begin(), goals.end());
    std::string out = problem.name;
    for (const auto& o : objects) out += " " + o;
    for (const auto& g : goals) out += " " + g;
    return out;
}

}  // namespace loop::embedding
