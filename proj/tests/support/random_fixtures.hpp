#pragma once

#include <algorithm>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"

namespace fixtures {

/// Problem text with at least two goal literals, solvable by construction.
struct Generated {
    std::string domain;  // fixture domain directory
    std::string problem_text;
};

namespace detail {

inline std::vector<std::vector<std::string>> random_towers(const std::vector<std::string>& blocks, std::mt19937_64& rng) {
    auto order = blocks;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<std::string>> towers;
    for (const auto& b : order) {
        if (towers.empty() || rng() % 3 == 0) towers.push_back({b});
        else towers[rng() % towers.size()].push_back(b);
    }
    return towers;
}

}  // namespace detail

inline Generated random_blocksworld(std::mt19937_64& rng, int blocks) {
    std::vector<std::string> names;
    for (int i = 0; i < blocks; ++i) names.push_back(std::string(1, static_cast<char>('a' + i)));
    std::ostringstream p;
    p << "(define (problem bw-random) (:domain blocksworld) (:objects";
    for (const auto& n : names) p << ' ' << n;
    p << " - block) (:init (handempty)";
    for (const auto& t : detail::random_towers(names, rng)) {
        p << " (ontable " << t.front() << ") (clear " << t.back() << ")";
        for (std::size_t i = 1; i < t.size(); ++i) p << " (on " << t[i] << ' ' << t[i - 1] << ")";
    }
    p << ") (:goal (and";
    std::vector<std::string> goals;
    while (goals.size() < 2) {
        goals.clear();
        for (const auto& t : detail::random_towers(names, rng))
            for (std::size_t i = 1; i < t.size(); ++i) goals.push_back("(on " + t[i] + ' ' + t[i - 1] + ")");
    }
    for (const auto& g : goals) p << ' ' << g;
    p << ")))";
    return {"blocksworld", p.str()};
}

inline Generated random_gripper(std::mt19937_64& rng, int balls, int rooms) {
    std::ostringstream p;
    p << "(define (problem gripper-random) (:domain gripper) (:objects";
    for (int r = 0; r < rooms; ++r) p << " room" << r;
    p << " - room";
    for (int b = 0; b < balls; ++b) p << " ball" << b;
    p << " - ball robby - robot left right - gripper) (:init (at-robby robby room" << rng() % rooms
      << ") (free robby left) (free robby right)";
    std::vector<int> start(balls);
    for (int b = 0; b < balls; ++b) {
        start[b] = static_cast<int>(rng() % rooms);
        p << " (at ball" << b << " room" << start[b] << ")";
    }
    p << ") (:goal (and";
    int moved = 0;
    for (int b = 0; b < balls; ++b) {
        int target = static_cast<int>(rng() % rooms);
        if (target == start[b] && moved < 2) target = (target + 1) % rooms;
        moved += target != start[b];
        p << " (at ball" << b << " room" << target << ")";
    }
    p << ")))";
    return {"gripper", p.str()};
}

/// 25 blocksworld (4 to 6 blocks) and 25 gripper (2 to 4 balls) problems.
inline std::vector<Generated> decomposable_suite(std::uint64_t seed, std::size_t count = 50) {
    std::mt19937_64 rng(seed);
    std::vector<Generated> out;
    for (std::size_t i = 0; i < count; ++i) {
        if (i % 2 == 0) out.push_back(random_blocksworld(rng, 4 + static_cast<int>(rng() % 3)));
        else out.push_back(random_gripper(rng, 2 + static_cast<int>(rng() % 3), 2 + static_cast<int>(rng() % 2)));
    }
    return out;
}

}  // namespace fixtures
