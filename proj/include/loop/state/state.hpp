#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace loop {

/// Index into a task's atom universe. Ids follow canonical atom order.
using AtomId = std::uint32_t;

/// A ground literal over the atom universe.
struct GroundLiteral {
    AtomId atom = 0;
    bool positive = true;

    bool operator==(const GroundLiteral&) const = default;
};

/// Closed-world state: the set of true atoms, stored sorted and unique.
class State {
public:
    State() = default;
    explicit State(std::vector<AtomId> atoms);

    bool contains(AtomId atom) const;
    std::span<const AtomId> atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }
    bool empty() const { return atoms_.empty(); }

    /// Hash over the sorted atom list.
    std::size_t hash() const;

    bool operator==(const State&) const = default;
    auto operator<=>(const State&) const = default;

private:
    std::vector<AtomId> atoms_;
};

struct StateHash {
    std::size_t operator()(const State& s) const { return s.hash(); }
};

}  // namespace loop
