#include "loop/state/state.hpp"

#include <algorithm>

#include "loop/util/hash.hpp"

namespace loop {

State::State(std::vector<AtomId> atoms) : atoms_(std::move(atoms)) {
    std::sort(atoms_.begin(), atoms_.end());
    atoms_.erase(std::unique(atoms_.begin(), atoms_.end()), atoms_.end());
}

bool State::contains(AtomId atom) const { return std::binary_search(atoms_.begin(), atoms_.end(), atom); }

std::size_t State::hash() const {
    std::size_t seed = atoms_.size();
    for (AtomId a : atoms_) hash_combine(seed, a);
    return seed;
}

}  // namespace loop
