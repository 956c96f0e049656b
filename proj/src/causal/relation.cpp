#include "loop/causal/relation.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace loop {

const char* to_string(Relation r) {
    switch (r) {
        case Relation::ENABLES: return "ENABLES";
        case Relation::REQUIRES: return "REQUIRES";
        case Relation::PRODUCES: return "PRODUCES";
        case Relation::PREVENTS: return "PREVENTS";
        case Relation::MODIFIES: return "MODIFIES";
    }
    return "?";
}

Relation parse_relation(const std::string& text) {
    std::string up = text;
    std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    for (Relation r : kAllRelations)
        if (up == to_string(r)) return r;
    throw std::invalid_argument("unknown relation '" + text + "'");
}

}  // namespace loop
