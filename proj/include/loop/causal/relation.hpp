#pragma once

#include <array>
#include <string>

namespace loop {

enum class Relation { ENABLES, REQUIRES, PRODUCES, PREVENTS, MODIFIES };

inline constexpr std::array<Relation, 5> kAllRelations = {Relation::ENABLES, Relation::REQUIRES, Relation::PRODUCES,
                                                          Relation::PREVENTS, Relation::MODIFIES};

const char* to_string(Relation r);
/// Case-insensitive. Throws std::invalid_argument.
Relation parse_relation(const std::string& text);

}  // namespace loop
