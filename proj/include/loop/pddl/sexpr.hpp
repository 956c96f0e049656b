#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "loop/pddl/model.hpp"

namespace loop::pddl {

/// S-expression node. Symbols are lower-cased on read.
struct SExpr {
    bool is_list = false;
    std::string symbol;
    std::vector<SExpr> items;
    Location loc;

    bool is_symbol() const { return !is_list; }
    bool is_symbol(std::string_view s) const { return !is_list && symbol == s; }
    /// First item's symbol for lists like "(:action ...)", empty otherwise.
    std::string head() const;
};

/// Reads every top-level form in `text`. Throws PddlError(syntax) on
/// unbalanced parentheses or stray characters.
std::vector<SExpr> read_sexprs(std::string_view text);

/// Byte ranges [begin, end) of the top-level forms, for slicing raw text.
std::vector<std::pair<std::size_t, std::size_t>> top_level_spans(std::string_view text);

}  // namespace loop::pddl
