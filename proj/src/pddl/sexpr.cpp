#include "loop/pddl/sexpr.hpp"

#include <cctype>

namespace loop::pddl {

std::string SExpr::head() const {
    if (!is_list || items.empty() || items.front().is_list) return {};
    return items.front().symbol;
}

namespace {

class Reader {
public:
    explicit Reader(std::string_view text) : text_(text) {}

    std::vector<SExpr> read_all() {
        std::vector<SExpr> forms;
        skip_blank();
        while (pos_ < text_.size()) {
            forms.push_back(read_form());
            skip_blank();
        }
        return forms;
    }

    std::vector<std::pair<std::size_t, std::size_t>> spans() {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        skip_blank();
        while (pos_ < text_.size()) {
            std::size_t begin = pos_;
            read_form();
            out.emplace_back(begin, pos_);
            skip_blank();
        }
        return out;
    }

private:
    Location here() const { return {line_, col_}; }

    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_blank() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == ';') {
                while (pos_ < text_.size() && text_[pos_] != '\n') advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }

    SExpr read_form() {
        skip_blank();
        if (pos_ >= text_.size()) throw PddlError(ErrorKind::syntax, here(), "unexpected end of input");
        char c = text_[pos_];
        if (c == ')') throw PddlError(ErrorKind::syntax, here(), "unexpected ')'");
        SExpr node;
        node.loc = here();
        if (c == '(') {
            node.is_list = true;
            advance();
            for (;;) {
                skip_blank();
                if (pos_ >= text_.size())
                    throw PddlError(ErrorKind::syntax, node.loc, "unbalanced '(' (missing ')')");
                if (text_[pos_] == ')') {
                    advance();
                    break;
                }
                node.items.push_back(read_form());
            }
            return node;
        }
        while (pos_ < text_.size()) {
            char ch = text_[pos_];
            if (std::isspace(static_cast<unsigned char>(ch)) || ch == '(' || ch == ')' || ch == ';') break;
            node.symbol.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
            advance();
        }
        return node;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

}  // namespace

std::vector<SExpr> read_sexprs(std::string_view text) { return Reader(text).read_all(); }

std::vector<std::pair<std::size_t, std::size_t>> top_level_spans(std::string_view text) {
    return Reader(text).spans();
}

}  // namespace loop::pddl
