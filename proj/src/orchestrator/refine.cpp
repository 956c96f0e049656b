#include "loop/orchestrator/refine.hpp"

#include <set>
#include <sstream>

#include "loop/pddl/parser.hpp"
#include "loop/util/hash.hpp"

namespace loop::orchestrator {

using nlohmann::json;

namespace {

std::optional<std::string> balanced_form_at(std::string_view text, std::size_t start) {
    int depth = 0;
    for (std::size_t i = start; i < text.size(); ++i) {
        char c = text[i];
        if (c == ';') {
            while (i < text.size() && text[i] != '\n') ++i;
            continue;
        }
        if (c == '(') ++depth;
        if (c == ')' && --depth == 0) return std::string(text.substr(start, i - start + 1));
    }
    return std::nullopt;
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::vector<std::string> lines_of(std::string_view text) {
    std::vector<std::string> out;
    std::string line;
    std::istringstream in{std::string(text)};
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

std::string anchored(const char* which, const pddl::PddlError& e) {
    std::ostringstream os;
    os << which << ':' << e.location().line << ':' << e.location().column << ": " << pddl::to_string(e.kind()) << ": "
       << e.message();
    return os.str();
}

}  // namespace

SplitPddl split_pddl(std::string_view text) {
    SplitPddl out;
    std::string low = lower(text);
    std::size_t pos = 0;
    while ((pos = low.find("(define", pos)) != std::string::npos) {
        auto form = balanced_form_at(text, pos);
        if (!form) break;
        std::size_t head = low.find_first_not_of(" \t\r\n", pos + 7);
        if (head != std::string::npos && low[head] == '(') {
            std::size_t word = low.find_first_not_of(" \t\r\n", head + 1);
            if (low.compare(word, 6, "domain") == 0 && !out.domain) out.domain = *form;
            if (low.compare(word, 7, "problem") == 0 && !out.problem) out.problem = *form;
        }
        pos += form->size();
    }
    return out;
}

std::vector<std::string> diagnose(const PddlTexts& texts) {
    pddl::DomainModel dom;
    try {
        dom = pddl::parse_domain(texts.domain);
    } catch (const pddl::PddlError& e) {
        return {anchored("domain", e)};
    }
    try {
        pddl::ParseOptions opts;
        opts.domain_mismatch_is_error = true;
        pddl::parse_problem(texts.problem, dom, opts);
    } catch (const pddl::PddlError& e) {
        return {anchored("problem", e)};
    }
    return {};
}

std::string line_diff(std::string_view before, std::string_view after) {
    auto a = lines_of(before), b = lines_of(after);
    std::vector<std::vector<std::size_t>> lcs(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
    for (std::size_t i = a.size(); i-- > 0;)
        for (std::size_t j = b.size(); j-- > 0;)
            lcs[i][j] = a[i] == b[j] ? lcs[i + 1][j + 1] + 1 : std::max(lcs[i + 1][j], lcs[i][j + 1]);
    std::ostringstream os;
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        if (i < a.size() && j < b.size() && a[i] == b[j]) {
            os << ' ' << a[i++] << '\n';
            ++j;
        } else if (j < b.size() && (i == a.size() || lcs[i][j + 1] >= lcs[i + 1][j])) {
            os << '+' << b[j++] << '\n';
        } else {
            os << '-' << a[i++] << '\n';
        }
    }
    return os.str();
}

const char* to_string(RefineStatus s) {
    switch (s) {
        case RefineStatus::clean: return "clean";
        case RefineStatus::no_progress: return "no-progress";
        case RefineStatus::exhausted: return "exhausted";
        case RefineStatus::client_failure: return "client-failure";
    }
    return "?";
}

json RefineIteration::to_json() const {
    return {{"iteration", index}, {"diagnostics", diagnostics}, {"domain_diff", domain_diff}, {"problem_diff", problem_diff}};
}

RefineResult refine_pddl(PddlTexts candidate, std::vector<std::string> feedback, generation::GenerationClient& client,
                         const RefineOptions& opts) {
    RefineResult r;
    r.texts = std::move(candidate);
    std::set<std::uint64_t> seen;
    auto digest = [](const PddlTexts& t) { return loop::fnv1a64(t.problem, loop::fnv1a64(t.domain)); };
    seen.insert(digest(r.texts));
    for (;;) {
        auto diags = diagnose(r.texts);
        if (r.iterations.empty()) diags.insert(diags.end(), feedback.begin(), feedback.end());
        if (diags.empty()) {
            r.status = RefineStatus::clean;
            return r;
        }
        if (r.iterations.size() >= opts.max_iterations) {
            r.status = RefineStatus::exhausted;
            r.error = "still failing after " + std::to_string(opts.max_iterations) + " refinements: " + diags.front();
            return r;
        }
        json request = {{"purpose", "refine_problem"},
                        {"task", opts.task_text},
                        {"temperature", opts.temperature},
                        {"iteration", r.iterations.size() + 1},
                        {"diagnostics", diags},
                        {"domain", r.texts.domain},
                        {"problem", r.texts.problem}};
        std::string reply;
        try {
            reply = client.complete(request);
        } catch (const std::exception& e) {
            r.status = RefineStatus::client_failure;
            r.error = e.what();
            return r;
        }
        auto split = split_pddl(reply);
        PddlTexts next = r.texts;
        if (split.domain) next.domain = *split.domain;
        if (split.problem) next.problem = *split.problem;
        RefineIteration it;
        it.index = r.iterations.size() + 1;
        it.diagnostics = std::move(diags);
        it.domain_diff = line_diff(r.texts.domain, next.domain);
        it.problem_diff = line_diff(r.texts.problem, next.problem);
        r.iterations.push_back(std::move(it));
        if (!seen.insert(digest(next)).second) {
            r.status = RefineStatus::no_progress;
            r.error = "revision " + std::to_string(r.iterations.size()) + " repeats an earlier text";
            return r;
        }
        r.texts = std::move(next);
    }
}

PddlTexts generate_pddl(const std::string& task_text, const std::optional<std::string>& domain,
                        generation::GenerationClient& client, double temperature) {
    json request = {{"purpose", "generate_problem"}, {"task", task_text}, {"temperature", temperature}};
    if (domain) request["domain"] = *domain;
    auto split = split_pddl(client.complete(request));
    PddlTexts out;
    if (split.domain) out.domain = *split.domain;
    else if (domain) out.domain = *domain;
    else throw generation::GenerationError("generation reply has no domain definition");
    if (!split.problem) throw generation::GenerationError("generation reply has no problem definition");
    out.problem = *split.problem;
    return out;
}

}  // namespace loop::orchestrator
