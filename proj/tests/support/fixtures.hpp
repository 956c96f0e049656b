#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "loop/pddl/grounding.hpp"
#include "loop/pddl/parser.hpp"

#ifndef LOOP_FIXTURE_DIR
#error "LOOP_FIXTURE_DIR must point at the data/ directory"
#endif

namespace fixtures {

inline std::filesystem::path data_dir() { return LOOP_FIXTURE_DIR; }

inline std::filesystem::path domain_path(const std::string& domain) {
    return data_dir() / "domains" / domain / "domain.pddl";
}

inline std::filesystem::path problem_path(const std::string& domain, const std::string& problem) {
    return data_dir() / "domains" / domain / (problem + ".pddl");
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot open fixture " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Loaded {
    loop::pddl::DomainModel domain;
    loop::pddl::ProblemModel problem;
};

inline Loaded load(const std::string& domain, const std::string& problem) {
    Loaded l;
    l.domain = loop::pddl::parse_domain(read_file(domain_path(domain)));
    l.problem = loop::pddl::parse_problem(read_file(problem_path(domain, problem)), l.domain);
    return l;
}

inline loop::pddl::GroundTask ground(const std::string& domain, const std::string& problem) {
    auto l = load(domain, problem);
    return loop::pddl::ground(l.domain, l.problem);
}

/// The six benchmark domains with one tiny instance each.
inline const std::vector<std::pair<std::string, std::string>>& benchmark_instances() {
    static const std::vector<std::pair<std::string, std::string>> list = {
        {"blocksworld", "sussman"}, {"gripper", "p01"}, {"floortile", "p01"},
        {"storage", "p01"},         {"rovers", "p01"},  {"satellite", "p01"},
    };
    return list;
}

/// Every fixture instance shipped under data/domains.
inline const std::vector<std::pair<std::string, std::string>>& all_instances() {
    static const std::vector<std::pair<std::string, std::string>> list = {
        {"blocksworld", "sussman"}, {"blocksworld", "p01"}, {"blocksworld", "p02"}, {"gripper", "p01"},
        {"gripper", "p02"},         {"floortile", "p01"},   {"storage", "p01"},     {"rovers", "p01"},
        {"satellite", "p01"},       {"transport", "p01"},
    };
    return list;
}

}  // namespace fixtures
