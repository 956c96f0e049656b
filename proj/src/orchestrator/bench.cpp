#include "loop/orchestrator/bench.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <thread>

namespace loop::orchestrator {

using nlohmann::json;
namespace fs = std::filesystem;

Manifest Manifest::from_json(const json& j, const fs::path& base) {
    Manifest m;
    try {
        for (const auto& e : j.at("instances")) {
            BenchEntry b;
            b.domain = base / e.at("domain").get<std::string>();
            b.problem = base / e.at("problem").get<std::string>();
            b.name = e.value("name", b.problem.stem().string());
            b.group = e.value("group", b.domain.parent_path().filename().string());
            if (e.contains("optimal") && !e["optimal"].is_null()) b.optimal = e["optimal"].get<std::size_t>();
            m.entries.push_back(std::move(b));
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("malformed manifest: ") + e.what());
    }
    return m;
}

Manifest Manifest::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open manifest " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::invalid_argument("manifest " + path.string() + " is not valid JSON: " + e.what());
    }
    return from_json(j, path.parent_path());
}

json BenchRow::to_json() const {
    json j = {{"name", entry.name},
              {"group", entry.group},
              {"status", status},
              {"plan_length", plan_length},
              {"route", route},
              {"message", message},
              {"wall_seconds", wall_seconds}};
    j["reference"] = entry.optimal ? json(*entry.optimal) : json(nullptr);
    j["optimal"] = optimal ? json(*optimal) : json(nullptr);
    return j;
}

double GroupSummary::success_rate() const {
    return instances ? 100.0 * static_cast<double>(solved) / static_cast<double>(instances) : 0.0;
}

double GroupSummary::optimality_rate() const {
    return with_reference ? 100.0 * static_cast<double>(optimal) / static_cast<double>(with_reference) : 0.0;
}

json GroupSummary::to_json() const {
    return {{"group", group},
            {"instances", instances},
            {"solved", solved},
            {"success_pct", success_rate()},
            {"with_reference", with_reference},
            {"optimal", optimal},
            {"optimality_pct", optimality_rate()},
            {"mean_wall_seconds", mean_wall}};
}

json BenchReport::to_json() const {
    json r = json::array(), g = json::array();
    for (const auto& row : rows) r.push_back(row.to_json());
    for (const auto& s : groups) g.push_back(s.to_json());
    return {{"rows", r}, {"groups", g}, {"overall", overall.to_json()}};
}

std::string BenchReport::table() const {
    std::ostringstream os;
    os << std::left << std::setw(28) << "instance" << std::setw(10) << "status" << std::right << std::setw(6) << "len"
       << std::setw(6) << "ref" << std::setw(10) << "wall(s)" << '\n';
    for (const auto& r : rows) {
        os << std::left << std::setw(28) << r.entry.name << std::setw(10) << r.status << std::right << std::setw(6)
           << r.plan_length << std::setw(6) << (r.entry.optimal ? std::to_string(*r.entry.optimal) : "-")
           << std::setw(10) << std::fixed << std::setprecision(3) << r.wall_seconds << '\n';
    }
    os << '\n'
       << std::left << std::setw(16) << "group" << std::right << std::setw(6) << "n" << std::setw(11) << "success%"
       << std::setw(11) << "optimal%" << std::setw(10) << "wall(s)" << '\n';
    auto line = [&](const GroupSummary& s) {
        os << std::left << std::setw(16) << s.group << std::right << std::setw(6) << s.instances << std::setw(11)
           << std::fixed << std::setprecision(1) << s.success_rate() << std::setw(11) << s.optimality_rate()
           << std::setw(10) << std::setprecision(3) << s.mean_wall << '\n';
    };
    for (const auto& s : groups) line(s);
    line(overall);
    return os.str();
}

BenchReport bench(const Manifest& manifest, const Orchestrator& base, const std::optional<fs::path>& run_dir,
                  std::size_t workers) {
    BenchReport report;
    report.rows.resize(manifest.entries.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < manifest.entries.size(); i = next++) {
            const auto& e = manifest.entries[i];
            BenchRow& row = report.rows[i];
            row.entry = e;
            std::string missing;
            for (const auto* p : {&e.domain, &e.problem})
                if (!fs::exists(*p)) missing += (missing.empty() ? "" : ", ") + p->string();
            if (!missing.empty()) {
                row.status = "missing";
                row.message = "missing " + missing;
                continue;
            }
            Orchestrator o = base;
            TaskRequest req;
            req.domain_file = e.domain;
            req.problem_file = e.problem;
            std::optional<fs::path> dir;
            if (run_dir) dir = *run_dir / (std::to_string(i + 1) + "-" + e.name);
            auto t0 = std::chrono::steady_clock::now();
            auto rec = o.run(req, dir);
            row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            row.status = to_string(rec.status);
            row.plan_length = rec.plan.size();
            row.route = rec.route ? confidence::to_string(*rec.route) : "";
            row.message = rec.message;
            if (e.optimal) row.optimal = rec.success() && rec.plan.size() == *e.optimal;
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::max<std::size_t>(1, workers); ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();

    std::map<std::string, GroupSummary> groups;
    report.overall.group = "overall";
    for (const auto& r : report.rows) {
        for (auto* s : {&groups[r.entry.group], &report.overall}) {
            s->group = s == &report.overall ? "overall" : r.entry.group;
            ++s->instances;
            s->solved += r.status == "success";
            s->with_reference += r.entry.optimal.has_value();
            s->optimal += r.optimal.value_or(false);
            s->mean_wall += r.wall_seconds;
        }
    }
    for (auto& [name, s] : groups) {
        s.mean_wall /= static_cast<double>(s.instances);
        report.groups.push_back(s);
    }
    if (report.overall.instances) report.overall.mean_wall /= static_cast<double>(report.overall.instances);
    return report;
}

}  // namespace loop::orchestrator
