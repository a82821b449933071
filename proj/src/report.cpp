#include <algorithm>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "reprog/error.hpp"
#include "reprog/eval.hpp"

namespace reprog {

std::string results_csv(const SweepReport& report) {
    std::string out = "strategy,train_ratio,amputee_id,r2,seed\n";
    for (const auto& r : report.results)
        for (std::size_t i = 0; i < r.r2.size(); ++i)
            out += std::string(to_string(r.strategy)) + "," + format_double(r.train_ratio) + "," + r.amputee_ids[i] +
                   "," + format_double(r.r2[i]) + "," + std::to_string(r.seed) + "\n";
    return out;
}

SweepReport parse_results_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line) || line != "strategy,train_ratio,amputee_id,r2,seed")
        fail(ErrorKind::format, "results line 1: expected header strategy,train_ratio,amputee_id,r2,seed");
    SweepReport report;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 5) fail(ErrorKind::format, "results line " + std::to_string(line_no) + ": expected 5 cells");
        const Strategy strategy = parse_strategy(cells[0]);
        double ratio = 0.0, value = 0.0;
        std::uint64_t seed = 0;
        try {
            std::size_t used = 0;
            ratio = std::stod(cells[1], &used);
            if (used != cells[1].size()) throw std::invalid_argument("ratio");
            value = std::stod(cells[3], &used);
            if (used != cells[3].size()) throw std::invalid_argument("r2");
            seed = std::stoull(cells[4], &used);
            if (used != cells[4].size()) throw std::invalid_argument("seed");
        } catch (const std::exception&) {
            fail(ErrorKind::format, "results line " + std::to_string(line_no) + ": malformed number");
        }
        auto it = std::find_if(report.results.begin(), report.results.end(), [&](const StrategyResult& r) {
            return r.strategy == strategy && r.train_ratio == ratio;
        });
        if (it == report.results.end()) {
            StrategyResult r;
            r.strategy = strategy;
            r.train_ratio = ratio;
            r.seed = seed;
            r.config = "{}";
            report.results.push_back(r);
            it = std::prev(report.results.end());
        }
        it->amputee_ids.push_back(cells[2]);
        it->r2.push_back(value);
    }
    for (auto& r : report.results) r.summarize();
    return report;
}

std::string summary_json(const SweepReport& report) {
    nlohmann::json j;
    j["metric"] = "R2";
    j["aggregation"] = "mean and population std over amputees";
    std::set<double> ratios;
    for (const auto& r : report.results)
        if (r.strategy != Strategy::cross) ratios.insert(r.train_ratio);
    auto cell = [](const StrategyResult* r) -> nlohmann::json {
        if (!r) return nullptr;
        return {{"mean", r->mean}, {"std", r->std}};
    };
    auto table = nlohmann::json::array();
    for (double ratio : ratios)
        table.push_back({{"train_ratio", ratio},
                         {"cross", cell(report.find(Strategy::cross, ratio))},
                         {"direct", cell(report.find(Strategy::direct, ratio))},
                         {"refurbished", cell(report.find(Strategy::refurbished, ratio))}});
    j["table"] = table;
    auto results = nlohmann::json::array();
    for (const auto& r : report.results) {
        nlohmann::json per;
        for (std::size_t i = 0; i < r.r2.size(); ++i) per[r.amputee_ids[i]] = r.r2[i];
        results.push_back({{"strategy", to_string(r.strategy)},
                           {"train_ratio", r.train_ratio},
                           {"seed", r.seed},
                           {"mean", r.mean},
                           {"std", r.std},
                           {"per_amputee", per},
                           {"config", nlohmann::json::parse(r.config.empty() ? "{}" : r.config)}});
    }
    j["results"] = results;
    nlohmann::json prov = nlohmann::json::object();
    for (const auto& [k, v] : report.provenance) prov[k] = v;
    j["provenance"] = prov;
    return j.dump(2) + "\n";
}

namespace {
std::string fixed(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}
}  // namespace

std::string chart_svg(const SweepReport& report) {
    const double width = 640, height = 400, left = 60, right = 150, top = 30, bottom = 50;
    std::set<double> ratio_set;
    double lo = 0.0, hi = 1.0;
    for (const auto& r : report.results) {
        if (r.strategy != Strategy::cross) ratio_set.insert(r.train_ratio);
        lo = std::min(lo, r.mean);
        hi = std::max(hi, r.mean);
    }
    const std::vector<double> ratios(ratio_set.begin(), ratio_set.end());
    const double x_max = ratios.empty() ? 1.0 : ratios.back();
    auto px = [&](double ratio) { return left + (width - left - right) * ratio / x_max; };
    auto py = [&](double value) { return top + (height - top - bottom) * (hi - value) / (hi - lo); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<line x1=\"" << fixed(left) << "\" y1=\"" << fixed(py(lo)) << "\" x2=\"" << fixed(px(x_max)) << "\" y2=\""
        << fixed(py(lo)) << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << fixed(left) << "\" y1=\"" << fixed(py(lo)) << "\" x2=\"" << fixed(left) << "\" y2=\""
        << fixed(py(hi)) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << fixed((left + px(x_max)) / 2) << "\" y=\"" << fixed(height - 10)
        << "\" text-anchor=\"middle\" font-size=\"12\">train ratio</text>\n";
    svg << "<text x=\"15\" y=\"" << fixed((top + py(lo)) / 2) << "\" font-size=\"12\">R2</text>\n";
    for (double r : ratios)
        svg << "<text x=\"" << fixed(px(r)) << "\" y=\"" << fixed(py(lo) + 15) << "\" text-anchor=\"middle\" font-size=\"10\">"
            << fixed(r) << "</text>\n";
    for (double v : {lo, 0.0, hi})
        svg << "<text x=\"" << fixed(left - 5) << "\" y=\"" << fixed(py(v) + 4) << "\" text-anchor=\"end\" font-size=\"10\">"
            << fixed(v) << "</text>\n";

    const char* colors[] = {"#d62728", "#1f77b4", "#2ca02c"};
    int legend = 0;
    for (Strategy s : {Strategy::cross, Strategy::direct, Strategy::refurbished}) {
        std::vector<std::pair<double, double>> points;
        if (s == Strategy::cross) {
            const StrategyResult* r = report.find(s, 0.0);
            if (!r) continue;
            const std::vector<double> xs = ratios.empty() ? std::vector<double>{0.0, 1.0} : ratios;
            for (double x : xs) points.emplace_back(x, r->mean);
        } else {
            for (const auto& r : report.results)
                if (r.strategy == s) points.emplace_back(r.train_ratio, r.mean);
            if (points.empty()) continue;
            std::sort(points.begin(), points.end());
        }
        const char* color = colors[static_cast<int>(s)];
        svg << "<polyline class=\"" << to_string(s) << "\" fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < points.size(); ++i)
            svg << (i ? " " : "") << fixed(px(points[i].first)) << "," << fixed(py(points[i].second));
        svg << "\"/>\n";
        const double ly = top + 20.0 * legend++;
        svg << "<text x=\"" << fixed(width - right + 15) << "\" y=\"" << fixed(ly + 4) << "\" font-size=\"12\" fill=\""
            << color << "\">" << to_string(s) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

void emit_report(const SweepReport& report, const std::filesystem::path& out_dir) {
    if (report.results.empty()) fail(ErrorKind::usage, "cannot emit an empty report");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) fail(ErrorKind::io, "cannot create " + out_dir.string() + ": " + ec.message());
    const std::pair<const char*, std::string> files[] = {
        {"results.csv", results_csv(report)},
        {"summary.json", summary_json(report)},
        {"r2_vs_ratio.svg", chart_svg(report)},
    };
    for (const auto& [name, content] : files) {
        std::ofstream f(out_dir / name, std::ios::binary);
        if (!f) fail(ErrorKind::io, "cannot write " + (out_dir / name).string());
        f << content;
        if (!f) fail(ErrorKind::io, "failed writing " + (out_dir / name).string());
    }
}

}  // namespace reprog
