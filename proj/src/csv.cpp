#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "reprog/data.hpp"
#include "reprog/error.hpp"

namespace reprog {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string to_csv(const GaitStream& stream) {
    std::string out = "time,phase,target";
    for (const auto& name : stream.channel_names) out += "," + name;
    out += "\n";
    const std::size_t len = stream.length(), channels = stream.channel_count();
    for (std::size_t t = 0; t < len; ++t) {
        out += std::to_string(t);
        out += "," + format_double(stream.phase[t]);
        out += "," + format_double(stream.target[t]);
        for (std::size_t c = 0; c < channels; ++c) out += "," + format_double(stream.channels[c * len + t]);
        out += "\n";
    }
    return out;
}

void write_csv(const GaitStream& stream, const std::filesystem::path& path) {
    std::ofstream file(path, std::ios::binary);
    if (!file) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
    file << to_csv(stream);
    if (!file) fail(ErrorKind::io, "failed writing " + path.string());
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

}  // namespace

GaitStream parse_csv(const std::string& text, const std::string& source) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 1;
    auto where = [&] { return source + " line " + std::to_string(line_no); };

    if (!std::getline(in, line)) fail(ErrorKind::format, source + ": empty file, expected a header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split(line);
    const char* required[] = {"time", "phase", "target"};
    for (std::size_t i = 0; i < 3; ++i)
        if (header.size() <= i || header[i] != required[i])
            fail(ErrorKind::format, where() + ": header column " + std::to_string(i + 1) + " must be \"" +
                                        required[i] + "\"");
    if (header.size() < 4) fail(ErrorKind::format, where() + ": header declares no sensor channels");

    GaitStream stream;
    stream.channel_names.assign(header.begin() + 3, header.end());
    const std::size_t channels = stream.channel_names.size();
    std::vector<std::vector<double>> rows(channels);
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != header.size())
            fail(ErrorKind::format, where() + ": expected " + std::to_string(header.size()) + " cells, found " +
                                        std::to_string(cells.size()));
        std::vector<double> values(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const std::string& cell = cells[i];
            if (cell.empty()) fail(ErrorKind::format, where() + ": missing value in column \"" + header[i] + "\"");
            char* end = nullptr;
            values[i] = std::strtod(cell.c_str(), &end);
            if (end != cell.c_str() + cell.size())
                fail(ErrorKind::format, where() + ": column \"" + header[i] + "\" is not a number: " + cell);
            if (!std::isfinite(values[i]))
                fail(ErrorKind::data, where() + ": non-finite value in column \"" + header[i] + "\"");
        }
        if (values[1] < 0.0 || values[1] >= 1.0)
            fail(ErrorKind::data, where() + ": phase must lie in [0, 1)");
        stream.phase.push_back(values[1]);
        stream.target.push_back(values[2]);
        for (std::size_t c = 0; c < channels; ++c) rows[c].push_back(values[3 + c]);
    }
    if (stream.phase.empty()) fail(ErrorKind::format, source + ": no data rows");
    std::vector<double> flat;
    for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
    stream.channels = Tensor({channels, stream.phase.size()}, std::move(flat));
    return stream;
}

GaitStream load_csv(const std::filesystem::path& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) fail(ErrorKind::io, "cannot read " + path.string());
    std::ostringstream buf;
    buf << file.rdbuf();
    return parse_csv(buf.str(), path.string());
}

}  // namespace reprog
