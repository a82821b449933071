#include "reprog/artifact.hpp"

#include <fstream>
#include <sstream>

#include "reprog/checksum.hpp"
#include "reprog/error.hpp"

namespace reprog {

using nlohmann::json;

std::string render(const Artifact& artifact) {
    std::string body = artifact.magic + " 1\nmeta " + artifact.meta.dump() + "\n";
    for (const auto& line : artifact.lines) body += line + "\n";
    return body + "checksum " + sha256_hex(body) + "\n";
}

Artifact parse_artifact(const std::string& text, const std::string& magic, const std::string& source) {
    const std::string header = magic + " 1\n";
    if (text.compare(0, header.size(), header) != 0)
        fail(ErrorKind::format, source + ": not a " + magic + " version 1 file");
    const auto pos = text.rfind("checksum ");
    if (pos == std::string::npos || (pos > 0 && text[pos - 1] != '\n'))
        fail(ErrorKind::format, source + ": missing checksum line");
    std::string stored = text.substr(pos + 9);
    if (!stored.empty() && stored.back() == '\n') stored.pop_back();
    const std::string body = text.substr(0, pos);
    if (sha256_hex(body) != stored) fail(ErrorKind::format, source + ": content checksum mismatch (file corrupted)");

    Artifact a;
    a.magic = magic;
    std::istringstream in(body.substr(header.size()));
    std::string line;
    if (!std::getline(in, line) || line.rfind("meta ", 0) != 0) fail(ErrorKind::format, source + ": missing meta line");
    try {
        a.meta = json::parse(line.substr(5));
    } catch (const json::parse_error&) {
        fail(ErrorKind::format, source + ": meta line is not valid JSON");
    }
    while (std::getline(in, line)) a.lines.push_back(line);
    return a;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::io, "cannot read " + path.string());
    std::ostringstream buf;
    buf << f.rdbuf();
    return buf.str();
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) fail(ErrorKind::io, "cannot create " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::io, "cannot write " + path.string());
    f << content;
    if (!f) fail(ErrorKind::io, "failed writing " + path.string());
}

namespace {

std::string join_values(std::span<const double> values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ' ';
        out += format_double(values[i]);
    }
    return out;
}

std::vector<std::string> tokens(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    std::string t;
    while (in >> t) out.push_back(t);
    return out;
}

double to_double(const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) fail(ErrorKind::format, "malformed number \"" + s + "\"");
    return v;
}

std::size_t to_index(const std::string& s) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || s.empty()) fail(ErrorKind::format, "malformed integer \"" + s + "\"");
    return static_cast<std::size_t>(v);
}

void append_array(std::vector<std::string>& lines, const std::string& name, const Tensor& t) {
    std::string head = "array " + name;
    for (auto d : t.shape()) head += " " + std::to_string(d);
    lines.push_back(head);
    lines.push_back(join_values(t.values()));
}

std::map<std::string, Tensor> read_arrays(const Artifact& a) {
    std::map<std::string, Tensor> out;
    for (std::size_t i = 0; i < a.lines.size(); i += 2) {
        const auto head = tokens(a.lines[i]);
        if (head.size() < 3 || head[0] != "array" || i + 1 >= a.lines.size())
            fail(ErrorKind::format, a.magic + ": malformed array record at body line " + std::to_string(i + 1));
        Shape shape;
        for (std::size_t k = 2; k < head.size(); ++k) shape.push_back(to_index(head[k]));
        std::vector<double> values;
        for (const auto& t : tokens(a.lines[i + 1])) values.push_back(to_double(t));
        out.emplace(head[1], Tensor(shape, std::move(values)));
    }
    return out;
}

Tensor take(std::map<std::string, Tensor>& arrays, const std::string& name) {
    auto it = arrays.find(name);
    if (it == arrays.end()) fail(ErrorKind::format, "checkpoint lacks array \"" + name + "\"");
    return it->second;
}

}  // namespace

Artifact foundation_checkpoint(const FoundationModel& model, const NormalizationStats& norm, const json& extra_meta) {
    Artifact a;
    a.magic = "reprog-checkpoint";
    json meta = extra_meta;
    meta["kind"] = "foundation";
    meta["geometry"] = {model.geometry().channels, model.geometry().steps};
    json dilations = json::array();
    for (const auto& l : model.shared()) dilations.push_back(l.dilation);
    meta["dilations"] = dilations;
    meta["tasks"] = model.tasks();
    meta["model_checksum"] = model.checksum();
    a.meta = meta;
    for (const auto& [name, t] : model.named_parameters()) append_array(a.lines, name, *t);
    append_array(a.lines, "norm.mean", Tensor({norm.mean.size()}, norm.mean));
    append_array(a.lines, "norm.std", Tensor({norm.std.size()}, norm.std));
    return a;
}

LoadedFoundation foundation_from_checkpoint(const Artifact& a) {
    if (a.meta.value("kind", "") != "foundation") fail(ErrorKind::format, "checkpoint is not a foundation model");
    try {
        auto arrays = read_arrays(a);
        const Geometry geometry{a.meta.at("geometry").at(0).get<std::size_t>(),
                                a.meta.at("geometry").at(1).get<std::size_t>()};
        std::vector<ConvLayerParams> shared;
        const auto& dilations = a.meta.at("dilations");
        for (std::size_t i = 0; i < dilations.size(); ++i) {
            const std::string p = "shared." + std::to_string(i) + ".";
            shared.push_back({take(arrays, p + "kernel"), take(arrays, p + "bias"), dilations[i].get<std::size_t>()});
        }
        std::map<TaskId, MlpParams> heads;
        for (const auto& t : a.meta.at("tasks")) {
            const TaskId task = t.get<TaskId>();
            const std::string p = "head." + std::to_string(task) + ".";
            heads.emplace(task, MlpParams{take(arrays, p + "w1"), take(arrays, p + "b1"), take(arrays, p + "w2"),
                                          take(arrays, p + "b2")});
        }
        LoadedFoundation out{FoundationModel(geometry, std::move(shared), std::move(heads)), {}, a.meta};
        out.norm.mean = take(arrays, "norm.mean").values();
        out.norm.std = take(arrays, "norm.std").values();
        out.model.freeze();
        if (out.model.checksum() != a.meta.at("model_checksum").get<std::string>())
            fail(ErrorKind::format, "foundation checkpoint parameters do not reproduce the stored model checksum");
        return out;
    } catch (const json::exception& e) {
        fail(ErrorKind::format, std::string("foundation checkpoint meta: ") + e.what());
    }
}

Artifact refurbish_checkpoint(const RefurbishModel& model, const std::string& foundation_checksum,
                              const json& extra_meta) {
    Artifact a;
    a.magic = "reprog-checkpoint";
    json meta = extra_meta;
    meta["kind"] = "refurbish";
    meta["geometry"] = {model.geometry().channels, model.geometry().steps};
    json dilations = json::array();
    for (const auto& l : model.layers()) dilations.push_back(l.dilation);
    meta["dilations"] = dilations;
    meta["foundation_checksum"] = foundation_checksum;
    meta["model_checksum"] = model.checksum();
    a.meta = meta;
    for (const auto& [name, t] : model.named_parameters()) append_array(a.lines, name, *t);
    return a;
}

RefurbishModel refurbish_from_checkpoint(const Artifact& a, std::string* foundation_checksum) {
    if (a.meta.value("kind", "") != "refurbish") fail(ErrorKind::format, "checkpoint is not a refurbish model");
    try {
        auto arrays = read_arrays(a);
        const Geometry geometry{a.meta.at("geometry").at(0).get<std::size_t>(),
                                a.meta.at("geometry").at(1).get<std::size_t>()};
        std::vector<ConvLayerParams> layers;
        const auto& dilations = a.meta.at("dilations");
        for (std::size_t i = 0; i < dilations.size(); ++i) {
            const std::string p = "layer." + std::to_string(i) + ".";
            layers.push_back({take(arrays, p + "kernel"), take(arrays, p + "bias"), dilations[i].get<std::size_t>()});
        }
        RefurbishModel model(geometry, std::move(layers),
                             {take(arrays, "output.kernel"), take(arrays, "output.bias"), 1});
        if (model.checksum() != a.meta.at("model_checksum").get<std::string>())
            fail(ErrorKind::format, "refurbish checkpoint parameters do not reproduce the stored checksum");
        if (foundation_checksum) *foundation_checksum = a.meta.at("foundation_checksum").get<std::string>();
        return model;
    } catch (const json::exception& e) {
        fail(ErrorKind::format, std::string("refurbish checkpoint meta: ") + e.what());
    }
}

Artifact index_artifact(const AbleBodiedIndex& index, const json& extra_meta) {
    Artifact a;
    a.magic = "reprog-index";
    json meta = extra_meta;
    meta["task"] = index.task;
    meta["model_checksum"] = index.model_checksum;
    meta["index_checksum"] = index.checksum();
    meta["count"] = index.size();
    if (!index.entries.empty()) {
        meta["geometry"] = index.entries.front().input.values.shape();
        meta["output_dim"] = index.entries.front().output.size();
    }
    a.meta = meta;
    for (const auto& e : index.entries)
        a.lines.push_back("entry " + std::to_string(e.input.time_index) + " " + join_values(e.input.values.values()) +
                          " | " + join_values(e.output.values()));
    return a;
}

AbleBodiedIndex index_from_artifact(const Artifact& a) {
    AbleBodiedIndex index;
    try {
        index.task = a.meta.at("task").get<TaskId>();
        index.model_checksum = a.meta.at("model_checksum").get<std::string>();
        Shape geometry;
        std::size_t out_dim = 0;
        if (a.meta.at("count").get<std::size_t>() > 0) {
            geometry = a.meta.at("geometry").get<Shape>();
            out_dim = a.meta.at("output_dim").get<std::size_t>();
        }
        for (const auto& line : a.lines) {
            const auto tok = tokens(line);
            const std::size_t n_in = shape_size(geometry);
            if (tok.size() != 2 + n_in + 1 + out_dim || tok[0] != "entry" || tok[2 + n_in] != "|")
                fail(ErrorKind::format, "malformed index entry");
            std::vector<double> in, out;
            for (std::size_t i = 0; i < n_in; ++i) in.push_back(to_double(tok[2 + i]));
            for (std::size_t i = 0; i < out_dim; ++i) out.push_back(to_double(tok[3 + n_in + i]));
            index.entries.push_back({{Tensor(geometry, std::move(in)), index.task, to_index(tok[1])},
                                     Tensor({out_dim}, std::move(out))});
        }
        if (index.checksum() != a.meta.at("index_checksum").get<std::string>())
            fail(ErrorKind::format, "index entries do not reproduce the stored index checksum");
    } catch (const json::exception& e) {
        fail(ErrorKind::format, std::string("index meta: ") + e.what());
    }
    return index;
}

Artifact templates_artifact(const CorrectionSet& set, const std::string& index_checksum,
                            const std::string& model_checksum, const json& extra_meta) {
    Artifact a;
    a.magic = "reprog-templates";
    json meta = extra_meta;
    meta["index_checksum"] = index_checksum;
    meta["model_checksum"] = model_checksum;
    meta["count"] = set.templates.size();
    meta["skipped"] = set.skipped;
    a.meta = meta;
    for (const auto& t : set.templates) {
        std::string line = "template " + std::to_string(t.sample) + " " + std::to_string(t.matched_center) + " " +
                           std::to_string(t.neighbors.size());
        for (auto id : t.neighbors) line += " " + std::to_string(id);
        line += " " + join_values(t.weights) + " | " + join_values(t.corrected.values.values());
        a.lines.push_back(line);
    }
    return a;
}

CorrectionSet templates_from_artifact(const Artifact& a, std::size_t channels, std::size_t steps, TaskId task) {
    CorrectionSet set;
    try {
        set.skipped = a.meta.at("skipped").get<std::vector<std::size_t>>();
    } catch (const json::exception& e) {
        fail(ErrorKind::format, std::string("templates meta: ") + e.what());
    }
    for (const auto& line : a.lines) {
        const auto tok = tokens(line);
        if (tok.size() < 4 || tok[0] != "template") fail(ErrorKind::format, "malformed template record");
        CorrectionTemplate t;
        t.sample = to_index(tok[1]);
        t.matched_center = to_index(tok[2]);
        const std::size_t n = to_index(tok[3]);
        const std::size_t cells = channels * steps;
        if (tok.size() != 4 + 2 * n + 1 + cells || tok[4 + 2 * n] != "|")
            fail(ErrorKind::format, "template record has the wrong number of fields");
        for (std::size_t i = 0; i < n; ++i) t.neighbors.push_back(to_index(tok[4 + i]));
        for (std::size_t i = 0; i < n; ++i) t.weights.push_back(to_double(tok[4 + n + i]));
        std::vector<double> values;
        for (std::size_t i = 0; i < cells; ++i) values.push_back(to_double(tok[5 + 2 * n + i]));
        t.corrected = {Tensor({channels, steps}, std::move(values)), task, t.sample};
        set.templates.push_back(std::move(t));
    }
    return set;
}

}  // namespace reprog
