#include "reprog/config.hpp"

#include <exception>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "reprog/error.hpp"

namespace reprog {

using nlohmann::json;

ExperimentConfig ExperimentConfig::defaults() {
    ExperimentConfig cfg;
    cfg.synth = SynthConfig::defaults();
    cfg.foundation.layers = {{16, 3, 1}, {16, 3, 2}, {16, 3, 4}};
    cfg.foundation.head_hidden = 32;
    cfg.foundation_train = {8, 32, 2e-3, 0};
    cfg.direct_train = {40, 16, 2e-3, 0};
    cfg.templates = {0, 5, 1.5, Weighting::linear};
    cfg.refurbish.layers = {};
    cfg.refurbish.output_kernel = 3;
    cfg.refurbish_train = {1.0, 20.0, 40, 16, 3e-3, 0};
    cfg.set_seed(cfg.seed);
    return cfg;
}

void ExperimentConfig::set_seed(std::uint64_t value) {
    seed = value;
    synth.seed = value;
}

TrainConfig ExperimentConfig::foundation_train_seeded() const {
    TrainConfig t = foundation_train;
    t.seed = seed * 31 + 1;
    return t;
}

std::vector<std::uint64_t> ExperimentConfig::sweep_seeds() const {
    return eval_seeds.empty() ? std::vector<std::uint64_t>{seed} : eval_seeds;
}

EvalSettings ExperimentConfig::eval_settings() const {
    EvalSettings s;
    s.direct_arch = foundation;
    s.direct_train = direct_train;
    s.templates = templates;
    s.refurbish_arch = refurbish;
    s.refurbish_train = refurbish_train;
    s.pooled_refurbish = pooled_refurbish;
    return s;
}

void ExperimentConfig::validate() const {
    auto need = [](bool ok, const std::string& field, const std::string& rule) {
        if (!ok) fail(ErrorKind::config, field + " " + rule);
    };
    synth.validate();
    need(window >= 1, "window", "must be >= 1");
    need(stride >= 1, "stride", "must be >= 1");
    need(foundation_stride >= 1, "foundation_stride", "must be >= 1");
    need(holdout_fraction > 0.0 && holdout_fraction < 1.0, "holdout_fraction", "must lie in (0, 1)");
    need(!foundation.layers.empty(), "foundation.layers", "must not be empty");
    for (std::size_t i = 0; i < foundation.layers.size(); ++i) {
        const auto& l = foundation.layers[i];
        need(l.out_channels >= 1 && l.kernel_size >= 1 && l.dilation >= 1,
             "foundation.layers[" + std::to_string(i) + "]", "needs positive out_channels, kernel_size, dilation");
    }
    need(foundation.head_hidden >= 1, "foundation.head_hidden", "must be >= 1");
    for (const auto& [name, t] : {std::pair{"foundation_train", &foundation_train}, {"direct_train", &direct_train}}) {
        need(t->epochs >= 1, std::string(name) + ".epochs", "must be >= 1");
        need(t->batch_size >= 1, std::string(name) + ".batch_size", "must be >= 1");
        need(t->learning_rate > 0.0, std::string(name) + ".learning_rate", "must be > 0");
    }
    templates.validate();
    for (std::size_t i = 0; i < refurbish.layers.size(); ++i) {
        const auto& l = refurbish.layers[i];
        need(l.out_channels >= 1 && l.kernel_size >= 1 && l.dilation >= 1,
             "refurbish.layers[" + std::to_string(i) + "]", "needs positive out_channels, kernel_size, dilation");
    }
    need(refurbish.output_kernel >= 1, "refurbish.output_kernel", "must be >= 1");
    refurbish_train.validate();
    need(amputee_task >= 0 && static_cast<std::size_t>(amputee_task) < synth.tasks.size(), "amputee_task",
         "must name a configured task");
    need(!ratios.empty(), "ratios", "must not be empty");
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        need(ratios[i] > 0.0 && ratios[i] < 1.0, "ratios", "entries must lie in (0, 1)");
        need(i == 0 || ratios[i] > ratios[i - 1], "ratios", "must be strictly ascending");
    }
    need(stage_ratio > 0.0 && stage_ratio < 1.0, "stage_ratio", "must lie in (0, 1)");
}

// ------------------------------------------------------------------- JSON

namespace {

json conv_json(const std::vector<ConvSpec>& layers) {
    json out = json::array();
    for (const auto& l : layers)
        out.push_back({{"out_channels", l.out_channels}, {"kernel_size", l.kernel_size}, {"dilation", l.dilation}});
    return out;
}

json train_json(const TrainConfig& t) {
    return {{"epochs", t.epochs}, {"batch_size", t.batch_size}, {"learning_rate", t.learning_rate}};
}

json series_json(const FourierSeries& s) {
    json h = json::array();
    for (const auto& x : s.harmonics) h.push_back({x.cos, x.sin});
    return {{"dc", s.dc}, {"harmonics", h}};
}

json subject_json(const SubjectMeta& s) {
    return {{"id", s.id}, {"height", s.height}, {"mass", s.mass}, {"age", s.age}};
}

// Strict object reader: every key must be consumed, every value type-checked,
// errors carry the dotted field path.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(ErrorKind::config, where() + " must be an object");
    }
    ~Reader() noexcept(false) {
        if (std::uncaught_exceptions()) return;
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) fail(ErrorKind::config, "unknown field " + field(it.key()));
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json* take(const std::string& key) {
        used_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void number(const std::string& key, double& out) {
        if (auto v = take(key)) {
            if (!v->is_number()) fail(ErrorKind::config, field(key) + " must be a number");
            out = v->get<double>();
        }
    }
    void count(const std::string& key, std::size_t& out) {
        if (auto v = take(key)) {
            if (!v->is_number_unsigned()) fail(ErrorKind::config, field(key) + " must be a nonnegative integer");
            out = v->get<std::size_t>();
        }
    }
    void seed(const std::string& key, std::uint64_t& out) {
        if (auto v = take(key)) {
            if (!v->is_number_unsigned()) fail(ErrorKind::config, field(key) + " must be a nonnegative integer");
            out = v->get<std::uint64_t>();
        }
    }
    void integer(const std::string& key, int& out) {
        if (auto v = take(key)) {
            if (!v->is_number_integer()) fail(ErrorKind::config, field(key) + " must be an integer");
            out = v->get<int>();
        }
    }
    void boolean(const std::string& key, bool& out) {
        if (auto v = take(key)) {
            if (!v->is_boolean()) fail(ErrorKind::config, field(key) + " must be true or false");
            out = v->get<bool>();
        }
    }
    void string(const std::string& key, std::string& out) {
        if (auto v = take(key)) {
            if (!v->is_string()) fail(ErrorKind::config, field(key) + " must be a string");
            out = v->get<std::string>();
        }
    }
    const json* array(const std::string& key) {
        auto v = take(key);
        if (v && !v->is_array()) fail(ErrorKind::config, field(key) + " must be an array");
        return v;
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    std::string where() const { return path_.empty() ? "config" : path_; }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

std::vector<ConvSpec> read_layers(const json& arr, const std::string& path) {
    std::vector<ConvSpec> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        Reader r(arr[i], path + "[" + std::to_string(i) + "]");
        ConvSpec s;
        r.count("out_channels", s.out_channels);
        r.count("kernel_size", s.kernel_size);
        r.count("dilation", s.dilation);
        out.push_back(s);
    }
    return out;
}

void read_train(const json& j, const std::string& path, TrainConfig& t) {
    Reader r(j, path);
    r.count("epochs", t.epochs);
    r.count("batch_size", t.batch_size);
    r.number("learning_rate", t.learning_rate);
}

FourierSeries read_series(const json& j, const std::string& path) {
    Reader r(j, path);
    FourierSeries s;
    r.number("dc", s.dc);
    if (auto h = r.array("harmonics"))
        for (std::size_t i = 0; i < h->size(); ++i) {
            const json& pair = (*h)[i];
            if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number())
                fail(ErrorKind::config, path + ".harmonics[" + std::to_string(i) + "] must be [cos, sin]");
            s.harmonics.push_back({pair[0].get<double>(), pair[1].get<double>()});
        }
    return s;
}

SubjectMeta read_subject(const json& j, const std::string& path, SubjectKind kind) {
    Reader r(j, path);
    SubjectMeta s;
    s.kind = kind;
    r.string("id", s.id);
    r.number("height", s.height);
    r.number("mass", s.mass);
    r.number("age", s.age);
    return s;
}

void read_synth(const json& j, SynthConfig& s) {
    Reader r(j, "synth");
    if (auto names = r.array("channel_names")) {
        s.channel_names.clear();
        for (const auto& n : *names) {
            if (!n.is_string()) fail(ErrorKind::config, "synth.channel_names entries must be strings");
            s.channel_names.push_back(n.get<std::string>());
        }
    }
    if (auto tasks = r.array("tasks")) {
        s.tasks.clear();
        for (std::size_t i = 0; i < tasks->size(); ++i) {
            const std::string p = "synth.tasks[" + std::to_string(i) + "]";
            Reader t((*tasks)[i], p);
            TaskSpec spec;
            t.string("name", spec.name);
            t.number("cycle_samples", spec.cycle_samples);
            if (auto chans = t.array("channels"))
                for (std::size_t c = 0; c < chans->size(); ++c)
                    spec.channels.push_back(read_series((*chans)[c], p + ".channels[" + std::to_string(c) + "]"));
            if (auto target = t.take("target")) spec.target = read_series(*target, p + ".target");
            s.tasks.push_back(std::move(spec));
        }
    }
    r.number("noise_std", s.noise_std);
    r.number("cadence_jitter", s.cadence_jitter);
    r.number("amplitude_jitter", s.amplitude_jitter);
    r.number("speed_drift", s.speed_drift);
    r.number("subject_variation", s.subject_variation);
    r.count("able_cycles", s.able_cycles);
    r.count("amputee_cycles", s.amputee_cycles);
    if (auto able = r.array("able_subjects")) {
        s.able_subjects.clear();
        for (std::size_t i = 0; i < able->size(); ++i)
            s.able_subjects.push_back(
                read_subject((*able)[i], "synth.able_subjects[" + std::to_string(i) + "]", SubjectKind::able));
    }
    if (auto amps = r.array("amputees")) {
        s.amputees.clear();
        for (std::size_t i = 0; i < amps->size(); ++i) {
            const std::string p = "synth.amputees[" + std::to_string(i) + "]";
            Reader a((*amps)[i], p);
            AmputeeSpec spec;
            if (auto subj = a.take("subject")) spec.subject = read_subject(*subj, p + ".subject", SubjectKind::amputee);
            spec.subject.kind = SubjectKind::amputee;
            if (auto d = a.take("distortion")) {
                Reader dr(*d, p + ".distortion");
                if (auto drop = dr.array("dropout"))
                    for (const auto& c : *drop) {
                        if (!c.is_number_unsigned()) fail(ErrorKind::config, p + ".distortion.dropout entries must be channel indices");
                        spec.distortion.dropout.push_back(c.get<std::size_t>());
                    }
                dr.number("phase_lag", spec.distortion.phase_lag);
                dr.number("asymmetry", spec.distortion.asymmetry);
                dr.number("compensation_amplitude", spec.distortion.compensation_amplitude);
                dr.integer("compensation_harmonic", spec.distortion.compensation_harmonic);
            }
            s.amputees.push_back(std::move(spec));
        }
    }
}

}  // namespace

std::string ExperimentConfig::to_json() const {
    json j;
    j["seed"] = seed;
    j["amputee_task"] = amputee_task;
    j["window"] = window;
    j["stride"] = stride;
    j["foundation_stride"] = foundation_stride;
    j["holdout_fraction"] = holdout_fraction;
    j["ratios"] = ratios;
    j["stage_ratio"] = stage_ratio;
    j["eval_seeds"] = eval_seeds;
    j["foundation"] = {{"layers", conv_json(foundation.layers)}, {"head_hidden", foundation.head_hidden}};
    j["foundation_train"] = train_json(foundation_train);
    j["direct_train"] = train_json(direct_train);
    j["template"] = {{"m", templates.m},
                     {"n", templates.n},
                     {"epsilon", templates.epsilon},
                     {"weighting", to_string(templates.weighting)}};
    j["refurbish"] = {{"layers", conv_json(refurbish.layers)},
                      {"output_kernel", refurbish.output_kernel},
                      {"alpha", refurbish_train.alpha},
                      {"beta", refurbish_train.beta},
                      {"epochs", refurbish_train.epochs},
                      {"batch_size", refurbish_train.batch_size},
                      {"learning_rate", refurbish_train.learning_rate},
                      {"pooled", pooled_refurbish}};
    json tasks = json::array();
    for (const auto& t : synth.tasks) {
        json chans = json::array();
        for (const auto& c : t.channels) chans.push_back(series_json(c));
        tasks.push_back(
            {{"name", t.name}, {"cycle_samples", t.cycle_samples}, {"channels", chans}, {"target", series_json(t.target)}});
    }
    json able = json::array();
    for (const auto& s : synth.able_subjects) able.push_back(subject_json(s));
    json amps = json::array();
    for (const auto& a : synth.amputees)
        amps.push_back({{"subject", subject_json(a.subject)},
                        {"distortion",
                         {{"dropout", a.distortion.dropout},
                          {"phase_lag", a.distortion.phase_lag},
                          {"asymmetry", a.distortion.asymmetry},
                          {"compensation_amplitude", a.distortion.compensation_amplitude},
                          {"compensation_harmonic", a.distortion.compensation_harmonic}}}});
    j["synth"] = {{"channel_names", synth.channel_names},
                  {"tasks", tasks},
                  {"noise_std", synth.noise_std},
                  {"cadence_jitter", synth.cadence_jitter},
                  {"amplitude_jitter", synth.amplitude_jitter},
                  {"speed_drift", synth.speed_drift},
                  {"subject_variation", synth.subject_variation},
                  {"able_cycles", synth.able_cycles},
                  {"amputee_cycles", synth.amputee_cycles},
                  {"able_subjects", able},
                  {"amputees", amps}};
    return j.dump(2) + "\n";
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::config, std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentConfig cfg = defaults();
    {
        Reader r(j, "");
        if (!r.has("amputee_task"))
            fail(ErrorKind::config, "amputee_task is required (the foundation head used for amputee prediction)");
        r.integer("amputee_task", cfg.amputee_task);
        r.seed("seed", cfg.seed);
        r.count("window", cfg.window);
        r.count("stride", cfg.stride);
        r.count("foundation_stride", cfg.foundation_stride);
        r.number("holdout_fraction", cfg.holdout_fraction);
        r.number("stage_ratio", cfg.stage_ratio);
        if (auto ratios = r.array("ratios")) {
            cfg.ratios.clear();
            for (const auto& v : *ratios) {
                if (!v.is_number()) fail(ErrorKind::config, "ratios entries must be numbers");
                cfg.ratios.push_back(v.get<double>());
            }
        }
        if (auto seeds = r.array("eval_seeds")) {
            cfg.eval_seeds.clear();
            for (const auto& v : *seeds) {
                if (!v.is_number_unsigned()) fail(ErrorKind::config, "eval_seeds entries must be nonnegative integers");
                cfg.eval_seeds.push_back(v.get<std::uint64_t>());
            }
        }
        if (auto f = r.take("foundation")) {
            Reader fr(*f, "foundation");
            if (auto layers = fr.array("layers")) cfg.foundation.layers = read_layers(*layers, "foundation.layers");
            fr.count("head_hidden", cfg.foundation.head_hidden);
        }
        if (auto t = r.take("foundation_train")) read_train(*t, "foundation_train", cfg.foundation_train);
        if (auto t = r.take("direct_train")) read_train(*t, "direct_train", cfg.direct_train);
        if (auto t = r.take("template")) {
            Reader tr(*t, "template");
            tr.count("m", cfg.templates.m);
            tr.count("n", cfg.templates.n);
            tr.number("epsilon", cfg.templates.epsilon);
            std::string w = to_string(cfg.templates.weighting);
            tr.string("weighting", w);
            cfg.templates.weighting = parse_weighting(w);
        }
        if (auto t = r.take("refurbish")) {
            Reader rr(*t, "refurbish");
            if (auto layers = rr.array("layers")) cfg.refurbish.layers = read_layers(*layers, "refurbish.layers");
            rr.count("output_kernel", cfg.refurbish.output_kernel);
            rr.number("alpha", cfg.refurbish_train.alpha);
            rr.number("beta", cfg.refurbish_train.beta);
            rr.count("epochs", cfg.refurbish_train.epochs);
            rr.count("batch_size", cfg.refurbish_train.batch_size);
            rr.number("learning_rate", cfg.refurbish_train.learning_rate);
            rr.boolean("pooled", cfg.pooled_refurbish);
        }
        if (auto s = r.take("synth")) read_synth(*s, cfg.synth);
    }
    cfg.set_seed(cfg.seed);
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::io, "cannot read config " + path.string());
    std::ostringstream buf;
    buf << f.rdbuf();
    return from_json(buf.str());
}

}  // namespace reprog
