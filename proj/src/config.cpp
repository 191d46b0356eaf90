#include "mavact/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "mavact/errors.hpp"

namespace mavact::cli {

using nlohmann::json;

synth::DatasetSpec DataSection::dataset_spec() const {
    synth::DatasetSpec s;
    s.per_class = per_class;
    s.scale = scale;
    s.seed = seed;
    s.jitter = jitter;
    s.fps = fps;
    s.render = synth::RenderParams::for_frame(height, width, frames);
    s.render.noise_std = noise_std;
    return s;
}

std::string stage_name(int stage) { return "C" + std::to_string(stage + 2); }

int stage_index(const std::string& name) {
    if (name.size() == 2 && name[0] == 'C' && name[1] >= '2' && name[1] <= '5') return name[1] - '2';
    throw std::invalid_argument("unknown stage '" + name + "' (expected C2..C5)");
}

namespace {

/// Reads the members of one JSON object, remembering which keys were
/// consumed so leftovers can be reported as unknown.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_, "expected an object");
    }

    std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

    template <typename T>
    void get(const std::string& k, T& out) {
        used_.insert(k);
        auto it = j_.find(k);
        if (it == j_.end()) return;
        const json& v = *it;
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ConfigError(key(k), "expected a boolean");
            out = v.get<bool>();
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) throw ConfigError(key(k), "expected an integer");
            if constexpr (std::is_unsigned_v<T>) {
                if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
                    throw ConfigError(key(k), "expected a non-negative integer");
                }
            }
            out = v.get<T>();
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw ConfigError(key(k), "expected a number");
            out = v.get<T>();
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw ConfigError(key(k), "expected a string");
            out = v.get<std::string>();
        } else {
            static_assert(sizeof(T) == 0, "unsupported config field type");
        }
    }

    void get_stages(const std::string& k, std::vector<int>& out) {
        used_.insert(k);
        auto it = j_.find(k);
        if (it == j_.end()) return;
        if (!it->is_array()) throw ConfigError(key(k), "expected an array of stage names");
        out.clear();
        for (const auto& s : *it) {
            if (!s.is_string()) throw ConfigError(key(k), "expected stage names like \"C2\"");
            try {
                out.push_back(stage_index(s.get<std::string>()));
            } catch (const std::invalid_argument& e) {
                throw ConfigError(key(k), e.what());
            }
        }
    }

    template <std::size_t N>
    void get_array(const std::string& k, std::array<int64_t, N>& out) {
        used_.insert(k);
        auto it = j_.find(k);
        if (it == j_.end()) return;
        if (!it->is_array() || it->size() != N) {
            throw ConfigError(key(k), "expected an array of " + std::to_string(N) + " integers");
        }
        for (std::size_t i = 0; i < N; ++i) {
            if (!(*it)[i].is_number_integer()) throw ConfigError(key(k), "expected integers");
            out[i] = (*it)[i].get<int64_t>();
        }
    }

    const json* child(const std::string& k) {
        used_.insert(k);
        auto it = j_.find(k);
        return it == j_.end() ? nullptr : &*it;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!used_.count(it.key())) throw ConfigError(key(it.key()), "unknown key");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

void read_backbone(const json& j, const std::string& path, nn::BackboneConfig& b) {
    Section s(j, path);
    s.get_array("widths", b.widths);
    s.get("stem_width", b.stem_width);
    s.get("saa_enabled", b.saa_enabled);
    s.get_stages("saa_stages", b.saa_stages);
    s.finish();
}

json stages_json(const std::vector<int>& stages) {
    json arr = json::array();
    for (int s : stages) arr.push_back(stage_name(s));
    return arr;
}

template <typename F>
void check(bool ok, const std::string& key, F&& message) {
    if (!ok) throw ConfigError(key, message);
}

}  // namespace

json to_json(const nn::BackboneConfig& cfg) {
    return {{"widths", cfg.widths},
            {"stem_width", cfg.stem_width},
            {"saa_enabled", cfg.saa_enabled},
            {"saa_stages", stages_json(cfg.saa_stages)}};
}

void RunConfig::resolve() {
    const auto& d = data;
    check(d.per_class >= 1, "data.per_class", "must be >= 1");
    check(d.jitter >= 0.0, "data.jitter", "must be >= 0");
    check(d.frames >= 2, "data.frames", "must be >= 2");
    check(d.height >= 16, "data.height", "must be >= 16");
    check(d.width >= 16, "data.width", "must be >= 16");
    check(d.fps >= 1, "data.fps", "must be >= 1");
    check(d.noise_std >= 0.0, "data.noise_std", "must be >= 0");
    check(d.split_den > 0 && d.split_num > 0 && d.split_num < d.split_den, "data.split",
          "train fraction split_num/split_den must lie strictly between 0 and 1");
    check(!d.path.empty(), "data.path", "must not be empty");
    check(crop_frames >= 1 && crop_frames <= d.frames, "train.crop_frames", "must be in 1..data.frames");
    check(bench.reps >= 1, "bench.reps", "must be >= 1");
    check(bench.warmup >= 0, "bench.warmup", "must be >= 0");
    check(bench.device == "cpu" || bench.device == "cuda", "bench.device", "must be \"cpu\" or \"cuda\"");

    for (auto* b : {&teacher, &student}) {
        b->input_frames = crop_frames;
        b->input_height = d.height;
        b->input_width = d.width;
        b->num_classes = kNumActions;
    }
    teacher.role = nn::Role::kTeacher;
    student.role = nn::Role::kStudent;
    for (auto [b, name] : {std::pair{&teacher, "teacher"}, std::pair{&student, "student"}}) {
        try {
            b->validate();
        } catch (const std::invalid_argument& e) {
            const std::string msg = e.what();
            throw ConfigError(std::string(name) + "." + msg.substr(0, msg.find(':')), msg);
        }
    }
    for (int l = 0; l < nn::kNumStages; ++l) {
        check(teacher.widths[l] >= student.widths[l], "teacher.widths",
              "teacher stage widths must be >= student widths stage-wise");
    }
    train.validate();
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
        cfg.resolve();
        return cfg;
    }
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("malformed config: ") + e.what());
    }
    Section top(root, "");
    if (const auto* j = top.child("data")) {
        Section s(*j, "data");
        s.get("path", cfg.data.path);
        s.get("per_class", cfg.data.per_class);
        std::string scale(to_string(cfg.data.scale));
        s.get("scale", scale);
        try {
            cfg.data.scale = scale_from_string(scale);
        } catch (const std::invalid_argument& e) {
            throw ConfigError("data.scale", e.what());
        }
        s.get("seed", cfg.data.seed);
        s.get("jitter", cfg.data.jitter);
        s.get("frames", cfg.data.frames);
        s.get("height", cfg.data.height);
        s.get("width", cfg.data.width);
        s.get("fps", cfg.data.fps);
        s.get("noise_std", cfg.data.noise_std);
        s.get("split_num", cfg.data.split_num);
        s.get("split_den", cfg.data.split_den);
        s.get("split_seed", cfg.data.split_seed);
        s.finish();
    }
    if (const auto* j = top.child("teacher")) read_backbone(*j, "teacher", cfg.teacher);
    if (const auto* j = top.child("student")) read_backbone(*j, "student", cfg.student);
    if (const auto* j = top.child("loss")) {
        Section s(*j, "loss");
        auto& w = cfg.train.weights;
        s.get("alpha", w.alpha);
        s.get("beta", w.beta);
        s.get("gamma", w.gamma);
        s.get("delta", w.delta);
        s.get("tau", w.tau);
        s.get("t_kd", w.t_kd);
        s.finish();
    }
    if (const auto* j = top.child("train")) {
        Section s(*j, "train");
        auto& t = cfg.train;
        s.get("lr", t.lr);
        s.get("epochs", t.epochs);
        s.get("batch_size", t.batch_size);
        s.get("seed", t.seed);
        s.get("adam_beta1", t.adam_beta1);
        s.get("adam_beta2", t.adam_beta2);
        s.get("adam_eps", t.adam_eps);
        s.get_stages("stages", t.stages);
        s.get("trials", t.trials);
        s.get("deterministic", t.deterministic);
        s.get("rotate", t.augment.rotate);
        s.get("brightness", t.augment.brightness);
        s.get("crop_frames", cfg.crop_frames);
        s.finish();
    }
    if (const auto* j = top.child("bench")) {
        Section s(*j, "bench");
        s.get("device", cfg.bench.device);
        s.get("reps", cfg.bench.reps);
        s.get("warmup", cfg.bench.warmup);
        s.finish();
    }
    top.finish();
    cfg.resolve();
    return cfg;
}

RunConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

json to_json(const RunConfig& cfg) {
    const auto& d = cfg.data;
    const auto& t = cfg.train;
    const auto& w = t.weights;
    json j;
    j["data"] = {{"path", d.path},         {"per_class", d.per_class},
                 {"scale", to_string(d.scale)}, {"seed", d.seed},
                 {"jitter", d.jitter},     {"frames", d.frames},
                 {"height", d.height},     {"width", d.width},
                 {"fps", d.fps},           {"noise_std", d.noise_std},
                 {"split_num", d.split_num}, {"split_den", d.split_den},
                 {"split_seed", d.split_seed}};
    j["teacher"] = to_json(cfg.teacher);
    j["student"] = to_json(cfg.student);
    j["loss"] = {{"alpha", w.alpha}, {"beta", w.beta}, {"gamma", w.gamma},
                 {"delta", w.delta}, {"tau", w.tau},   {"t_kd", w.t_kd}};
    j["train"] = {{"lr", t.lr},
                  {"epochs", t.epochs},
                  {"batch_size", t.batch_size},
                  {"seed", t.seed},
                  {"adam_beta1", t.adam_beta1},
                  {"adam_beta2", t.adam_beta2},
                  {"adam_eps", t.adam_eps},
                  {"stages", stages_json(t.stages)},
                  {"trials", t.trials},
                  {"deterministic", t.deterministic},
                  {"rotate", t.augment.rotate},
                  {"brightness", t.augment.brightness},
                  {"crop_frames", cfg.crop_frames}};
    j["bench"] = {{"device", cfg.bench.device}, {"reps", cfg.bench.reps}, {"warmup", cfg.bench.warmup}};
    return j;
}

std::string serialize(const RunConfig& cfg) { return to_json(cfg).dump(2); }

}  // namespace mavact::cli
