#include "evdvsr/config.hpp"

#include "evdvsr/error.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <variant>

namespace evdvsr {

namespace {

using Field = std::variant<int*, std::int64_t*, std::uint64_t*, double*, bool*, std::string*, RfdOrder*>;

std::vector<std::pair<std::string, Field>> fields(Config& c) {
    auto& m = c.model;
    auto& t = c.train;
    auto& d = c.data;
    auto& e = c.eval;
    return {
        {"model.channels", &m.channels},
        {"model.residual_blocks", &m.residual_blocks},
        {"model.attention_heads", &m.attention_heads},
        {"model.mlp_ratio", &m.mlp_ratio},
        {"model.voxel_bins", &m.voxel_bins},
        {"model.scale", &m.scale},
        {"model.dcn_groups", &m.dcn_groups},
        {"model.dcn_offset_clamp", &m.dcn_offset_clamp},
        {"model.flow_channels", &m.flow_channels},
        {"model.rfd_order", &m.rfd_order},
        {"model.use_i2e", &m.use_i2e},
        {"model.use_intra", &m.use_intra},
        {"model.use_inter", &m.use_inter},
        {"model.use_ega", &m.use_ega},
        {"model.use_fga", &m.use_fga},
        {"train.dataset", &t.dataset},
        {"train.val_dataset", &t.val_dataset},
        {"train.clip_length", &t.clip_length},
        {"train.crop_size", &t.crop_size},
        {"train.batch_size", &t.batch_size},
        {"train.base_lr", &t.base_lr},
        {"train.lr_min", &t.lr_min},
        {"train.flow_lr_scale", &t.flow_lr_scale},
        {"train.total_iters", &t.total_iters},
        {"train.flip_prob_h", &t.flip_prob_h},
        {"train.flip_prob_v", &t.flip_prob_v},
        {"train.center_crop", &t.center_crop},
        {"train.seed", &t.seed},
        {"train.eta", &t.eta},
        {"train.use_lr", &t.use_lr},
        {"train.use_le", &t.use_le},
        {"train.beta1", &t.beta1},
        {"train.beta2", &t.beta2},
        {"train.adam_eps", &t.adam_eps},
        {"train.flow_pretrain_iters", &t.flow_pretrain_iters},
        {"train.checkpoint_every", &t.checkpoint_every},
        {"train.validate_every", &t.validate_every},
        {"train.log_every", &t.log_every},
        {"data.source", &d.source},
        {"data.clips", &d.clips},
        {"data.frames", &d.frames},
        {"data.hr_height", &d.hr_height},
        {"data.hr_width", &d.hr_width},
        {"data.threshold", &d.threshold},
        {"data.seed", &d.seed},
        {"data.speed_min", &d.speed_min},
        {"data.speed_max", &d.speed_max},
        {"data.sharp_per_exposure_min", &d.sharp_per_exposure_min},
        {"data.sharp_per_exposure_max", &d.sharp_per_exposure_max},
        {"data.gap", &d.gap},
        {"data.frame_interval_us", &d.frame_interval_us},
        {"eval.dataset", &e.dataset},
        {"eval.checkpoint", &e.checkpoint},
        {"eval.tile_size", &e.tile_size},
        {"eval.tile_overlap", &e.tile_overlap},
        {"eval.gt_as_pred", &e.gt_as_pred},
        {"eval.frame_weighted", &e.frame_weighted},
        {"eval.write_grids", &e.write_grids},
        {"eval.zero_events", &e.zero_events},
    };
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const auto* first = value.data();
    const auto* last = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last) throw InvalidInput("config: invalid value '" + value + "' for " + key);
    return out;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct Assign {
    const std::string& key;
    const std::string& value;
    void operator()(int* p) const { *p = parse_number<int>(key, value); }
    void operator()(std::int64_t* p) const { *p = parse_number<std::int64_t>(key, value); }
    void operator()(std::uint64_t* p) const { *p = parse_number<std::uint64_t>(key, value); }
    void operator()(double* p) const { *p = parse_number<double>(key, value); }
    void operator()(bool* p) const {
        if (value == "true" || value == "1") *p = true;
        else if (value == "false" || value == "0") *p = false;
        else throw InvalidInput("config: expected true/false for " + key + ", got '" + value + "'");
    }
    void operator()(std::string* p) const { *p = value; }
    void operator()(RfdOrder* p) const {
        if (value == "ie_ei") *p = RfdOrder::image_to_event_first;
        else if (value == "ei_ie") *p = RfdOrder::event_to_image_first;
        else throw InvalidInput("config: rfd_order must be ie_ei or ei_ie, got '" + value + "'");
    }
};

struct Format {
    std::string operator()(const int* p) const { return std::to_string(*p); }
    std::string operator()(const std::int64_t* p) const { return std::to_string(*p); }
    std::string operator()(const std::uint64_t* p) const { return std::to_string(*p); }
    std::string operator()(const double* p) const { return format_double(*p); }
    std::string operator()(const bool* p) const { return *p ? "true" : "false"; }
    std::string operator()(const std::string* p) const { return *p; }
    std::string operator()(const RfdOrder* p) const { return *p == RfdOrder::image_to_event_first ? "ie_ei" : "ei_ie"; }
};

}  // namespace

void ModelConfig::validate() const {
    if (channels < 1 || residual_blocks < 0 || attention_heads < 1 || dcn_groups < 1 || mlp_ratio < 1 || flow_channels < 2)
        throw InvalidInput("model config: sizes must be positive");
    if (channels % attention_heads != 0) throw InvalidInput("model config: channels must be divisible by attention_heads");
    if (channels % dcn_groups != 0) throw InvalidInput("model config: channels must be divisible by dcn_groups");
    if (scale != 2 && scale != 4) throw InvalidInput("model config: scale must be 2 or 4");
    if (voxel_bins < 1) throw InvalidInput("model config: voxel_bins must be >= 1");
    if (!(dcn_offset_clamp > 0.0)) throw InvalidInput("model config: dcn_offset_clamp must be positive");
}

void TrainConfig::validate() const {
    if (clip_length < 2) throw InvalidInput("train config: clip_length must be >= 2");
    if (crop_size < 4 || crop_size % 4 != 0) throw InvalidInput("train config: crop_size must be a positive multiple of 4");
    if (batch_size < 1) throw InvalidInput("train config: batch_size must be >= 1");
    if (base_lr < 0 || lr_min < 0 || lr_min > base_lr) throw InvalidInput("train config: need 0 <= lr_min <= base_lr");
    if (total_iters < 0) throw InvalidInput("train config: total_iters must be >= 0");
    if (!use_lr && !use_le) throw InvalidInput("train config: at least one loss term must be enabled");
    if (!(eta > 0.0)) throw InvalidInput("train config: eta must be positive");
    if (checkpoint_every < 1 || validate_every < 1 || log_every < 1)
        throw InvalidInput("train config: checkpoint/validate/log intervals must be >= 1");
}

void Config::validate() const {
    model.validate();
    train.validate();
}

void set_config_value(Config& config, const std::string& key, const std::string& value) {
    for (auto& [name, field] : fields(config))
        if (name == key) {
            std::visit(Assign{key, value}, field);
            return;
        }
    throw InvalidInput("config: unknown key '" + key + "'");
}

std::string get_config_value(const Config& config, const std::string& key) {
    for (auto& [name, field] : fields(const_cast<Config&>(config)))
        if (name == key) return std::visit(Format{}, field);
    throw InvalidInput("config: unknown key '" + key + "'");
}

std::vector<std::string> config_keys() {
    Config scratch;
    std::vector<std::string> out;
    for (auto& [name, field] : fields(scratch)) out.push_back(name);
    return out;
}

void apply_config_text(Config& config, const std::string& text, const std::string& source) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidInput(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
        try {
            set_config_value(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const InvalidInput& e) {
            throw InvalidInput(source + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

void apply_config_file(Config& config, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    apply_config_text(config, buf.str(), path.string());
}

std::string serialize_config(const Config& config) {
    std::string out;
    for (auto& [name, field] : fields(const_cast<Config&>(config)))
        out += name + " = " + std::visit(Format{}, field) + "\n";
    return out;
}

std::string serialize_model_config(const ModelConfig& model) {
    Config c;
    c.model = model;
    std::string out;
    for (auto& [name, field] : fields(c))
        if (name.rfind("model.", 0) == 0) out += name + " = " + std::visit(Format{}, field) + "\n";
    return out;
}

ModelConfig parse_model_config(const std::string& text) {
    Config c;
    apply_config_text(c, text, "<model config>");
    return c.model;
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string model_config_hash(const ModelConfig& model) { return fnv1a_hex(serialize_model_config(model)); }

std::string toggle_summary(const Config& c) {
    std::string s;
    for (const char* key : {"model.use_intra", "model.use_inter", "model.use_ega", "model.use_fga", "model.use_i2e",
                            "model.rfd_order", "train.use_lr", "train.use_le"})
        s += std::string(key).substr(std::string(key).find('.') + 1) + "=" + get_config_value(c, key) + " ";
    if (!s.empty()) s.pop_back();
    return s;
}

std::string toggle_hash(const Config& c) { return fnv1a_hex(toggle_summary(c)).substr(0, 8); }

}  // namespace evdvsr
