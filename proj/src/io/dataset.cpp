#include "evdvsr/dataset.hpp"

#include "evdvsr/error.hpp"
#include "evdvsr/event_io.hpp"
#include "evdvsr/png_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace evdvsr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw DataError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
}

}  // namespace

std::string frame_filename(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%06d.png", index);
    return buf;
}

std::vector<fs::path> list_pngs(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw DataError("missing directory " + dir.string());
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".png") out.push_back(entry.path());
    std::sort(out.begin(), out.end());
    return out;
}

void write_exposures(const fs::path& path, const std::vector<events::ExposureWindow>& exposures) {
    json arr = json::array();
    for (const auto& w : exposures) arr.push_back({{"frame_index", w.frame_index}, {"t_start", w.t_start}, {"t_end", w.t_end}});
    write_json(path, arr);
}

std::vector<events::ExposureWindow> read_exposures(const fs::path& path) {
    const json arr = read_json(path);
    if (!arr.is_array()) throw DataError(path.string() + ": expected a JSON array");
    std::vector<events::ExposureWindow> out;
    try {
        for (const auto& item : arr)
            out.push_back({item.at("t_start").get<std::int64_t>(), item.at("t_end").get<std::int64_t>(),
                           item.at("frame_index").get<int>()});
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return out;
}

void write_clip(const fs::path& clip_dir, const ClipData& clip) {
    fs::create_directories(clip_dir / "blur_lr");
    fs::create_directories(clip_dir / "sharp_hr");
    for (std::size_t i = 0; i < clip.blurry_lr.size(); ++i)
        write_png(clip_dir / "blur_lr" / frame_filename(static_cast<int>(i)), clip.blurry_lr[i]);
    for (std::size_t i = 0; i < clip.sharp_hr.size(); ++i)
        write_png(clip_dir / "sharp_hr" / frame_filename(static_cast<int>(i)), clip.sharp_hr[i]);
    events::save_events(clip_dir / "events.bin", clip.events_lr);
    if (clip.events_hr.width > 0) events::save_events(clip_dir / "events_hr.bin", clip.events_hr);
    write_exposures(clip_dir / "exposures.json", clip.exposures);
}

ClipData read_clip(const fs::path& clip_dir, bool with_ground_truth) {
    ClipData clip;
    for (const auto& p : list_pngs(clip_dir / "blur_lr")) clip.blurry_lr.push_back(read_png(p));
    if (clip.blurry_lr.empty()) throw DataError("no blurry frames in " + clip_dir.string());
    const fs::path events_path = clip_dir / "events.bin";
    if (!fs::exists(events_path)) throw DataError("missing " + events_path.string());
    clip.events_lr = events::load_events(events_path);
    clip.exposures = read_exposures(clip_dir / "exposures.json");
    if (clip.exposures.size() != clip.blurry_lr.size())
        throw DataError(clip_dir.string() + ": exposures.json lists " + std::to_string(clip.exposures.size()) +
                        " windows for " + std::to_string(clip.blurry_lr.size()) + " frames");
    if (with_ground_truth) {
        for (const auto& p : list_pngs(clip_dir / "sharp_hr")) clip.sharp_hr.push_back(read_png(p));
        if (clip.sharp_hr.size() != clip.blurry_lr.size())
            throw DataError(clip_dir.string() + ": sharp_hr and blur_lr frame counts differ");
        clip.events_hr = events::load_events(clip_dir / "events_hr.bin");
    }
    return clip;
}

void write_manifest(const fs::path& root, const DatasetManifest& m) {
    json clips = json::array();
    for (const auto& c : m.clips)
        clips.push_back({{"name", c.name},
                         {"frames", c.frames},
                         {"seed", c.seed},
                         {"sharp_per_exposure", c.plan.sharp_per_exposure},
                         {"gap", c.plan.gap},
                         {"frame_interval_us", c.plan.frame_interval_us},
                         {"lr_events", c.lr_events},
                         {"hr_events", c.hr_events}});
    write_json(root / "manifest.json", {{"seed", m.seed},
                                        {"threshold", m.threshold},
                                        {"scale", m.scale},
                                        {"bins", m.bins},
                                        {"lr_height", m.lr_height},
                                        {"lr_width", m.lr_width},
                                        {"source", m.source},
                                        {"clips", clips}});
}

DatasetManifest read_manifest(const fs::path& root) {
    const json j = read_json(root / "manifest.json");
    DatasetManifest m;
    try {
        m.seed = j.at("seed").get<std::uint64_t>();
        m.threshold = j.at("threshold").get<double>();
        m.scale = j.at("scale").get<int>();
        m.bins = j.at("bins").get<int>();
        m.lr_height = j.at("lr_height").get<int>();
        m.lr_width = j.at("lr_width").get<int>();
        m.source = j.at("source").get<std::string>();
        for (const auto& c : j.at("clips")) {
            ClipManifest cm;
            cm.name = c.at("name").get<std::string>();
            cm.frames = c.at("frames").get<int>();
            cm.seed = c.at("seed").get<std::uint64_t>();
            cm.plan.sharp_per_exposure = c.at("sharp_per_exposure").get<int>();
            cm.plan.gap = c.at("gap").get<int>();
            cm.plan.frame_interval_us = c.at("frame_interval_us").get<std::int64_t>();
            cm.lr_events = c.at("lr_events").get<std::int64_t>();
            cm.hr_events = c.at("hr_events").get<std::int64_t>();
            m.clips.push_back(cm);
        }
    } catch (const json::exception& e) {
        throw DataError("manifest.json: " + std::string(e.what()));
    }
    return m;
}

std::vector<std::string> list_clips(const fs::path& root) {
    if (!fs::is_directory(root)) throw DataError("dataset root " + root.string() + " does not exist");
    std::vector<std::string> out;
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_directory() && fs::exists(entry.path() / "blur_lr")) out.push_back(entry.path().filename().string());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace evdvsr
