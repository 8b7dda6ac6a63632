#pragma once

#include "evdvsr/sequence.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace evdvsr {

/// On-disk clip layout:
///   <root>/<clip>/blur_lr/%06d.png, sharp_hr/%06d.png, events.bin (LR),
///   events_hr.bin (HR, edge masks), exposures.json
/// plus <root>/manifest.json describing how the dataset was generated.
struct ClipManifest {
    std::string name;
    int frames = 0;
    ExposurePlan plan;
    std::uint64_t seed = 0;
    std::int64_t lr_events = 0;
    std::int64_t hr_events = 0;
};

struct DatasetManifest {
    std::uint64_t seed = 0;
    double threshold = 0.15;
    int scale = 4;
    int bins = 5;
    int lr_height = 0;
    int lr_width = 0;
    std::string source;  // "synthetic" or the source directory
    std::vector<ClipManifest> clips;
};

std::string frame_filename(int index);

void write_clip(const std::filesystem::path& clip_dir, const ClipData& clip);

/// Reads one clip. Ground truth and HR events are loaded only when `with_ground_truth`.
ClipData read_clip(const std::filesystem::path& clip_dir, bool with_ground_truth = true);

void write_exposures(const std::filesystem::path& path, const std::vector<events::ExposureWindow>& exposures);
std::vector<events::ExposureWindow> read_exposures(const std::filesystem::path& path);

void write_manifest(const std::filesystem::path& root, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& root);

/// Clip directory names under `root`, sorted.
std::vector<std::string> list_clips(const std::filesystem::path& root);

/// Sorted PNG files of a directory.
std::vector<std::filesystem::path> list_pngs(const std::filesystem::path& dir);

}  // namespace evdvsr
