#include "evdvsr/app/cli.hpp"

#include "evdvsr/app/inference.hpp"
#include "evdvsr/app/report.hpp"
#include "evdvsr/app/selfcheck.hpp"
#include "evdvsr/dataset.hpp"
#include "evdvsr/error.hpp"
#include "evdvsr/png_io.hpp"
#include "evdvsr/synthetic.hpp"
#include "evdvsr/training.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

namespace evdvsr::app {

namespace fs = std::filesystem;

namespace {

// Configuration mistakes are usage errors rather than data errors.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void apply_layers(Config& c, const std::vector<std::string>& overrides, const char* env_seed) {
    if (env_seed && *env_seed) {
        set_config_value(c, "train.seed", env_seed);
        set_config_value(c, "data.seed", env_seed);
    }
    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw InvalidInput("override '" + kv + "' is not key=value");
        const auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t"), e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        set_config_value(c, trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
    }
    c.validate();
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw DataError("cannot read " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    if (!out) throw DataError("cannot write " + p.string());
    out << text;
}

struct Common {
    std::string config;
    std::vector<std::string> sets;
    std::string out;
};

Config load_config(const Common& common) {
    try {
        return resolve_config(common.config.empty() ? std::nullopt : std::optional<fs::path>(common.config), common.sets,
                              std::getenv("EVDVSR_SEED"));
    } catch (const InvalidInput& e) {
        throw UsageError(e.what());
    } catch (const DataError& e) {
        throw UsageError(e.what());
    }
}

fs::path require_out(const Common& common) {
    if (common.out.empty()) throw UsageError("--out is required");
    fs::create_directories(common.out);
    return common.out;
}

// ---- simulate ----

std::vector<std::vector<Image>> read_source_clips(const fs::path& source, std::vector<std::string>& names) {
    if (!fs::is_directory(source)) throw DataError("source directory " + source.string() + " does not exist");
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(source))
        if (e.is_directory()) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty()) dirs.push_back(source);  // a single clip given directly
    std::vector<std::vector<Image>> clips;
    for (const auto& d : dirs) {
        std::vector<Image> frames;
        for (const auto& p : list_pngs(d)) frames.push_back(read_png(p));
        if (frames.empty()) continue;
        clips.push_back(std::move(frames));
        names.push_back(d.filename().string());
    }
    if (clips.empty()) throw DataError("no PNG sequences under " + source.string());
    return clips;
}

int cmd_simulate(const Config& cfg, const fs::path& out_dir, bool synthetic, std::ostream& out) {
    const DataConfig& d = cfg.data;
    DatasetManifest manifest;
    manifest.seed = d.seed;
    manifest.threshold = d.threshold;
    manifest.scale = cfg.model.scale;
    manifest.bins = cfg.model.voxel_bins;
    SynthesisOptions synth{cfg.model.scale, cfg.model.voxel_bins, {}};
    synth.simulator.threshold = d.threshold;

    std::vector<std::vector<Image>> sources;
    std::vector<ExposurePlan> plans;
    std::vector<std::string> source_names;
    if (synthetic) {
        manifest.source = "synthetic";
        SyntheticOptions so;
        so.hr_height = d.hr_height;
        so.hr_width = d.hr_width;
        so.speed_min = d.speed_min;
        so.speed_max = d.speed_max;
        so.sharp_per_exposure_min = d.sharp_per_exposure_min;
        so.sharp_per_exposure_max = d.sharp_per_exposure_max;
        so.gap = d.gap;
        so.frame_interval_us = d.frame_interval_us;
        for (int i = 0; i < d.clips; ++i) {
            auto clip = generate_synthetic_clip(d.frames, so, d.seed + static_cast<std::uint64_t>(i));
            sources.push_back(std::move(clip.frames));
            plans.push_back(clip.plan);
        }
    } else {
        if (d.source.empty()) throw UsageError("simulate needs --synthetic or data.source");
        manifest.source = d.source;
        sources = read_source_clips(d.source, source_names);
        std::mt19937_64 rng(d.seed);
        for (const auto& frames : sources) {
            ExposurePlan plan;
            plan.sharp_per_exposure =
                std::uniform_int_distribution<int>(d.sharp_per_exposure_min, d.sharp_per_exposure_max)(rng);
            plan.gap = d.gap;
            plan.frame_interval_us = d.frame_interval_us;
            if (plan.required_frames(d.frames) > static_cast<int>(frames.size()))
                throw DataError("source clip has " + std::to_string(frames.size()) + " frames, the exposure plan needs " +
                                std::to_string(plan.required_frames(d.frames)));
            plans.push_back(plan);
        }
    }
    for (std::size_t i = 0; i < sources.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "clip_%03zu", i);
        const ClipData clip = synthesize_clip(sources[i], plans[i], d.frames, synth);
        write_clip(out_dir / name, clip);
        manifest.lr_height = clip.blurry_lr.front().height;
        manifest.lr_width = clip.blurry_lr.front().width;
        manifest.clips.push_back({name, d.frames, plans[i], synthetic ? d.seed + i : d.seed,
                                  static_cast<std::int64_t>(clip.events_lr.events.size()),
                                  static_cast<std::int64_t>(clip.events_hr.events.size())});
        out << name << ": " << d.frames << " frames, " << clip.events_lr.events.size() << " LR events\n";
    }
    write_manifest(out_dir, manifest);
    write_text(out_dir / "config.txt", serialize_config(cfg));
    return kOk;
}

// ---- train ----

// Keeps log lines whose leading iteration satisfies `keep`; used when resuming after a kill.
void truncate_log(const fs::path& p, const std::function<bool(long long)>& keep) {
    if (!fs::exists(p)) return;
    std::ifstream in(p);
    std::string line, kept;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#' || keep(std::atoll(line.c_str()))) kept += line + "\n";
    }
    in.close();
    write_text(p, kept);
}

int cmd_train(const Config& cfg, const fs::path& out_dir, std::int64_t stop_after, std::ostream& out) {
    if (cfg.train.dataset.empty()) throw UsageError("train.dataset is not set");
    const auto train = load_samples(cfg.train.dataset, cfg.model.scale, cfg.model.voxel_bins, true);
    std::vector<SequenceSample> val;
    if (!cfg.train.val_dataset.empty()) val = load_samples(cfg.train.val_dataset, cfg.model.scale, cfg.model.voxel_bins, true);
    write_text(out_dir / "config.txt", serialize_config(cfg));

    const fs::path latest = out_dir / "latest.pt";
    const fs::path log_path = out_dir / "train_log.txt", val_path = out_dir / "val_log.txt";
    training::TrainState state;
    if (fs::exists(latest)) {
        state = training::load_checkpoint(latest, cfg);
        const long long at = state.iteration;
        truncate_log(log_path, [&](long long it) { return it < at; });
        truncate_log(val_path, [&](long long it) { return it <= at; });
        out << "resuming from iteration " << state.iteration << "\n";
    } else {
        state = training::init_state(cfg);
        write_text(log_path, std::string(training::kLogHeader) + "\n");
        write_text(val_path, "# iter, psnr, bicubic_psnr\n");
    }
    std::ofstream log(log_path, std::ios::app), val_log(val_path, std::ios::app);
    training::FitOptions fo;
    fo.out_dir = out_dir;
    fo.log = &log;
    fo.val_log = &val_log;
    fo.stop_after = stop_after;
    training::fit(state, cfg, train, val, fo);
    out << "trained to iteration " << state.iteration << "; checkpoint " << latest.string() << "\n";
    return kOk;
}

// ---- eval / infer ----

training::TrainState load_for_inference(const fs::path& checkpoint, Config& cfg) {
    const Config stored = training::read_checkpoint_config(checkpoint);
    cfg.model = stored.model;
    cfg.train = stored.train;
    cfg.train.total_iters = std::max<std::int64_t>(cfg.train.total_iters, 0);
    return training::load_checkpoint(checkpoint, cfg);
}

int cmd_eval(Config cfg, const fs::path& out_dir, std::ostream& out) {
    if (cfg.eval.checkpoint.empty()) throw UsageError("eval needs --checkpoint or eval.checkpoint");
    if (cfg.eval.dataset.empty()) throw UsageError("eval needs --dataset or eval.dataset");
    auto state = load_for_inference(cfg.eval.checkpoint, cfg);
    EvalOptions opts;
    opts.tiles = {cfg.eval.tile_size, cfg.eval.tile_overlap};
    opts.gt_as_pred = cfg.eval.gt_as_pred;
    opts.zero_events = cfg.eval.zero_events;
    if (cfg.eval.write_grids) opts.grid_dir = out_dir / "grids";
    const EvalResult r = evaluate_dataset(state.model, cfg.eval.dataset, opts);
    {
        std::ofstream m(out_dir / "metrics.txt"), b(out_dir / "bicubic_metrics.txt");
        r.model.write_lines(m, cfg.eval.frame_weighted);
        r.bicubic.write_lines(b, cfg.eval.frame_weighted);
    }
    std::ostringstream table;
    table << "model\n";
    r.model.write_table(table, cfg.eval.frame_weighted);
    table << "\nbicubic\n";
    r.bicubic.write_table(table, cfg.eval.frame_weighted);
    write_text(out_dir / "metrics_table.txt", table.str());
    write_text(out_dir / "config.txt", serialize_config(cfg));
    out << table.str();
    return kOk;
}

int cmd_infer(Config cfg, const fs::path& input, const fs::path& out_dir, std::ostream& out) {
    if (cfg.eval.checkpoint.empty()) throw UsageError("infer needs --checkpoint");
    if (input.empty()) throw UsageError("infer needs --input <clip directory>");
    auto state = load_for_inference(cfg.eval.checkpoint, cfg);
    SequenceSample sample = load_sample(input, cfg.model.scale, cfg.model.voxel_bins, false);
    if (cfg.eval.zero_events) sample = zero_events(std::move(sample));
    const auto frames = super_resolve(state.model, sample, {cfg.eval.tile_size, cfg.eval.tile_overlap});
    for (std::size_t t = 0; t < frames.size(); ++t) write_png(out_dir / frame_filename(static_cast<int>(t)), frames[t]);
    out << "wrote " << frames.size() << " frames of " << frames.front().width << "x" << frames.front().height << "\n";
    return kOk;
}

}  // namespace

Config resolve_config_text(const std::string& file_text, const std::vector<std::string>& overrides,
                           const char* env_seed) {
    Config c;
    apply_config_text(c, file_text);
    apply_layers(c, overrides, env_seed);
    return c;
}

Config resolve_config(const std::optional<fs::path>& file, const std::vector<std::string>& overrides,
                      const char* env_seed) {
    Config c;
    if (file) apply_config_file(c, *file);
    apply_layers(c, overrides, env_seed);
    return c;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Event-assisted blurry video super-resolution", "evdvsr"};
    app.require_subcommand(1);
    Common common;
    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "Configuration file (key = value)");
        sub->add_option("--set", common.sets, "Override, key=value (repeatable)")->take_all();
        sub->add_option("--out", common.out, "Output directory");
    };

    auto* simulate = app.add_subcommand("simulate", "Synthesize a dataset of blurry LR clips, events and ground truth");
    add_common(simulate);
    bool synthetic = false;
    std::optional<int> clips, frames;
    std::string source;
    simulate->add_flag("--synthetic", synthetic, "Procedural moving-shape clips instead of a source directory");
    simulate->add_option("--clips", clips, "Number of synthetic clips");
    simulate->add_option("--frames", frames, "Blurry frames per clip");
    simulate->add_option("--source", source, "Directory of sharp PNG sequences");

    auto* train = app.add_subcommand("train", "Train a model");
    add_common(train);
    std::optional<std::int64_t> total_iters;
    std::int64_t stop_after = -1;
    train->add_option("--total-iters", total_iters, "Shorthand for train.total_iters");
    train->add_option("--stop-after", stop_after, "Stop (as if killed) once this many iterations ran")->group("");

    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
    add_common(eval);
    std::string checkpoint, dataset;
    std::optional<int> tile;
    bool gt_as_pred = false, zero_ev = false, no_grids = false;
    eval->add_option("--checkpoint", checkpoint, "Checkpoint file");
    eval->add_option("--dataset", dataset, "Dataset directory");
    eval->add_option("--tile", tile, "Tile size in LR pixels (0 = full frame)");
    eval->add_flag("--gt-as-pred", gt_as_pred, "Debug: score the ground truth against itself");
    eval->add_flag("--zero-events", zero_ev, "Debug: zero every voxel grid");
    eval->add_flag("--no-grids", no_grids, "Skip the comparison PNGs");

    auto* infer = app.add_subcommand("infer", "Super-resolve one clip");
    add_common(infer);
    std::string input;
    infer->add_option("--checkpoint", checkpoint, "Checkpoint file");
    infer->add_option("--input", input, "Clip directory (blur_lr/, events.bin, exposures.json)");
    infer->add_option("--tile", tile, "Tile size in LR pixels (0 = full frame)");
    infer->add_flag("--zero-events", zero_ev, "Debug: zero every voxel grid");

    auto* selfcheck = app.add_subcommand("selfcheck", "Run the registered invariant properties");
    std::vector<std::string> breaks;
    selfcheck->add_option("--break", breaks, "Fault injection hook")->check(CLI::IsMember({"dcn-clamp"}));

    auto* report = app.add_subcommand("report", "Aggregate run directories into tables and plots");
    std::vector<std::string> runs;
    std::string report_out;
    report->add_option("runs", runs, "Run directories (training and/or eval output)")->required();
    report->add_option("--out", report_out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return kUsage;
    }

    try {
        torch::set_num_threads(1);
        if (selfcheck->parsed()) {
            FaultInjection faults;
            faults.dcn_clamp = std::find(breaks.begin(), breaks.end(), "dcn-clamp") != breaks.end();
            const auto results = run_selfcheck(faults, out);
            const auto failed = std::count_if(results.begin(), results.end(), [](const auto& r) { return !r.pass; });
            err << results.size() - static_cast<std::size_t>(failed) << "/" << results.size() << " properties passed\n";
            return failed ? kFailure : kOk;
        }
        if (report->parsed()) {
            std::vector<RunSummary> summaries;
            for (const auto& r : runs) summaries.push_back(load_run(r));
            write_report(summaries, report_out);
            out << read_text(fs::path(report_out) / "report.txt");
            return kOk;
        }
        if (simulate->parsed()) {
            if (clips) common.sets.push_back("data.clips=" + std::to_string(*clips));
            if (frames) common.sets.push_back("data.frames=" + std::to_string(*frames));
            if (!source.empty()) common.sets.push_back("data.source=" + source);
            const Config cfg = load_config(common);
            return cmd_simulate(cfg, require_out(common), synthetic, out);
        }
        if (train->parsed()) {
            if (total_iters) common.sets.push_back("train.total_iters=" + std::to_string(*total_iters));
            const Config cfg = load_config(common);
            return cmd_train(cfg, require_out(common), stop_after, out);
        }
        if (!checkpoint.empty()) common.sets.push_back("eval.checkpoint=" + checkpoint);
        if (!dataset.empty()) common.sets.push_back("eval.dataset=" + dataset);
        if (tile) common.sets.push_back("eval.tile_size=" + std::to_string(*tile));
        if (gt_as_pred) common.sets.push_back("eval.gt_as_pred=true");
        if (zero_ev) common.sets.push_back("eval.zero_events=true");
        if (no_grids) common.sets.push_back("eval.write_grids=false");
        const Config cfg = load_config(common);
        if (eval->parsed()) return cmd_eval(cfg, require_out(common), out);
        return cmd_infer(cfg, input, require_out(common), out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const TrainingDivergence& e) {
        err << "training diverged: " << e.what() << "\n";
        return kFailure;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const InvalidInput& e) {
        err << "invalid input: " << e.what() << "\n";
        return kDataError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kDataError;
    }
}

}  // namespace evdvsr::app
