#include "evdvsr/training.hpp"

#include "evdvsr/error.hpp"
#include "evdvsr/metrics.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace evdvsr::training {

namespace {

constexpr const char* kCheckpointFormat = "evdvsr-checkpoint-1";
constexpr double kPrefitRange = 6.0;  // LR pixels
constexpr int kPrefitBatch = 4;

void require_same(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
    if (a.sizes() != b.sizes()) throw InvalidInput(std::string(what) + ": shape mismatch");
}

std::string read_string(torch::serialize::InputArchive& ar, const char* key) {
    c10::IValue v;
    if (!ar.try_read(key, v) || !v.isString()) throw DataError(std::string("checkpoint: missing field '") + key + "'");
    return v.toStringRef();
}

Image crop_image(const Image& img, int y0, int x0, int size) { return crop(img, y0, x0, size, size); }

std::unique_ptr<torch::optim::Adam> make_optimizer(nn::EvDeblurVsr& model, const TrainConfig& cfg) {
    const auto opts = torch::optim::AdamOptions(cfg.base_lr).betas({cfg.beta1, cfg.beta2}).eps(cfg.adam_eps);
    std::vector<torch::optim::OptimizerParamGroup> groups;
    groups.emplace_back(model->main_parameters(), std::make_unique<torch::optim::AdamOptions>(opts));
    auto flow_opts = std::make_unique<torch::optim::AdamOptions>(opts);
    flow_opts->lr(cfg.base_lr * cfg.flow_lr_scale);
    groups.emplace_back(model->flow_parameters(), std::move(flow_opts));
    return std::make_unique<torch::optim::Adam>(std::move(groups), opts);
}

double mean_frame_psnr(const torch::Tensor& pred, const torch::Tensor& gt) {
    double acc = 0.0;
    const auto t = pred.size(0);
    for (int64_t i = 0; i < t; ++i)
        acc += metrics::psnr(nn::tensor_to_image(pred[i].clamp(0, 1)), nn::tensor_to_image(gt[i])).db;
    return acc / static_cast<double>(t);
}

}  // namespace

torch::Tensor loss_r(const torch::Tensor& pred, const torch::Tensor& gt) {
    require_same(pred, gt, "loss_r");
    return (pred - gt).pow(2).mean();
}

torch::Tensor loss_e(const torch::Tensor& pred, const torch::Tensor& gt, const torch::Tensor& masks, double eta) {
    require_same(pred, gt, "loss_e");
    require_same(pred, masks, "loss_e");
    if (masks.numel() > 0 && (masks.min().item<double>() < 0.0 || masks.max().item<double>() > 1.0))
        throw InvalidInput("loss_e: mask values must lie in [0, 1]");
    // Every frame has the same pixel count, so the per-frame mean followed by
    // the mean over frames is the mean over all elements.
    return (masks * torch::sqrt((pred - gt).pow(2) + eta * eta)).mean();
}

double cosine_lr(std::int64_t iteration, std::int64_t total_iters, double base_lr, double lr_min) {
    if (total_iters <= 0) return base_lr;
    const double progress = static_cast<double>(std::clamp<std::int64_t>(iteration, 0, total_iters)) / total_iters;
    return lr_min + (base_lr - lr_min) * (1.0 + std::cos(std::numbers::pi * progress)) / 2.0;
}

LossTerms compute_losses(const torch::Tensor& pred, const nn::Batch& batch, const TrainConfig& cfg) {
    if (!batch.gt.defined()) throw InvalidInput("compute_losses: batch has no ground truth");
    LossTerms t;
    t.l_r = loss_r(pred, batch.gt);
    t.l_e = loss_e(pred, batch.gt, batch.masks, cfg.eta);
    t.total = torch::zeros({}, pred.options());
    if (cfg.use_lr) t.total = t.total + t.l_r;
    if (cfg.use_le) t.total = t.total + t.l_e;
    return t;
}

TrainState init_state(const Config& config, bool break_clamp) {
    config.validate();
    torch::manual_seed(config.train.seed);
    TrainState s;
    s.model = nn::EvDeblurVsr(config.model, break_clamp);
    s.optimizer = make_optimizer(s.model, config.train);
    s.rng.seed(config.train.seed);
    return s;
}

LossBreakdown train_step(TrainState& state, const nn::Batch& batch, const TrainConfig& cfg) {
    const double lr = cosine_lr(state.iteration, cfg.total_iters, cfg.base_lr, cfg.lr_min);
    auto& groups = state.optimizer->param_groups();
    static_cast<torch::optim::AdamOptions&>(groups[0].options()).lr(lr);
    static_cast<torch::optim::AdamOptions&>(groups[1].options()).lr(lr * cfg.flow_lr_scale);
    state.optimizer->zero_grad();
    const torch::Tensor pred = state.model->forward(batch);
    const LossTerms terms = compute_losses(pred, batch, cfg);
    LossBreakdown out{terms.l_r.item<double>(), terms.l_e.item<double>(), terms.total.item<double>()};
    if (!std::isfinite(out.total) || !std::isfinite(out.l_r) || !std::isfinite(out.l_e))
        throw TrainingDivergence(state.iteration, "non-finite loss at iteration " + std::to_string(state.iteration));
    terms.total.backward();
    state.optimizer->step();
    ++state.iteration;
    return out;
}

nn::Batch sample_batch(std::span<const SequenceSample> data, const TrainConfig& cfg, std::mt19937_64& rng) {
    if (data.empty()) throw InvalidInput("sample_batch: empty dataset");
    std::vector<SequenceSample> picked;
    int length = cfg.clip_length;
    int crop = cfg.crop_size;
    for (const auto& s : data) {
        length = std::min(length, s.length());
        crop = std::min({crop, s.lr_height() / 4 * 4, s.lr_width() / 4 * 4});
    }
    AugmentOptions aug{crop, cfg.center_crop, cfg.flip_prob_h, cfg.flip_prob_v};
    for (int b = 0; b < cfg.batch_size; ++b) {
        const auto& clip = data[std::uniform_int_distribution<std::size_t>(0, data.size() - 1)(rng)];
        const int first = std::uniform_int_distribution<int>(0, clip.length() - length)(rng);
        picked.push_back(augment(slice_frames(clip, first, length), aug, rng));
    }
    return nn::make_batch(picked);
}

double flow_prefit(TrainState& state, std::span<const SequenceSample> data, const TrainConfig& cfg) {
    if (data.empty() || cfg.flow_pretrain_iters <= 0) return 0.0;
    auto& model = state.model;
    torch::optim::Adam opt(model->flow_parameters(), torch::optim::AdamOptions(1e-3).betas({0.9, 0.99}));
    int crop = cfg.crop_size;
    for (const auto& s : data) crop = std::min({crop, s.lr_height() / 4 * 4, s.lr_width() / 4 * 4});
    const int margin = std::min(static_cast<int>(std::ceil(kPrefitRange)) + 1, crop / 4);
    std::uniform_real_distribution<double> shift(-kPrefitRange, kPrefitRange);
    double epe = 0.0;
    for (std::int64_t it = 0; it < cfg.flow_pretrain_iters; ++it) {
        std::vector<torch::Tensor> refs, flows;
        for (int b = 0; b < kPrefitBatch; ++b) {
            const auto& clip = data[std::uniform_int_distribution<std::size_t>(0, data.size() - 1)(state.rng)];
            const int t = std::uniform_int_distribution<int>(0, clip.length() - 1)(state.rng);
            const Image& frame = clip.blurry_lr[static_cast<std::size_t>(t)];
            const int y0 = std::uniform_int_distribution<int>(0, frame.height - crop)(state.rng);
            const int x0 = std::uniform_int_distribution<int>(0, frame.width - crop)(state.rng);
            refs.push_back(nn::image_to_tensor(crop_image(frame, y0, x0, crop)));
            const double dx = shift(state.rng), dy = shift(state.rng);
            flows.push_back(torch::stack({torch::full({crop, crop}, dx), torch::full({crop, crop}, dy)}).to(torch::kFloat));
        }
        const torch::Tensor ref = torch::stack(refs), target = torch::stack(flows);
        torch::Tensor moved;
        {
            torch::NoGradGuard guard;
            moved = nn::backward_warp(ref, target);  // moved(x) = ref(x + target)
        }
        opt.zero_grad();
        const torch::Tensor estimate = model->flow(moved, ref);
        const torch::Tensor err = (estimate - target).narrow(2, margin, crop - 2 * margin).narrow(3, margin, crop - 2 * margin);
        const torch::Tensor loss = err.abs().mean();
        loss.backward();
        opt.step();
        epe = err.pow(2).sum(1).sqrt().mean().item<double>();
    }
    return epe;
}

void save_checkpoint(std::ostream& out, const TrainState& state, const Config& config) {
    torch::serialize::OutputArchive ar;
    ar.write("format", c10::IValue(std::string(kCheckpointFormat)));
    ar.write("model_config", c10::IValue(serialize_model_config(state.model->config)));
    ar.write("config_hash", c10::IValue(model_config_hash(state.model->config)));
    ar.write("config", c10::IValue(serialize_config(config)));
    ar.write("iteration", c10::IValue(static_cast<int64_t>(state.iteration)));
    std::ostringstream rng;
    rng << state.rng;
    ar.write("rng", c10::IValue(rng.str()));
    torch::serialize::OutputArchive model_ar, optim_ar;
    state.model->save(model_ar);
    state.optimizer->save(optim_ar);
    ar.write("model", model_ar);
    ar.write("optimizer", optim_ar);
    ar.save_to(out);
}

void save_checkpoint(const std::filesystem::path& path, const TrainState& state, const Config& config) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write checkpoint " + tmp);
        save_checkpoint(out, state, config);
        if (!out) throw DataError("failed writing checkpoint " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

namespace {

void check_format(torch::serialize::InputArchive& ar, const std::string& source) {
    if (read_string(ar, "format") != kCheckpointFormat) throw DataError("checkpoint: unsupported format in " + source);
}

torch::serialize::InputArchive open_checkpoint(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw DataError("checkpoint not found: " + path.string());
    torch::serialize::InputArchive ar;
    try {
        ar.load_from(path.string());
    } catch (const c10::Error&) {
        throw DataError("checkpoint unreadable: " + path.string());
    }
    check_format(ar, path.string());
    return ar;
}

TrainState restore(torch::serialize::InputArchive& ar, const Config& config) {
    const std::string stored = read_string(ar, "model_config");
    if (fnv1a_hex(stored) != read_string(ar, "config_hash"))
        throw DataError("checkpoint: model config hash does not match its contents");
    if (model_config_hash(parse_model_config(stored)) != model_config_hash(config.model))
        throw InvalidInput("checkpoint: model configuration differs from the requested one (hash " +
                           model_config_hash(parse_model_config(stored)) + " vs " + model_config_hash(config.model) + ")");
    TrainState s = init_state(config);
    torch::serialize::InputArchive model_ar, optim_ar;
    ar.read("model", model_ar);
    ar.read("optimizer", optim_ar);
    s.model->load(model_ar);
    s.optimizer->load(optim_ar);
    c10::IValue iteration;
    ar.read("iteration", iteration);
    s.iteration = iteration.toInt();
    std::istringstream rng(read_string(ar, "rng"));
    rng >> s.rng;
    return s;
}

}  // namespace

ModelConfig read_checkpoint_model(const std::filesystem::path& path) {
    auto ar = open_checkpoint(path);
    return parse_model_config(read_string(ar, "model_config"));
}

Config read_checkpoint_config(const std::filesystem::path& path) {
    auto ar = open_checkpoint(path);
    Config c;
    apply_config_text(c, read_string(ar, "config"), path.string());
    c.model = parse_model_config(read_string(ar, "model_config"));
    return c;
}

TrainState load_checkpoint(const std::filesystem::path& path, const Config& config) {
    auto ar = open_checkpoint(path);
    return restore(ar, config);
}

TrainState load_checkpoint(std::istream& in, const Config& config) {
    torch::serialize::InputArchive ar;
    try {
        ar.load_from(in);
    } catch (const c10::Error&) {
        throw DataError("checkpoint stream unreadable");
    }
    check_format(ar, "<stream>");
    return restore(ar, config);
}

ValidationResult validate(nn::EvDeblurVsr& model, std::span<const SequenceSample> data) {
    torch::NoGradGuard guard;
    ValidationResult r;
    if (data.empty()) return r;
    for (const auto& sample : data) {
        const nn::Batch b = nn::make_batch(sample);
        if (!b.gt.defined()) throw InvalidInput("validate: sample has no ground truth");
        r.psnr += mean_frame_psnr(model->forward(b)[0], b.gt[0]);
        r.bicubic_psnr += mean_frame_psnr(b.bicubic[0], b.gt[0]);
    }
    r.psnr /= static_cast<double>(data.size());
    r.bicubic_psnr /= static_cast<double>(data.size());
    return r;
}

void fit(TrainState& state, const Config& config, std::span<const SequenceSample> train,
         std::span<const SequenceSample> val, const FitOptions& options) {
    const TrainConfig& cfg = config.train;
    if (train.empty()) throw InvalidInput("fit: empty training set");
    const auto save = [&](bool periodic) {
        if (options.out_dir.empty()) return;
        if (periodic) {
            char name[64];
            std::snprintf(name, sizeof(name), "ckpt_%08lld.pt", static_cast<long long>(state.iteration));
            save_checkpoint(options.out_dir / name, state, config);
        }
        save_checkpoint(options.out_dir / "latest.pt", state, config);
    };
    if (state.iteration == 0 && cfg.total_iters > 0) flow_prefit(state, train, cfg);
    while (state.iteration < cfg.total_iters) {
        if (options.stop_after >= 0 && state.iteration >= options.stop_after) {
            save(true);
            return;
        }
        const std::int64_t iter = state.iteration;
        const double lr = cosine_lr(iter, cfg.total_iters, cfg.base_lr, cfg.lr_min);
        const auto start = std::chrono::steady_clock::now();
        const nn::Batch batch = sample_batch(train, cfg, state.rng);
        const LossBreakdown loss = train_step(state, batch, cfg);
        const double wall =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        if (options.log && (iter % cfg.log_every == 0 || state.iteration == cfg.total_iters)) {
            char line[256];
            std::snprintf(line, sizeof(line), "%lld, %.9g, %.9g, %.9g, %.9g, %.1f\n", static_cast<long long>(iter), lr,
                          loss.l_r, loss.l_e, loss.total, wall);
            *options.log << line << std::flush;
        }
        const bool last = state.iteration == cfg.total_iters;
        if (options.val_log && !val.empty() && (state.iteration % cfg.validate_every == 0 || last)) {
            const auto v = validate(state.model, val);
            char line[128];
            std::snprintf(line, sizeof(line), "%lld, %.6f, %.6f\n", static_cast<long long>(state.iteration), v.psnr,
                          v.bicubic_psnr);
            *options.val_log << line << std::flush;
        }
        if (state.iteration % cfg.checkpoint_every == 0 && !last) save(true);
    }
    save(true);
}

}  // namespace evdvsr::training
