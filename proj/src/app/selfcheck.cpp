#include "evdvsr/app/selfcheck.hpp"

#include "evdvsr/app/cli.hpp"
#include "evdvsr/events.hpp"
#include "evdvsr/metrics.hpp"
#include "evdvsr/resize.hpp"
#include "evdvsr/synthetic.hpp"
#include "evdvsr/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <numeric>
#include <ostream>
#include <random>

namespace evdvsr::app {

namespace {

namespace F = torch::nn::functional;
using events::Event;

PropertyResult bounded(double measured, double tolerance) { return {"", measured, tolerance, measured <= tolerance, ""}; }

// A property that only reports success or failure.
PropertyResult holds(bool ok) { return {"", ok ? 0.0 : 1.0, 0.0, ok, ""}; }

std::vector<Event> random_events(std::mt19937_64& rng, std::size_t count, std::int64_t t0, std::int64_t t1, int w,
                                 int h) {
    std::uniform_int_distribution<std::int64_t> dt(t0, t1);
    std::uniform_int_distribution<int> dx(0, w - 1), dy(0, h - 1), dp(0, 1);
    std::vector<Event> out(count);
    for (auto& e : out) {
        e.t = dt(rng);
        e.x = static_cast<std::uint16_t>(dx(rng));
        e.y = static_cast<std::uint16_t>(dy(rng));
        e.p = dp(rng) ? 1 : -1;
    }
    std::sort(out.begin(), out.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
    return out;
}

Image random_image(std::mt19937_64& rng, int c, int h, int w) {
    std::uniform_real_distribution<float> d(0.0f, 1.0f);
    Image img(c, h, w);
    for (float& v : img.data) v = d(rng);
    return img;
}

// Smooth moving texture, so the flow-based metrics have something to track.
std::vector<Image> moving_clip(int frames, double shift, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, 6.28);
    const double p1 = phase(rng), p2 = phase(rng);
    std::vector<Image> out;
    for (int t = 0; t < frames; ++t) {
        Image img(3, 32, 32);
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < 32; ++y)
                for (int x = 0; x < 32; ++x) {
                    const double u = x - shift * t;
                    img.at(c, y, x) = static_cast<float>(0.5 + 0.2 * std::sin(0.45 * u + 0.3 * y + p1 + c) +
                                                         0.2 * std::cos(0.2 * u - 0.5 * y + p2));
                }
        out.push_back(img);
    }
    return out;
}

ModelConfig tiny_model() {
    ModelConfig m;
    m.channels = 8;
    m.residual_blocks = 1;
    m.attention_heads = 2;
    m.dcn_groups = 2;
    m.flow_channels = 8;
    return m;
}

nn::Batch random_batch(int64_t t, int64_t h, int64_t w, const ModelConfig& m, torch::ScalarType dtype) {
    const auto opt = torch::TensorOptions().dtype(dtype);
    nn::Batch b;
    b.frames = torch::rand({1, t, 3, h, w}, opt);
    b.intra = torch::randn({1, t, m.voxel_bins, h, w}, opt);
    b.fwd = torch::randn({1, t - 1, m.voxel_bins, h, w}, opt);
    b.bwd = torch::randn({1, t - 1, m.voxel_bins, h, w}, opt);
    b.bicubic = torch::rand({1, t, 3, h * m.scale, w * m.scale}, opt);
    b.gt = torch::rand({1, t, 3, h * m.scale, w * m.scale}, opt);
    b.masks = torch::rand({1, t, 3, h * m.scale, w * m.scale}, opt);
    return b;
}

void perturb(torch::nn::Module& module, double scale, std::uint64_t seed) {
    torch::manual_seed(seed);
    torch::NoGradGuard guard;
    for (auto& p : module.parameters()) p.add_(torch::randn_like(p) * scale);
}

double max_abs(const torch::Tensor& t) { return t.abs().max().item<double>(); }

// ---- events ----

PropertyResult voxel_mass() {
    std::mt19937_64 rng(101);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const auto ev = random_events(rng, 1000, 0, 10000, 16, 12);
        const auto grid = events::voxelize(ev, {0.0, 10000.0}, 5, 16, 12);
        double polarity = 0.0;
        for (const auto& e : ev) polarity += e.p;
        worst = std::max(worst, std::abs(grid.total() - polarity));
    }
    return bounded(worst, 1e-5);
}

PropertyResult voxel_oracle() {
    std::mt19937_64 rng(102);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const int bins = 2 + trial % 5;
        const auto ev = random_events(rng, 2000, 500, 9000, 9, 7);
        const auto grid = events::voxelize(ev, {500.0, 9000.0}, bins, 9, 7);
        std::vector<double> dense(static_cast<std::size_t>(bins) * 63, 0.0);
        for (const auto& e : ev) {
            const double ts = (bins - 1) * (static_cast<double>(e.t) - 500.0) / 8500.0;
            for (int b = 0; b < bins; ++b)
                dense[(static_cast<std::size_t>(b) * 7 + e.y) * 9 + e.x] += e.p * std::max(0.0, 1.0 - std::abs(b - ts));
        }
        for (std::size_t i = 0; i < dense.size(); ++i) worst = std::max(worst, std::abs(dense[i] - grid.data[i]));
    }
    return bounded(worst, 1e-5);
}

PropertyResult reversal_involution() {
    std::mt19937_64 rng(103);
    bool ok = true;
    for (int trial = 0; trial < 10; ++trial) {
        const auto ev = random_events(rng, 500, 0, 4000, 8, 8);
        const auto grid = events::voxelize(ev, {0.0, 4000.0}, 5, 8, 8);
        ok = ok && events::reverse_voxel_grid(events::reverse_voxel_grid(grid)).data == grid.data;
        const auto twice = events::reverse_events(events::reverse_events(ev, 0, 4000), 0, 4000);
        ok = ok && events::voxelize(twice, {0.0, 4000.0}, 5, 8, 8).data == grid.data;
    }
    return holds(ok);
}

PropertyResult polarity_symmetry() {
    std::mt19937_64 rng(104);
    std::normal_distribution<double> d(0.0, 0.4);
    std::vector<std::vector<double>> up, down;
    std::vector<std::int64_t> ts;
    for (int f = 0; f < 6; ++f) {
        std::vector<double> frame(48);
        for (double& v : frame) v = d(rng);
        up.push_back(frame);
        for (double& v : frame) v = -v;
        down.push_back(frame);
        ts.push_back(f * 1000);
    }
    const auto a = events::simulate_events_log(up, 8, 6, ts, 0.15);
    const auto b = events::simulate_events_log(down, 8, 6, ts, 0.15);
    bool ok = !a.events.empty() && a.events.size() == b.events.size();
    for (std::size_t i = 0; ok && i < a.events.size(); ++i) {
        const Event &x = a.events[i], &y = b.events[i];
        ok = x.x == y.x && x.y == y.y && x.t == y.t && x.p == -y.p;
    }
    return holds(ok);
}

PropertyResult segment_partition() {
    std::mt19937_64 rng(105);
    events::EventStream stream;
    stream.width = 6;
    stream.height = 5;
    stream.events = random_events(rng, 3000, 0, 20000, 6, 5);
    stream.t_min = 0;
    stream.t_max = 20000;
    std::vector<events::ExposureWindow> exposures;
    for (int t = 0; t < 5; ++t) exposures.push_back({t * 4000 + 300, t * 4000 + 2900, t});
    const auto seg = events::segment_events(stream, exposures);
    const double first = exposures.front().midpoint(), last = exposures.back().midpoint();
    std::size_t expected = 0, got = 0;
    for (const auto& e : stream.events) expected += e.t > first && e.t <= last;
    bool ok = true;
    for (std::size_t i = 0; i < seg.inter.size(); ++i) {
        got += seg.inter[i].size();
        for (const auto& e : seg.inter[i])
            ok = ok && e.t > exposures[i].midpoint() && e.t <= exposures[i + 1].midpoint();
    }
    return holds(ok && got == expected);
}

PropertyResult blur_permutation() {
    std::mt19937_64 rng(106);
    std::vector<Image> frames;
    for (int i = 0; i < 9; ++i) frames.push_back(random_image(rng, 3, 8, 8));
    const Image ref = events::synthesize_blur(frames);
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        std::shuffle(frames.begin(), frames.end(), rng);
        const Image b = events::synthesize_blur(frames);
        for (std::size_t i = 0; i < b.data.size(); ++i) worst = std::max(worst, double(std::abs(b.data[i] - ref.data[i])));
    }
    return bounded(worst, 1e-6);
}

// ---- model ----

PropertyResult identity_at_init() {
    SyntheticOptions so;
    so.hr_height = 64;
    so.hr_width = 64;
    so.sharp_per_exposure_min = 4;
    so.sharp_per_exposure_max = 6;
    const auto clip = generate_synthetic_clip(3, so, 107);
    const auto sample = build_sequence_sample(clip.frames, clip.plan, 3, {4, 5, {}});
    torch::manual_seed(107);
    nn::EvDeblurVsr model(tiny_model());
    torch::NoGradGuard guard;
    const auto out = model(nn::make_batch(sample));
    double worst = 0.0;
    for (int t = 0; t < 3; ++t) {
        const auto ref = nn::image_to_tensor(upsample_bicubic(sample.blurry_lr[static_cast<std::size_t>(t)], 4));
        worst = std::max(worst, max_abs(out[0][t] - ref));
    }
    return bounded(worst, 0.0);
}

PropertyResult softmax_sums() {
    torch::manual_seed(108);
    nn::ChannelAttentionBlock cab(16, 4);
    nn::CrossModalAttention cross(16, 4, 2);
    nn::Ega ega(16);
    perturb(*cab, 0.5, 1);
    perturb(*cross, 0.5, 2);
    perturb(*ega, 0.5, 3);
    torch::NoGradGuard guard;
    const auto x = torch::randn({2, 16, 6, 6}), y = torch::randn({2, 16, 6, 6});
    torch::Tensor a, b, s;
    cab->forward(x, &a);
    cross->forward(x, y, &b);
    ega->forward(x, y, &s);
    const double worst = std::max({max_abs(a.sum(-1) - 1), max_abs(b.sum(-1) - 1), max_abs(s.sum(1) - 1)});
    return bounded(worst, 1e-6);
}

PropertyResult full_model_gradient() {
    torch::manual_seed(109);
    nn::EvDeblurVsr model(tiny_model());
    perturb(*model, 0.05, 110);
    model->to(torch::kDouble);
    const nn::Batch b = random_batch(2, 8, 8, model->config, torch::kDouble);
    TrainConfig cfg;
    const auto loss = [&] { return training::compute_losses(model(b), b, cfg).total; };
    model->zero_grad();
    loss().backward();
    torch::NoGradGuard guard;
    std::vector<std::pair<double, double>> pairs;  // (analytic, numeric) per parameter tensor
    for (auto& p : model->parameters()) {
        const auto dir = torch::randn_like(p);
        const double analytic = p.grad().defined() ? (p.grad() * dir).sum().item<double>() : 0.0;
        constexpr double eps = 1e-6;
        p.add_(dir, eps);
        const double up = loss().item<double>();
        p.add_(dir, -2 * eps);
        const double down = loss().item<double>();
        p.add_(dir, eps);
        pairs.emplace_back(analytic, (up - down) / (2 * eps));
    }
    // Directional derivatives far below the largest one sit at the finite-difference
    // round-off level, so the relative error is floored at 1e-4 of the largest.
    double largest = 0.0;
    for (const auto& [a, n] : pairs) largest = std::max(largest, std::abs(a));
    double worst = 0.0;
    for (const auto& [a, n] : pairs)
        worst = std::max(worst, std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-4 * largest, 1e-300}));
    return bounded(worst, 1e-2);
}

PropertyResult dcn_degeneracy() {
    torch::manual_seed(111);
    const auto x = torch::randn({2, 8, 7, 6}), w = torch::randn({6, 8, 3, 3}), bias = torch::randn({6});
    const auto out = nn::deform_conv3x3(x, torch::zeros({2, 36, 7, 6}), torch::ones({2, 18, 7, 6}), w, bias, 2);
    return bounded(max_abs(out - F::conv2d(x, w, F::Conv2dFuncOptions().bias(bias).padding(1))), 1e-5);
}

PropertyResult warp_identity() {
    torch::manual_seed(112);
    const auto f = torch::randn({2, 5, 9, 7});
    return bounded(max_abs(nn::backward_warp(f, torch::zeros({2, 2, 9, 7})) - f), 0.0);
}

PropertyResult ega_zero_voxel() {
    torch::manual_seed(113);
    nn::Ega ega(16);
    const auto h = torch::randn({1, 16, 5, 5});
    torch::NoGradGuard guard;
    return bounded(max_abs(ega(h, torch::zeros_like(h)) - h), 0.0);
}

PropertyResult determinism() {
    torch::manual_seed(114);
    nn::EvDeblurVsr model(tiny_model());
    perturb(*model, 0.05, 115);
    const auto b = random_batch(3, 8, 8, model->config, torch::kFloat);
    torch::NoGradGuard guard;
    return holds(torch::equal(model(b), model(b)));
}

PropertyResult causality() {
    torch::manual_seed(116);
    nn::EvDeblurVsr model(tiny_model());
    perturb(*model, 0.05, 117);
    auto b = random_batch(4, 8, 8, model->config, torch::kFloat);
    torch::NoGradGuard guard;
    const auto before = model->propagate_forward(model->encode(b), nullptr)[0];
    const auto full_before = model(b).select(1, 0);
    b.frames = b.frames.clone();
    b.frames.select(1, 3).uniform_();
    const auto after = model->propagate_forward(model->encode(b), nullptr)[0];
    const auto full_after = model(b).select(1, 0);
    return holds(torch::equal(before, after) && !torch::equal(full_before, full_after));
}

PropertyResult dcn_offset_bound(const FaultInjection& faults) {
    torch::manual_seed(118);
    nn::HdaOptions o;
    o.channels = 8;
    o.groups = 2;
    o.offset_clamp = 4.0;
    o.break_clamp = faults.dcn_clamp;
    nn::Hda hda(o);
    {
        torch::NoGradGuard guard;
        hda->cond_out->weight.normal_(0.0, 3.0);
    }
    const auto flow = torch::randn({2, 2, 6, 6}) * 5;
    nn::HdaTrace trace;
    torch::NoGradGuard guard;
    hda->forward(torch::randn({2, 8, 6, 6}), torch::randn({2, 8, 6, 6}), flow, torch::randn({2, 8, 6, 6}),
                 torch::randn({2, 8, 6, 6}), &trace);
    const auto expanded = flow.view({2, 1, 1, 2, 6, 6}).expand({2, 2, 9, 2, 6, 6}).reshape({2, 36, 6, 6});
    return bounded(max_abs(trace.offsets - expanded), o.offset_clamp);
}

// ---- training ----

PropertyResult le_monotone() {
    torch::manual_seed(119);
    const auto pred = torch::rand({1, 2, 3, 6, 6}, torch::kDouble), gt = torch::rand({1, 2, 3, 6, 6}, torch::kDouble);
    auto mask = torch::rand({1, 2, 3, 6, 6}, torch::kDouble) * 0.5;
    double prev = training::loss_e(pred, gt, mask, 1e-8).item<double>();
    double worst_drop = 0.0;
    for (int i = 0; i < mask.numel(); i += 3) {
        mask.view({-1})[i] += 0.3;
        const double now = training::loss_e(pred, gt, mask, 1e-8).item<double>();
        worst_drop = std::max(worst_drop, prev - now);
        prev = now;
    }
    return bounded(worst_drop, 0.0);
}

PropertyResult le_l1_limit() {
    torch::manual_seed(120);
    const auto pred = torch::rand({1, 2, 3, 6, 6}, torch::kDouble) + 0.01;
    const auto gt = -torch::rand({1, 2, 3, 6, 6}, torch::kDouble);
    const auto mask = torch::rand({1, 2, 3, 6, 6}, torch::kDouble);
    const double le = training::loss_e(pred, gt, mask, 1e-8).item<double>();
    const double l1 = (mask * (pred - gt).abs()).mean().item<double>();
    return bounded(std::abs(le - l1) / l1, 1e-6);
}

PropertyResult le_gradient() {
    torch::manual_seed(121);
    const auto gt = torch::rand({1, 2, 3, 3, 3}, torch::kDouble);
    const auto sign = torch::randint(0, 2, gt.sizes(), torch::kDouble) * 2 - 1;
    auto pred = (gt + sign * (torch::rand_like(gt) * 0.5 + 1e-3)).requires_grad_(true);
    const auto mask = torch::rand_like(gt);
    training::loss_e(pred, gt, mask, 1e-8).backward();
    const auto analytic = pred.grad().view({-1});
    torch::NoGradGuard guard;
    auto flat = pred.detach().clone();
    auto view = flat.view({-1});
    auto numeric = torch::zeros_like(analytic);
    constexpr double eps = 1e-7;
    for (int64_t i = 0; i < view.numel(); ++i) {
        const double saved = view[i].item<double>();
        view[i] = saved + eps;
        const double up = training::loss_e(flat, gt, mask, 1e-8).item<double>();
        view[i] = saved - eps;
        const double down = training::loss_e(flat, gt, mask, 1e-8).item<double>();
        view[i] = saved;
        numeric[i] = (up - down) / (2 * eps);
    }
    return bounded(max_abs(analytic - numeric) / max_abs(numeric), 1e-4);
}

PropertyResult lr_flip_invariance() {
    torch::manual_seed(122);
    const auto pred = torch::rand({2, 3, 3, 8, 8}, torch::kDouble), gt = torch::rand({2, 3, 3, 8, 8}, torch::kDouble);
    const double base = training::loss_r(pred, gt).item<double>();
    double worst = 0.0;
    for (int64_t dim : {3, 4})
        worst = std::max(worst, std::abs(training::loss_r(pred.flip(dim), gt.flip(dim)).item<double>() - base) / base);
    return bounded(worst, 1e-12);
}

PropertyResult loss_total_dominates() {
    torch::manual_seed(123);
    nn::Batch b;
    b.gt = torch::rand({1, 2, 3, 8, 8});
    b.masks = torch::rand({1, 2, 3, 8, 8});
    const auto pred = torch::rand({1, 2, 3, 8, 8});
    const auto t = training::compute_losses(pred, b, TrainConfig{});
    const double total = t.total.item<double>();
    const bool finite = std::isfinite(total);
    return holds(finite && total >= std::max(t.l_r.item<double>(), t.l_e.item<double>()));
}

PropertyResult checkpoint_roundtrip() {
    Config cfg;
    cfg.model = tiny_model();
    cfg.train.base_lr = 1e-3;
    auto state = training::init_state(cfg);
    const auto b = random_batch(2, 8, 8, cfg.model, torch::kFloat);
    training::train_step(state, b, cfg.train);
    std::stringstream buffer;
    training::save_checkpoint(buffer, state, cfg);
    auto loaded = training::load_checkpoint(buffer, cfg);
    bool ok = loaded.iteration == state.iteration;
    auto src = state.model->named_parameters();
    for (const auto& item : loaded.model->named_parameters()) ok = ok && torch::equal(item.value(), src[item.key()]);
    // Adam moments: one more identical step must stay bitwise equal.
    training::train_step(state, b, cfg.train);
    training::train_step(loaded, b, cfg.train);
    src = state.model->named_parameters();
    for (const auto& item : loaded.model->named_parameters()) ok = ok && torch::equal(item.value(), src[item.key()]);
    return holds(ok);
}

// ---- metrics ----

PropertyResult metric_symmetry() {
    std::mt19937_64 rng(124);
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
        const Image a = random_image(rng, 3, 16, 16), b = random_image(rng, 3, 16, 16);
        worst = std::max(worst, std::abs(metrics::psnr(a, b).db - metrics::psnr(b, a).db));
        worst = std::max(worst, std::abs(metrics::ssim(a, b) - metrics::ssim(b, a)));
    }
    return bounded(worst, 1e-9);
}

PropertyResult temporal_identity() {
    const auto clip = moving_clip(4, 1.0, 125);
    const double t_of = metrics::tof(clip, clip), t_cc = metrics::tcc(clip, clip);
    return bounded(std::max(std::abs(t_of), std::abs(t_cc - 1.0)), 1e-9);
}

PropertyResult metric_flip_invariance() {
    const auto gt = moving_clip(3, 1.0, 126);
    std::mt19937_64 rng(127);
    std::normal_distribution<float> noise(0.0f, 0.03f);
    std::vector<Image> pred, gt_f, pred_f;
    for (const auto& f : gt) {
        Image p = f;
        for (float& v : p.data) v += noise(rng);
        pred.push_back(p);
        gt_f.push_back(flip_horizontal(f));
        pred_f.push_back(flip_horizontal(p));
    }
    const auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-12); };
    const double worst = std::max({rel(metrics::psnr(pred_f[0], gt_f[0]).db, metrics::psnr(pred[0], gt[0]).db),
                                   rel(metrics::ssim(pred_f[1], gt_f[1]), metrics::ssim(pred[1], gt[1])),
                                   rel(metrics::tof(pred_f, gt_f), metrics::tof(pred, gt)),
                                   rel(metrics::tcc(pred_f, gt_f), metrics::tcc(pred, gt))});
    return bounded(worst, 1e-3);
}

PropertyResult aggregation_mean() {
    metrics::MetricReport report;
    std::mt19937_64 rng(128);
    std::uniform_real_distribution<double> d(20.0, 40.0);
    double sum = 0.0;
    for (int i = 0; i < 5; ++i) {
        metrics::ClipMetrics c;
        c.clip = "c" + std::to_string(i);
        c.frames = 3 + 7 * i;
        c.psnr = d(rng);
        sum += c.psnr;
        report.clips.push_back(c);
    }
    return bounded(std::abs(report.aggregate().psnr - sum / 5), 1e-12);
}

// ---- cli ----

PropertyResult config_precedence() {
    const Config c = resolve_config_text("train.base_lr = 0.5\ntrain.crop_size = 32\n", {"train.crop_size=16"}, "77");
    const Config d;
    return holds(c.train.base_lr == 0.5 && c.train.crop_size == 16 && c.train.seed == 77 &&
                 c.train.batch_size == d.train.batch_size);
}

template <PropertyResult (*Fn)()>
PropertyResult plain(const FaultInjection&) {
    return Fn();
}

}  // namespace

const std::vector<Property>& registered_properties() {
    static const std::vector<Property> registry = {
        {"events.voxel_mass_conservation", plain<voxel_mass>},
        {"events.voxel_bruteforce_oracle", plain<voxel_oracle>},
        {"events.time_reversal_involution", plain<reversal_involution>},
        {"events.simulator_polarity_symmetry", plain<polarity_symmetry>},
        {"events.inter_slices_partition", plain<segment_partition>},
        {"events.blur_permutation_invariance", plain<blur_permutation>},
        {"model.identity_at_init", plain<identity_at_init>},
        {"model.softmax_normalization", plain<softmax_sums>},
        {"model.full_gradient_check", plain<full_model_gradient>},
        {"model.dcn_zero_offset_is_conv", plain<dcn_degeneracy>},
        {"model.zero_flow_warp_identity", plain<warp_identity>},
        {"model.ega_zero_voxel_identity", plain<ega_zero_voxel>},
        {"model.forward_determinism", plain<determinism>},
        {"model.forward_sweep_causality", plain<causality>},
        {"model.dcn_offset_bound", dcn_offset_bound},
        {"training.le_monotone_in_mask", plain<le_monotone>},
        {"training.le_l1_limit", plain<le_l1_limit>},
        {"training.le_gradient_check", plain<le_gradient>},
        {"training.lr_flip_invariance", plain<lr_flip_invariance>},
        {"training.total_dominates_terms", plain<loss_total_dominates>},
        {"training.checkpoint_roundtrip", plain<checkpoint_roundtrip>},
        {"metrics.symmetry", plain<metric_symmetry>},
        {"metrics.temporal_identity", plain<temporal_identity>},
        {"metrics.flip_invariance", plain<metric_flip_invariance>},
        {"metrics.aggregate_is_mean", plain<aggregation_mean>},
        {"cli.config_precedence", plain<config_precedence>},
    };
    return registry;
}

std::string format_result(const PropertyResult& r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s %s measured=%.3g tol=%.3g margin=%.3g", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                  r.measured, r.tolerance, r.tolerance - r.measured);
    return r.error.empty() ? std::string(buf) : std::string(buf) + " error: " + r.error;
}

std::vector<PropertyResult> run_selfcheck(const FaultInjection& faults, std::ostream& out) {
    std::vector<PropertyResult> results;
    for (const auto& p : registered_properties()) {
        PropertyResult r;
        try {
            r = p.run(faults);
        } catch (const std::exception& e) {
            r = {"", std::numeric_limits<double>::infinity(), 0.0, false, e.what()};
        }
        r.name = p.name;
        results.push_back(r);
        out << format_result(r) << "\n" << std::flush;
    }
    return results;
}

}  // namespace evdvsr::app
