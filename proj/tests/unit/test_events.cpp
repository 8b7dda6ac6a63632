#include "evdvsr/error.hpp"
#include "evdvsr/event_io.hpp"
#include "evdvsr/events.hpp"
#include "evdvsr/resize.hpp"
#include "evdvsr/sequence.hpp"
#include "evdvsr/synthetic.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

using namespace evdvsr;
using namespace evdvsr::events;

namespace {

Image gray(int h, int w, float v) { return Image(1, h, w, v); }

// Bright 4x4 square on black, moved `shift` px to the right.
Image square_frame(int size, int shift) {
    Image img(1, size, size, 0.0f);
    for (int y = 6; y < 10; ++y)
        for (int x = 4 + shift; x < 8 + shift; ++x) img.at(0, y, x) = 1.0f;
    return img;
}

std::vector<std::int64_t> stamps(int n, std::int64_t step = 1000) {
    std::vector<std::int64_t> ts(n);
    for (int i = 0; i < n; ++i) ts[i] = i * step;
    return ts;
}

}  // namespace

TEST_SUITE("simulate_events") {
    TEST_CASE("constant sequence emits nothing") {
        std::vector<Image> frames(5, gray(8, 8, 0.4f));
        CHECK(simulate_events(frames, stamps(5)).events.empty());
    }

    TEST_CASE("a 2.5 threshold log step emits two positive events") {
        const double theta = 0.15, eps = 1e-3;
        const float i0 = 0.2f;
        const float i1 = static_cast<float>(std::exp(std::log(i0 + eps) + 2.5 * theta) - eps);
        std::vector<Image> frames{gray(1, 1, i0), gray(1, 1, i1)};
        const auto stream = simulate_events(frames, stamps(2), {theta, eps});
        REQUIRE(stream.events.size() == 2);
        for (const auto& e : stream.events) {
            CHECK(e.p == 1);
            CHECK(e.x == 0);
            CHECK(e.y == 0);
        }
        // the brute-force crossing walk agrees
        const auto [pos, neg] = oracle::count_crossings({std::log(i0 + eps), std::log(double(i1) + eps)}, theta);
        CHECK(pos == 2);
        CHECK(neg == 0);
        // crossing times are interpolated: 1/2.5 and 2/2.5 of the interval
        CHECK(stream.events[0].t == 400);
        CHECK(stream.events[1].t == 800);
    }

    TEST_CASE("moving square fires only on its leading and trailing edges") {
        std::vector<Image> frames;
        for (int k = 0; k < 4; ++k) frames.push_back(square_frame(16, k));
        const auto stream = simulate_events(frames, stamps(4));
        REQUIRE(!stream.events.empty());
        // per-pixel oracle: a pixel may fire only if its value changes between some consecutive frames
        for (const auto& e : stream.events) {
            bool changes = false;
            for (int k = 1; k < 4; ++k) changes |= frames[k].at(0, e.y, e.x) != frames[k - 1].at(0, e.y, e.x);
            CHECK(changes);
            if (e.p > 0) CHECK(e.x >= 8);   // leading edge brightens
            else CHECK(e.x <= 6);           // trailing edge darkens
        }
        // interior columns 7 (covered in all frames) never fire
        CHECK(std::none_of(stream.events.begin(), stream.events.end(), [](const Event& e) { return e.x == 7; }));
        CHECK(std::is_sorted(stream.events.begin(), stream.events.end(),
                             [](const Event& a, const Event& b) { return a.t < b.t; }));
    }

    TEST_CASE("event counts match a sub-sampled crossing walk on random traces") {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> d(-2.0, 0.0);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<std::vector<double>> logs;
            std::vector<double> trace;
            for (int k = 0; k < 6; ++k) {
                trace.push_back(d(rng));
                logs.push_back({trace.back()});
            }
            const auto stream = simulate_events_log(logs, 1, 1, stamps(6), 0.15);
            const auto [pos, neg] = oracle::count_crossings(trace, 0.15);
            const auto n_pos = std::count_if(stream.events.begin(), stream.events.end(), [](auto& e) { return e.p > 0; });
            CHECK(n_pos == pos);
            CHECK(static_cast<int>(stream.events.size()) - n_pos == neg);
        }
    }

    TEST_CASE("negating log intensity negates polarity and keeps x, y, t") {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> d(-3.0, 0.0);
        std::vector<std::vector<double>> logs(5, std::vector<double>(36)), neg(5, std::vector<double>(36));
        for (int k = 0; k < 5; ++k)
            for (int i = 0; i < 36; ++i) {
                logs[k][i] = d(rng);
                neg[k][i] = -logs[k][i];
            }
        const auto a = simulate_events_log(logs, 6, 6, stamps(5), 0.2);
        const auto b = simulate_events_log(neg, 6, 6, stamps(5), 0.2);
        REQUIRE(a.events.size() == b.events.size());
        for (std::size_t i = 0; i < a.events.size(); ++i) {
            CHECK(a.events[i].x == b.events[i].x);
            CHECK(a.events[i].y == b.events[i].y);
            CHECK(a.events[i].t == b.events[i].t);
            CHECK(a.events[i].p == -b.events[i].p);
        }
    }

    TEST_CASE("invalid inputs") {
        std::vector<Image> one{gray(2, 2, 0.5f)};
        CHECK_THROWS_AS(simulate_events(one, stamps(1)), InvalidInput);
        std::vector<Image> two{gray(2, 2, 0.5f), gray(2, 2, 0.6f)};
        CHECK_THROWS_AS(simulate_events(two, stamps(2), {0.0, 1e-3}), InvalidInput);
        CHECK_THROWS_AS(simulate_events(two, stamps(2), {-0.1, 1e-3}), InvalidInput);
    }
}

TEST_SUITE("synthesize_blur") {
    TEST_CASE("identical frames average to themselves") {
        std::mt19937_64 rng(1);
        const Image f = oracle::random_image(rng, 3, 5, 7);
        std::vector<Image> frames(6, f);
        CHECK(synthesize_blur(frames).data == f.data);
    }

    TEST_CASE("black and white average to mid grey") {
        std::vector<Image> frames{Image(3, 4, 4, 0.0f), Image(3, 4, 4, 1.0f)};
        const Image m = synthesize_blur(frames);
        CHECK(std::all_of(m.data.begin(), m.data.end(), [](float v) { return v == 0.5f; }));
    }

    TEST_CASE("moving edge gives a ramp equal to the direct mean") {
        std::vector<Image> frames;
        for (int k = 0; k < 7; ++k) {
            Image f(1, 1, 20, 0.0f);
            for (int x = 0; x < 6 + k; ++x) f.at(0, 0, x) = 1.0f;
            frames.push_back(f);
        }
        const Image blur = synthesize_blur(frames);
        for (int x = 0; x < 20; ++x) {
            double direct = 0.0;
            for (const auto& f : frames) direct += f.at(0, 0, x);
            CHECK(blur.at(0, 0, x) == doctest::Approx(direct / 7.0).epsilon(1e-7));
        }
        // ramp across the blur extent: monotone non-increasing, 1 before the edge, 0 after
        for (int x = 1; x < 20; ++x) CHECK(blur.at(0, 0, x) <= blur.at(0, 0, x - 1));
        CHECK(blur.at(0, 0, 5) == 1.0f);
        CHECK(blur.at(0, 0, 12) == 0.0f);
        CHECK(blur.at(0, 0, 8) == doctest::Approx(4.0 / 7.0));
    }

    TEST_CASE("permutation invariant") {
        std::mt19937_64 rng(3);
        std::vector<Image> frames;
        for (int k = 0; k < 9; ++k) frames.push_back(oracle::random_image(rng, 3, 6, 6));
        const Image a = synthesize_blur(frames);
        for (int trial = 0; trial < 5; ++trial) {
            std::shuffle(frames.begin(), frames.end(), rng);
            CHECK(synthesize_blur(frames).data == a.data);
        }
    }

    TEST_CASE("empty input") { CHECK_THROWS_AS(synthesize_blur(std::span<const Image>{}), InvalidInput); }
}

TEST_SUITE("downsample_bicubic") {
    TEST_CASE("constant frames stay constant") {
        const Image img(3, 32, 48, 0.37f);
        const Image out = downsample_bicubic(img, 4);
        CHECK(out.height == 8);
        CHECK(out.width == 12);
        for (float v : out.data) CHECK(v == doctest::Approx(0.37f).epsilon(1e-6));
    }

    TEST_CASE("factor one is the identity") {
        std::mt19937_64 rng(5);
        const Image img = oracle::random_image(rng, 3, 9, 13);
        CHECK(downsample_bicubic(img, 1).data == img.data);
        CHECK(resize_bicubic(img, 9, 13).data == img.data);
    }

    TEST_CASE("bilinear ramp is reproduced in the interior") {
        const int n = 64, s = 4;
        Image img(1, n, n);
        const auto ramp = [](double y, double x) { return 0.1 + 0.006 * x + 0.004 * y + 0.00005 * x * y; };
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) img.at(0, y, x) = static_cast<float>(ramp(y, x));
        const Image out = downsample_bicubic(img, s);
        double worst = 0.0;
        // kernel support is 8 HR px on each side: skip 2 LR px at the borders
        for (int y = 2; y < n / s - 2; ++y)
            for (int x = 2; x < n / s - 2; ++x) {
                const double cy = (y + 0.5) * s - 0.5, cx = (x + 0.5) * s - 0.5;
                worst = std::max(worst, std::abs(out.at(0, y, x) - ramp(cy, cx)));
            }
        CHECK(worst < 1e-3);
    }

    TEST_CASE("non-divisible shapes are rejected") {
        CHECK_THROWS_AS(downsample_bicubic(Image(3, 30, 32), 4), InvalidInput);
    }

    TEST_CASE("kernel values") {
        CHECK(cubic_kernel(0.0) == 1.0);
        CHECK(cubic_kernel(1.0) == 0.0);
        CHECK(cubic_kernel(2.0) == 0.0);
        CHECK(cubic_kernel(0.5) == doctest::Approx(0.5625));
        CHECK(cubic_kernel(1.5) == doctest::Approx(-0.0625));
    }
}

TEST_SUITE("segment_events") {
    const std::vector<ExposureWindow> windows{{0, 1000, 0}, {2000, 3000, 1}, {4000, 5000, 2}};

    EventStream stream_of(std::vector<Event> ev) {
        EventStream s;
        s.width = 4;
        s.height = 4;
        s.t_min = 0;
        s.t_max = 10000;
        s.events = std::move(ev);
        return s;
    }

    TEST_CASE("events outside all intervals leave every slice empty") {
        const auto seg = segment_events(stream_of({{0, 0, 5001, 1}, {1, 1, 9000, -1}}), windows);
        for (const auto& s : seg.intra) CHECK(s.empty());
        for (const auto& s : seg.inter) CHECK(s.empty());
    }

    TEST_CASE("an event at an exposure midpoint closes the inter slice on its right") {
        // midpoint of exposure 1 is 2500
        const auto seg = segment_events(stream_of({{1, 2, 2500, 1}}), windows);
        CHECK(seg.intra[1].size() == 1);
        CHECK(seg.inter[0].size() == 1);  // (500, 2500]
        CHECK(seg.inter[1].empty());      // (2500, 4500]
        CHECK(seg.intra[0].empty());
    }

    TEST_CASE("uniform events split proportionally to interval lengths") {
        std::mt19937_64 rng(9);
        const std::vector<ExposureWindow> two{{0, 3000, 0}, {5000, 9000, 1}};
        const auto ev = oracle::random_events(rng, 0, 0, 0, 4, 4);
        std::vector<Event> uniform;
        for (std::int64_t t = 0; t <= 10000; ++t) uniform.push_back({0, 0, t, 1});
        const auto seg = segment_events(stream_of(uniform), two);
        CHECK(std::abs(static_cast<long>(seg.intra[0].size()) - 3001) <= 1);
        CHECK(std::abs(static_cast<long>(seg.intra[1].size()) - 4001) <= 1);
        CHECK(std::abs(static_cast<long>(seg.inter[0].size()) - (7000 - 1500)) <= 1);
    }

    TEST_CASE("inter slices partition (mid_0, mid_last] and match a counting oracle") {
        std::mt19937_64 rng(21);
        const auto ev = oracle::random_events(rng, 3000, 0, 6000, 4, 4);
        const auto seg = segment_events(stream_of(ev), windows);
        std::size_t inside = 0;
        for (const auto& e : ev) {
            const double t = static_cast<double>(e.t);
            int memberships = 0;
            for (std::size_t k = 0; k < seg.inter_windows.size(); ++k)
                memberships += seg.inter_windows[k].begin < t && t <= seg.inter_windows[k].end;
            if (t > windows.front().midpoint() && t <= windows.back().midpoint()) {
                CHECK(memberships == 1);
                ++inside;
            } else {
                CHECK(memberships == 0);
            }
        }
        std::size_t assigned = 0;
        for (const auto& s : seg.inter) assigned += s.size();
        CHECK(assigned == inside);
        for (std::size_t k = 0; k < windows.size(); ++k) {
            const auto expected = std::count_if(ev.begin(), ev.end(), [&](const Event& e) {
                return windows[k].t_start <= e.t && e.t <= windows[k].t_end;
            });
            CHECK(static_cast<long>(seg.intra[k].size()) == expected);
        }
    }

    TEST_CASE("overlapping or unordered exposures are rejected") {
        const std::vector<ExposureWindow> overlap{{0, 1000, 0}, {900, 2000, 1}};
        CHECK_THROWS_AS(segment_events(stream_of({}), overlap), InvalidInput);
        const std::vector<ExposureWindow> backwards{{2000, 3000, 0}, {0, 1000, 1}};
        CHECK_THROWS_AS(segment_events(stream_of({}), backwards), InvalidInput);
    }
}

TEST_SUITE("voxelize") {
    TEST_CASE("empty slice gives a zero grid") {
        const auto g = voxelize({}, {0, 100}, 5, 4, 3);
        CHECK(g.data.size() == 60);
        CHECK(std::all_of(g.data.begin(), g.data.end(), [](float v) { return v == 0.0f; }));
    }

    TEST_CASE("event at the window start lands in bin 0") {
        const std::vector<Event> ev{{2, 1, 1000, 1}};
        const auto g = voxelize(ev, {1000, 2000}, 5, 4, 3);
        CHECK(g.at(0, 1, 2) == 1.0f);
        CHECK(g.total() == 1.0);
    }

    TEST_CASE("event at 37% of the window splits between bins 1 and 2") {
        const std::vector<Event> ev{{0, 0, 370, 1}};
        const auto g = voxelize(ev, {0, 1000}, 5, 1, 1);
        CHECK(g.at(1, 0, 0) == doctest::Approx(0.52).epsilon(1e-6));
        CHECK(g.at(2, 0, 0) == doctest::Approx(0.48).epsilon(1e-6));
        CHECK(g.at(0, 0, 0) == 0.0f);
        CHECK(g.at(3, 0, 0) == 0.0f);
        const auto dense = oracle::dense_voxels(ev, 0, 1000, 5, 1, 1);
        for (int b = 0; b < 5; ++b) CHECK(g.at(b, 0, 0) == doctest::Approx(dense[b]).epsilon(1e-7));
    }

    TEST_CASE("matches dense accumulation and conserves mass on random streams") {
        std::mt19937_64 rng(42);
        for (int trial = 0; trial < 25; ++trial) {
            const std::size_t n = std::uniform_int_distribution<std::size_t>(0, 10000)(rng);
            const int w = 17, h = 11, bins = std::uniform_int_distribution<int>(1, 7)(rng);
            const auto ev = oracle::random_events(rng, n, 500, 20500, w, h);
            const auto g = voxelize(ev, {500, 20500}, bins, w, h);
            const auto dense = oracle::dense_voxels(ev, 500, 20500, bins, w, h);
            double worst = 0.0;
            for (std::size_t i = 0; i < dense.size(); ++i) worst = std::max(worst, std::abs(g.data[i] - dense[i]));
            CHECK(worst <= 1e-5);
            const double polarity = std::accumulate(ev.begin(), ev.end(), 0.0, [](double a, const Event& e) { return a + e.p; });
            CHECK(std::abs(g.total() - polarity) <= 1e-5);
        }
    }

    TEST_CASE("reverse flag mirrors bins and negates polarity exactly") {
        std::mt19937_64 rng(4);
        const auto ev = oracle::random_events(rng, 500, 0, 999, 6, 5);
        const auto fwd = voxelize(ev, {0, 999}, 5, 6, 5, false, VoxelKind::inter_forward);
        const auto bwd = voxelize(ev, {0, 999}, 5, 6, 5, true, VoxelKind::inter_backward);
        CHECK(reverse_voxel_grid(fwd).data == bwd.data);
        CHECK(reverse_voxel_grid(reverse_voxel_grid(fwd)).data == fwd.data);
        // time-reversing the events twice is also exact
        const auto twice = reverse_events(reverse_events(ev, 0, 999), 0, 999);
        CHECK(voxelize(twice, {0, 999}, 5, 6, 5).data == fwd.data);
        // and a single event-level reversal agrees with the reverse flag up to rounding
        const auto once = voxelize(reverse_events(ev, 0, 999), {0, 999}, 5, 6, 5);
        for (std::size_t i = 0; i < once.data.size(); ++i) CHECK(once.data[i] == doctest::Approx(bwd.data[i]).epsilon(1e-5));
    }

    TEST_CASE("horizontal flip commutes with voxelization") {
        std::mt19937_64 rng(12);
        for (int trial = 0; trial < 10; ++trial) {
            const auto ev = oracle::random_events(rng, 800, 0, 5000, 9, 7);
            const auto a = voxelize(flip_events_horizontal(ev, 9), {0, 5000}, 5, 9, 7);
            const auto b = flip_horizontal(voxelize(ev, {0, 5000}, 5, 9, 7));
            CHECK(a.data == b.data);
        }
    }

    TEST_CASE("zero-length window is rejected") {
        CHECK_THROWS_AS(voxelize({}, {10, 10}, 5, 2, 2), InvalidInput);
        CHECK_THROWS_AS(voxelize({}, {0, 10}, 0, 2, 2), InvalidInput);
    }
}

TEST_SUITE("hr_edge_mask") {
    TEST_CASE("no events gives a zero mask") {
        const Image m = hr_edge_mask({}, {0, 100}, 8, 8);
        CHECK(m.channels == 3);
        CHECK(std::all_of(m.data.begin(), m.data.end(), [](float v) { return v == 0.0f; }));
    }

    TEST_CASE("events at one pixel normalize to one there") {
        const std::vector<Event> ev{{3, 2, 10, -1}, {3, 2, 50, -1}, {3, 2, 90, -1}};
        const Image m = hr_edge_mask(ev, {0, 100}, 4, 5);
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < 4; ++y)
                for (int x = 0; x < 5; ++x) CHECK(m.at(c, y, x) == ((x == 3 && y == 2) ? 1.0f : 0.0f));
    }

    TEST_CASE("mixed polarity follows |signed sum| / max |signed sum|") {
        std::mt19937_64 rng(8);
        const auto ev = oracle::random_events(rng, 400, 0, 1000, 6, 6);
        const Image m = hr_edge_mask(ev, {0, 1000}, 6, 6);
        std::vector<double> sum(36, 0.0);
        for (const auto& e : ev) sum[e.y * 6 + e.x] += e.p;
        double peak = 0.0;
        for (double v : sum) peak = std::max(peak, std::abs(v));
        for (int i = 0; i < 36; ++i)
            for (int c = 0; c < 3; ++c) CHECK(m.data[c * 36 + i] == doctest::Approx(std::abs(sum[i]) / peak).epsilon(1e-5));
    }
}

TEST_SUITE("build_sequence_sample") {
    std::vector<Image> square_clip(int frames, int size, int speed) {
        std::vector<Image> clip;
        for (int k = 0; k < frames; ++k) {
            Image f(3, size, size, 0.2f);
            for (int c = 0; c < 3; ++c)
                for (int y = 8; y < 24; ++y)
                    for (int x = 4 + speed * k; x < 20 + speed * k && x < size; ++x) f.at(c, y, x) = 0.9f;
            clip.push_back(f);
        }
        return clip;
    }

    TEST_CASE("static scene: blurry frames are the downsampled frame, voxels are zero") {
        std::mt19937_64 rng(2);
        const Image still = oracle::random_image(rng, 3, 32, 32);
        ExposurePlan plan{4, 1, 1000};
        std::vector<Image> clip(plan.required_frames(3), still);
        const auto s = build_sequence_sample(clip, plan, 3, {4, 5, {}});
        const Image expected = downsample_bicubic(still, 4);
        for (const auto& f : s.blurry_lr) CHECK(f.data == expected.data);
        for (const auto* group : {&s.intra_voxels, &s.fwd_voxels, &s.bwd_voxels})
            for (const auto& g : *group) CHECK(g.total() == 0.0);
        for (const auto& m : s.edge_masks) CHECK(std::all_of(m.data.begin(), m.data.end(), [](float v) { return v == 0.0f; }));
    }

    TEST_CASE("two-frame moving square has the documented shapes") {
        ExposurePlan plan{6, 1, 1000};
        const auto clip = square_clip(plan.required_frames(2), 64, 1);
        const auto s = build_sequence_sample(clip, plan, 2, {4, 5, {}});
        CHECK(s.length() == 2);
        CHECK(s.intra_voxels.size() == 2);
        CHECK(s.fwd_voxels.size() == 1);
        CHECK(s.bwd_voxels.size() == 1);
        for (const auto& g : s.intra_voxels) {
            CHECK(g.bins == 5);
            CHECK(g.height == 16);
            CHECK(g.width == 16);
        }
        CHECK(s.sharp_hr[0].height == 64);
        CHECK(s.edge_masks[1].width == 64);
        // moving content produces events inside the exposures
        double activity = 0.0;
        for (float v : s.intra_voxels[0].data) activity += std::abs(v);
        CHECK(activity > 0.0);
        // backward voxels are the forward ones mirrored in bins with negated sign
        CHECK(reverse_voxel_grid(s.fwd_voxels[0]).data == s.bwd_voxels[0].data);
    }

    TEST_CASE("deterministic") {
        const auto clip = generate_synthetic_clip(3, {64, 64, 0.5, 3.0, 4, 6, 1, 3, 4, 1000}, 99);
        const auto a = synthesize_clip(clip.frames, clip.plan, 3, {4, 5, {}});
        const auto b = synthesize_clip(clip.frames, clip.plan, 3, {4, 5, {}});
        CHECK(a.events_lr == b.events_lr);
        CHECK(a.blurry_lr[2].data == b.blurry_lr[2].data);
        const auto again = generate_synthetic_clip(3, {64, 64, 0.5, 3.0, 4, 6, 1, 3, 4, 1000}, 99);
        CHECK(again.frames.back().data == clip.frames.back().data);
    }

    TEST_CASE("short clips are rejected") {
        ExposurePlan plan{6, 1, 1000};
        const auto clip = square_clip(10, 32, 1);
        CHECK_THROWS_AS(build_sequence_sample(clip, plan, 3, {4, 5, {}}), InvalidInput);
    }
}

TEST_SUITE("augmentation") {
    SequenceSample small_sample() {
        const auto clip = generate_synthetic_clip(3, {64, 64, 0.5, 3.0, 4, 6, 1, 3, 4, 1000}, 5);
        return build_sequence_sample(clip.frames, clip.plan, 3, {4, 5, {}});
    }

    TEST_CASE("flipping twice restores the sample") {
        const auto s = small_sample();
        for (bool h : {false, true})
            for (bool v : {false, true}) {
                const auto back = flip(flip(s, h, v), h, v);
                CHECK(back.blurry_lr[1].data == s.blurry_lr[1].data);
                CHECK(back.fwd_voxels[0].data == s.fwd_voxels[0].data);
                CHECK(back.edge_masks[2].data == s.edge_masks[2].data);
                CHECK(back.sharp_hr[0].data == s.sharp_hr[0].data);
            }
    }

    TEST_CASE("HR crop window is scale times the LR window") {
        const auto s = small_sample();
        const auto c = crop(s, 4, 8, 8);
        CHECK(c.blurry_lr[0].width == 8);
        CHECK(c.sharp_hr[0].width == 32);
        CHECK(c.sharp_hr[0].at(1, 0, 0) == s.sharp_hr[0].at(1, 16, 32));
        CHECK(c.edge_masks[0].at(0, 5, 7) == s.edge_masks[0].at(0, 16 + 5, 32 + 7));
        CHECK(c.intra_voxels[1].at(2, 3, 3) == s.intra_voxels[1].at(2, 7, 11));
    }

    TEST_CASE("augment crops to the requested size and is seed-deterministic") {
        const auto s = small_sample();
        std::mt19937_64 r1(3), r2(3);
        const auto a = augment(s, {8, false, 0.5, 0.5}, r1);
        const auto b = augment(s, {8, false, 0.5, 0.5}, r2);
        CHECK(a.blurry_lr[0].width == 8);
        CHECK(a.sharp_hr[0].height == 32);
        CHECK(a.blurry_lr[2].data == b.blurry_lr[2].data);
        std::mt19937_64 r3(3);
        const auto centre = augment(s, {8, true, 0.0, 0.0}, r3);
        CHECK(centre.blurry_lr[0].data == crop(s, 4, 4, 8).blurry_lr[0].data);
    }
}

TEST_SUITE("event files") {
    EventStream random_stream(std::mt19937_64& rng, std::size_t n) {
        EventStream s;
        s.width = 40;
        s.height = 30;
        s.t_min = 123456789;
        s.events = oracle::random_events(rng, n, s.t_min, s.t_min + 5'000'000, 40, 30);
        s.t_max = s.events.empty() ? s.t_min : s.events.back().t;
        return s;
    }

    TEST_CASE("binary and CSV round-trip losslessly on random streams") {
        std::mt19937_64 rng(77);
        for (int trial = 0; trial < 20; ++trial) {
            const auto s = random_stream(rng, std::uniform_int_distribution<std::size_t>(0, 2000)(rng));
            std::stringstream bin;
            write_events_binary(bin, s);
            CHECK(bin.str().size() == kEventHeaderSize + s.events.size() * kEventRecordSize);
            CHECK(read_events_binary(bin) == s);
            std::stringstream csv;
            write_events_csv(csv, s);
            CHECK(read_events_csv(csv) == s);
        }
    }

    TEST_CASE("header layout") {
        EventStream s;
        s.width = 0x0102;
        s.height = 0x0304;
        s.t_min = 5;
        s.t_max = 5;
        s.events.push_back({1, 2, 5, -1});
        std::stringstream bin;
        write_events_binary(bin, s);
        const std::string bytes = bin.str();
        CHECK(bytes.substr(0, 6) == "EVDV1\n");
        CHECK(bytes[16] == 0x02);
        CHECK(bytes[17] == 0x01);
        CHECK(bytes[20] == 5);
        CHECK(static_cast<signed char>(bytes[kEventHeaderSize + 8]) == -1);
    }

    TEST_CASE("corrupt files are reported") {
        std::stringstream bad("NOPE");
        CHECK_THROWS_AS(read_events_binary(bad), DataError);
        EventStream s;
        s.width = 4;
        s.height = 4;
        s.events.push_back({1, 1, 0, 1});
        std::stringstream bin;
        write_events_binary(bin, s);
        std::string truncated = bin.str();
        truncated.pop_back();
        std::stringstream t(truncated);
        CHECK_THROWS_AS(read_events_binary(t), DataError);
        std::stringstream csv("# 4 4 0 10\n1,2,x,1\n");
        CHECK_THROWS_AS(read_events_csv(csv), DataError);
    }
}
