#include "evdvsr/error.hpp"
#include "evdvsr/metrics.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace evdvsr;
using namespace evdvsr::metrics;

namespace {

// Smooth textured scene sampled at a horizontal offset (exact translation of a continuous pattern).
Image textured(int h, int w, double shift) {
    Image img(3, h, w);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double u = x - shift;
                img.at(c, y, x) = static_cast<float>(0.5 + 0.12 * std::sin(0.31 * u + 0.17 * y + 0.2 * c) +
                                                     0.12 * std::sin(0.23 * y - 0.13 * u) + 0.1 * std::cos(0.19 * u + 0.29 * y));
            }
    return img;
}

std::vector<Image> translating_clip(int frames, double speed) {
    std::vector<Image> clip;
    for (int k = 0; k < frames; ++k) clip.push_back(textured(48, 48, speed * k));
    return clip;
}

}  // namespace

TEST_SUITE("psnr") {
    TEST_CASE("identical images saturate") {
        std::mt19937_64 rng(1);
        const Image a = oracle::random_image(rng, 3, 8, 8);
        const auto r = psnr(a, a);
        CHECK(r.saturated);
        CHECK(r.db == kPsnrCap);
    }

    TEST_CASE("uniform difference of 0.1 is 20 dB") {
        const Image a(3, 16, 16, 0.3f), b(3, 16, 16, 0.4f);
        CHECK(psnr(a, b).db == doctest::Approx(20.0).epsilon(1e-5));
        CHECK_FALSE(psnr(a, b).saturated);
    }

    TEST_CASE("random pairs match the scalar oracle and are symmetric") {
        std::mt19937_64 rng(2);
        for (int trial = 0; trial < 100; ++trial) {
            const Image a = oracle::random_image(rng, 3, 9, 12), b = oracle::random_image(rng, 3, 9, 12);
            const double expected = 10.0 * std::log10(1.0 / oracle::mean_squared_error(a, b));
            CHECK(std::abs(psnr(a, b).db - expected) < 1e-6);
            CHECK(psnr(a, b).db == psnr(b, a).db);
        }
    }

    TEST_CASE("shape mismatch") { CHECK_THROWS_AS(psnr(Image(3, 4, 4), Image(3, 4, 5)), InvalidInput); }
}

TEST_SUITE("ssim") {
    TEST_CASE("identical images give exactly one") {
        std::mt19937_64 rng(3);
        const Image a = oracle::random_image(rng, 3, 20, 20);
        CHECK(ssim(a, a) == 1.0);
    }

    TEST_CASE("inverted binary image is anti-correlated") {
        std::mt19937_64 rng(4);
        Image a(3, 24, 24);
        std::bernoulli_distribution coin(0.5);
        for (float& v : a.data) v = coin(rng) ? 1.0f : 0.0f;
        Image b = a;
        for (float& v : b.data) v = 1.0f - v;
        CHECK(ssim(a, b) < 0.0);
    }

    TEST_CASE("random pairs match the direct sliding-window oracle") {
        std::mt19937_64 rng(5);
        for (int trial = 0; trial < 100; ++trial) {
            const Image a = oracle::random_image(rng, 3, 16, 14);
            Image b = a;
            std::normal_distribution<float> noise(0.0f, 0.1f);
            for (float& v : b.data) v = std::clamp(v + noise(rng), 0.0f, 1.0f);
            const double s = ssim(a, b);
            CHECK(std::abs(s - oracle::ssim(a, b)) < 1e-6);
            CHECK(s == ssim(b, a));
            CHECK(s <= 1.0);
        }
    }

    TEST_CASE("too small for the window") { CHECK_THROWS_AS(ssim(Image(3, 10, 30), Image(3, 10, 30)), InvalidInput); }
}

TEST_SUITE("temporal metrics") {
    TEST_CASE("classical flow recovers a known translation") {
        const Image a = textured(48, 48, 0.0), b = textured(48, 48, 2.0);
        const Flow f = classical_flow(a, b);
        double mean_dx = 0.0, mean_dy = 0.0;
        int n = 0;
        for (int y = 8; y < 40; ++y)
            for (int x = 8; x < 40; ++x) {
                mean_dx += f.dx[y * 48 + x];
                mean_dy += f.dy[y * 48 + x];
                ++n;
            }
        CHECK(mean_dx / n == doctest::Approx(2.0).epsilon(0.1));
        CHECK(std::abs(mean_dy / n) < 0.1);
    }

    TEST_CASE("identical clips") {
        const auto clip = translating_clip(4, 1.5);
        CHECK(tof(clip, clip) == 0.0);
        CHECK(tcc(clip, clip) == 1.0);
    }

    TEST_CASE("static prediction of a translating clip scores about the motion") {
        const auto gt = translating_clip(4, 2.0);
        const std::vector<Image> pred(4, gt.front());
        CHECK(std::abs(tof(pred, gt) - 2.0) <= 0.5);
        const double c = tcc(pred, gt);
        CHECK(c < 0.9);
        CHECK(c < tcc(gt, gt));
    }

    TEST_CASE("shuffling frames worsens tOF") {
        const auto gt = translating_clip(5, 1.0);
        auto shuffled = gt;
        std::swap(shuffled[1], shuffled[3]);
        CHECK(tof(shuffled, gt) > tof(gt, gt));
    }

    TEST_CASE("constant offsets cancel in TCC") {
        std::mt19937_64 rng(6);
        std::vector<Image> gt, pred;
        for (int k = 0; k < 4; ++k) {
            gt.push_back(oracle::random_image(rng, 3, 16, 16, 0.2f, 0.8f));
            pred.push_back(oracle::random_image(rng, 3, 16, 16, 0.2f, 0.8f));
        }
        auto shifted = pred;
        for (auto& f : shifted)
            for (float& v : f.data) v += 0.0625f;  // exact in float for these magnitudes
        CHECK(tcc(shifted, gt) == doctest::Approx(tcc(pred, gt)).epsilon(1e-6));
    }

    TEST_CASE("flip invariance") {
        const auto gt = translating_clip(3, 1.0);
        std::vector<Image> pred;
        std::mt19937_64 rng(7);
        std::normal_distribution<float> noise(0.0f, 0.03f);
        for (const auto& f : gt) {
            Image p = f;
            for (float& v : p.data) v += noise(rng);
            pred.push_back(p);
        }
        std::vector<Image> gt_f, pred_f;
        for (const auto& f : gt) gt_f.push_back(flip_horizontal(f));
        for (const auto& f : pred) pred_f.push_back(flip_horizontal(f));
        CHECK(psnr(pred_f[0], gt_f[0]).db == doctest::Approx(psnr(pred[0], gt[0]).db).epsilon(1e-9));
        CHECK(ssim(pred_f[1], gt_f[1]) == doctest::Approx(ssim(pred[1], gt[1])).epsilon(1e-6));
        CHECK(tof(pred_f, gt_f) == doctest::Approx(tof(pred, gt)).epsilon(1e-3));
        CHECK(tcc(pred_f, gt_f) == doctest::Approx(tcc(pred, gt)).epsilon(1e-6));
    }

    TEST_CASE("clips shorter than two frames are rejected") {
        const std::vector<Image> one(1, Image(3, 16, 16));
        CHECK_THROWS_AS(tof(one, one), InvalidInput);
        CHECK_THROWS_AS(tcc(one, one), InvalidInput);
        const std::vector<Image> two(2, Image(3, 16, 16));
        CHECK_THROWS_AS(tof(one, two), InvalidInput);
    }
}

TEST_SUITE("report") {
    MetricReport sample_report() {
        MetricReport r;
        r.clips.push_back({"a", 2, 30.0, false, 0.9, 0.5, 0.8, {}});
        r.clips.push_back({"b", 6, 20.0, false, 0.7, 1.5, 0.6, {}});
        return r;
    }

    TEST_CASE("aggregate is the plain mean unless frame weighting is asked for") {
        const auto r = sample_report();
        CHECK(r.aggregate().psnr == doctest::Approx(25.0));
        CHECK(r.aggregate().tof == doctest::Approx(1.0));
        CHECK(r.aggregate(true).psnr == doctest::Approx((2 * 30.0 + 6 * 20.0) / 8.0));
        CHECK(r.aggregate().frames == 8);
    }

    TEST_CASE("line format round-trips") {
        const auto r = sample_report();
        std::stringstream ss;
        r.write_lines(ss);
        CHECK(ss.str().find("ALL") != std::string::npos);
        const auto back = MetricReport::parse_lines(ss);
        REQUIRE(back.clips.size() == 2);
        CHECK(back.clips[1].clip == "b");
        CHECK(back.clips[1].psnr == doctest::Approx(20.0));
        CHECK(back.clips[0].tcc == doctest::Approx(0.8));
    }

    TEST_CASE("malformed lines name the line") {
        std::stringstream ss("# clip, psnr, ssim, tof, tcc\na, 1, 2\n");
        try {
            MetricReport::parse_lines(ss, "r.txt");
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("r.txt:2") != std::string::npos);
        }
    }
}
