#include "evdvsr/synthetic.hpp"

#include "evdvsr/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

namespace evdvsr {

namespace {

using Rgb = std::array<float, 3>;

struct Wave {
    double fx, fy, phase, amplitude;
    Rgb tint;
};

struct Background {
    Rgb base;
    std::vector<Wave> waves;
    double pan_x, pan_y;  // px per frame

    Rgb sample(double x, double y, int frame) const {
        const double u = x + pan_x * frame;
        const double v = y + pan_y * frame;
        Rgb c = base;
        for (const Wave& w : waves) {
            const double s = w.amplitude * std::sin(w.fx * u + w.fy * v + w.phase);
            for (int k = 0; k < 3; ++k) c[k] += static_cast<float>(s * w.tint[k]);
        }
        return c;
    }
};

enum class Pattern { solid, stripes, checker };

struct Shape {
    double cx, cy, vx, vy;
    double half_w, half_h;
    double angle, spin;
    Pattern pattern;
    Rgb color_a, color_b;
    double period;

    bool covers(double x, double y, Rgb& out) const {
        const double dx = x - cx, dy = y - cy;
        const double ca = std::cos(angle), sa = std::sin(angle);
        const double u = ca * dx + sa * dy;
        const double v = -sa * dx + ca * dy;
        if (std::abs(u) > half_w || std::abs(v) > half_h) return false;
        switch (pattern) {
            case Pattern::solid: out = color_a; break;
            case Pattern::stripes: {
                const double s = 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * u / period);
                for (int k = 0; k < 3; ++k) out[k] = static_cast<float>(color_a[k] * s + color_b[k] * (1.0 - s));
                break;
            }
            case Pattern::checker: {
                const bool odd = (static_cast<long>(std::floor((u + half_w) / period)) +
                                  static_cast<long>(std::floor((v + half_h) / period))) % 2 != 0;
                out = odd ? color_a : color_b;
                break;
            }
        }
        return true;
    }

    double radius() const { return std::hypot(half_w, half_h); }

    void advance(int width, int height) {
        cx += vx;
        cy += vy;
        angle += spin;
        const double r = 0.5 * std::min(half_w, half_h);
        if ((cx < r && vx < 0) || (cx > width - r && vx > 0)) vx = -vx;
        if ((cy < r && vy < 0) || (cy > height - r && vy > 0)) vy = -vy;
    }
};

Rgb random_color(std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return {static_cast<float>(d(rng)), static_cast<float>(d(rng)), static_cast<float>(d(rng))};
}

}  // namespace

SyntheticClip generate_synthetic_clip(int exposures, const SyntheticOptions& options, std::uint64_t seed) {
    if (exposures < 1) throw InvalidInput("generate_synthetic_clip: need at least one exposure");
    if (options.speed_min < 0 || options.speed_max < options.speed_min)
        throw InvalidInput("generate_synthetic_clip: invalid speed range");
    if (options.sharp_per_exposure_min < 2 || options.sharp_per_exposure_max < options.sharp_per_exposure_min)
        throw InvalidInput("generate_synthetic_clip: invalid sharp-frames-per-exposure range");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    SyntheticClip clip;
    clip.plan.sharp_per_exposure =
        std::uniform_int_distribution<int>(options.sharp_per_exposure_min, options.sharp_per_exposure_max)(rng);
    clip.plan.gap = options.gap;
    clip.plan.frame_interval_us = options.frame_interval_us;
    const int frames = clip.plan.required_frames(exposures);
    const int width = options.hr_width, height = options.hr_height;

    Background bg;
    bg.base = random_color(rng, 0.3, 0.6);
    const int wave_count = std::uniform_int_distribution<int>(2, 4)(rng);
    for (int i = 0; i < wave_count; ++i) {
        const double freq = uniform(0.02, 0.12);
        const double dir = uniform(0.0, 2.0 * std::numbers::pi);
        bg.waves.push_back({freq * std::cos(dir), freq * std::sin(dir), uniform(0.0, 6.3), uniform(0.04, 0.12),
                            random_color(rng, 0.5, 1.0)});
    }
    const double pan_dir = uniform(0.0, 2.0 * std::numbers::pi);
    const double pan_speed = uniform(0.0, 0.3);
    bg.pan_x = pan_speed * std::cos(pan_dir);
    bg.pan_y = pan_speed * std::sin(pan_dir);

    std::vector<Shape> shapes;
    const int shape_count = std::uniform_int_distribution<int>(options.shapes_min, options.shapes_max)(rng);
    for (int i = 0; i < shape_count; ++i) {
        Shape s;
        s.half_w = uniform(0.05, 0.14) * width;
        s.half_h = uniform(0.05, 0.14) * height;
        s.cx = uniform(0.2, 0.8) * width;
        s.cy = uniform(0.2, 0.8) * height;
        const double speed = uniform(options.speed_min, options.speed_max);
        const double dir = uniform(0.0, 2.0 * std::numbers::pi);
        s.vx = speed * std::cos(dir);
        s.vy = speed * std::sin(dir);
        s.angle = uniform(0.0, std::numbers::pi);
        s.spin = unit(rng) < 0.5 ? 0.0 : uniform(-0.02, 0.02);
        const double pick = unit(rng);
        s.pattern = pick < 0.4 ? Pattern::solid : (pick < 0.7 ? Pattern::stripes : Pattern::checker);
        s.color_a = random_color(rng, 0.05, 0.95);
        s.color_b = random_color(rng, 0.05, 0.95);
        s.period = uniform(10.0, 24.0);
        shapes.push_back(s);
    }

    // 2x2 supersampling per pixel for anti-aliased edges
    constexpr std::array<double, 2> kSub = {0.25, 0.75};
    clip.frames.reserve(frames);
    for (int f = 0; f < frames; ++f) {
        Image img(3, height, width);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                std::array<double, 3> acc{};
                for (double sy : kSub)
                    for (double sx : kSub) {
                        const double px = x + sx, py = y + sy;
                        Rgb c = bg.sample(px, py, f);
                        for (auto it = shapes.rbegin(); it != shapes.rend(); ++it) {
                            const double r = it->radius();
                            if (std::abs(px - it->cx) > r || std::abs(py - it->cy) > r) continue;
                            if (it->covers(px, py, c)) break;
                        }
                        for (int k = 0; k < 3; ++k) acc[k] += c[k];
                    }
                for (int k = 0; k < 3; ++k) img.at(k, y, x) = std::clamp(static_cast<float>(acc[k] / 4.0), 0.0f, 1.0f);
            }
        clip.frames.push_back(std::move(img));
        for (Shape& s : shapes) s.advance(width, height);
    }
    return clip;
}

}  // namespace evdvsr
