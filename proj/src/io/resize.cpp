#include "evdvsr/resize.hpp"

#include "evdvsr/error.hpp"

#include <cmath>
#include <vector>

namespace evdvsr {

double cubic_kernel(double x) {
    constexpr double a = -0.5;
    const double ax = std::abs(x);
    if (ax <= 1.0) return ((a + 2.0) * ax - (a + 3.0)) * ax * ax + 1.0;
    if (ax < 2.0) return ((a * ax - 5.0 * a) * ax + 8.0 * a) * ax - 4.0 * a;
    return 0.0;
}

namespace {

int reflect(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - i - 1;
    }
    return i;
}

struct Taps {
    std::vector<int> offsets;   // first index into `index` per output sample
    std::vector<int> counts;
    std::vector<int> index;
    std::vector<double> weight;
};

Taps make_taps(int in_size, int out_size) {
    const double scale = static_cast<double>(out_size) / in_size;
    const double stretch = scale < 1.0 ? 1.0 / scale : 1.0;
    const double support = 2.0 * stretch;
    Taps taps;
    taps.offsets.reserve(out_size);
    taps.counts.reserve(out_size);
    for (int o = 0; o < out_size; ++o) {
        const double centre = (o + 0.5) / scale - 0.5;
        const int lo = static_cast<int>(std::floor(centre - support));
        const int hi = static_cast<int>(std::ceil(centre + support));
        const int first = static_cast<int>(taps.index.size());
        double total = 0.0;
        for (int j = lo; j <= hi; ++j) {
            const double w = cubic_kernel((j - centre) / stretch);
            if (w == 0.0) continue;
            taps.index.push_back(reflect(j, in_size));
            taps.weight.push_back(w);
            total += w;
        }
        for (std::size_t k = first; k < taps.weight.size(); ++k) taps.weight[k] /= total;
        taps.offsets.push_back(first);
        taps.counts.push_back(static_cast<int>(taps.index.size()) - first);
    }
    return taps;
}

}  // namespace

void resize_plane_bicubic(const float* src, int height, int width, float* dst, int out_height, int out_width) {
    if (height <= 0 || width <= 0 || out_height <= 0 || out_width <= 0)
        throw InvalidInput("resize_bicubic: empty plane");
    const Taps tx = make_taps(width, out_width);
    const Taps ty = make_taps(height, out_height);

    std::vector<double> rows(static_cast<std::size_t>(height) * out_width);
    for (int y = 0; y < height; ++y) {
        const float* line = src + static_cast<std::size_t>(y) * width;
        for (int o = 0; o < out_width; ++o) {
            double acc = 0.0;
            for (int k = 0; k < tx.counts[o]; ++k) {
                const int t = tx.offsets[o] + k;
                acc += tx.weight[t] * line[tx.index[t]];
            }
            rows[static_cast<std::size_t>(y) * out_width + o] = acc;
        }
    }
    for (int o = 0; o < out_height; ++o) {
        float* out = dst + static_cast<std::size_t>(o) * out_width;
        for (int x = 0; x < out_width; ++x) {
            double acc = 0.0;
            for (int k = 0; k < ty.counts[o]; ++k) {
                const int t = ty.offsets[o] + k;
                acc += ty.weight[t] * rows[static_cast<std::size_t>(ty.index[t]) * out_width + x];
            }
            out[x] = static_cast<float>(acc);
        }
    }
}

Image resize_bicubic(const Image& img, int out_height, int out_width) {
    Image out(img.channels, out_height, out_width);
    for (int c = 0; c < img.channels; ++c)
        resize_plane_bicubic(img.plane(c).data(), img.height, img.width, out.plane(c).data(), out_height, out_width);
    return out;
}

Image downsample_bicubic(const Image& img, int factor) {
    if (factor < 1) throw InvalidInput("downsample_bicubic: factor must be >= 1");
    if (img.height % factor != 0 || img.width % factor != 0)
        throw InvalidInput("downsample_bicubic: image size not divisible by the factor");
    if (factor == 1) return img;
    return resize_bicubic(img, img.height / factor, img.width / factor);
}

Image upsample_bicubic(const Image& img, int factor) {
    if (factor < 1) throw InvalidInput("upsample_bicubic: factor must be >= 1");
    if (factor == 1) return img;
    return resize_bicubic(img, img.height * factor, img.width * factor);
}

}  // namespace evdvsr
