#include "evdvsr/image.hpp"

#include "evdvsr/error.hpp"

#include <algorithm>

namespace evdvsr {

Image::Image(int c, int h, int w, float fill)
    : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {
    if (c < 0 || h < 0 || w < 0) throw InvalidInput("Image: negative dimension");
}

Image luminance(const Image& rgb) {
    if (rgb.channels == 1) return rgb;
    if (rgb.channels != 3) throw InvalidInput("luminance: expected 1 or 3 channels");
    Image out(1, rgb.height, rgb.width);
    auto r = rgb.plane(0), g = rgb.plane(1), b = rgb.plane(2);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = 0.299f * r[i] + 0.587f * g[i] + 0.114f * b[i];
    return out;
}

Image to_rgb(const Image& gray) {
    if (gray.channels != 1) throw InvalidInput("to_rgb: expected a single channel");
    Image out(3, gray.height, gray.width);
    for (int c = 0; c < 3; ++c) std::copy(gray.data.begin(), gray.data.end(), out.plane(c).begin());
    return out;
}

Image flip_horizontal(const Image& img) {
    Image out(img.channels, img.height, img.width);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) out.at(c, y, x) = img.at(c, y, img.width - 1 - x);
    return out;
}

Image flip_vertical(const Image& img) {
    Image out(img.channels, img.height, img.width);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < img.height; ++y)
            std::copy_n(&img.data[(static_cast<std::size_t>(c) * img.height + (img.height - 1 - y)) * img.width],
                        img.width, &out.at(c, y, 0));
    return out;
}

Image crop(const Image& img, int y0, int x0, int h, int w) {
    if (y0 < 0 || x0 < 0 || h <= 0 || w <= 0 || y0 + h > img.height || x0 + w > img.width)
        throw InvalidInput("crop: window outside the image");
    Image out(img.channels, h, w);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < h; ++y)
            std::copy_n(img.data.begin() + ((static_cast<std::ptrdiff_t>(c) * img.height + y0 + y) * img.width + x0), w, &out.at(c, y, 0));
    return out;
}

}  // namespace evdvsr
