#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace evdvsr {

/// Planar float image, channel-major (C x H x W). Values are nominally in [0,1].
struct Image {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<float> data;

    Image() = default;
    Image(int c, int h, int w, float fill = 0.0f);

    std::size_t plane_size() const { return static_cast<std::size_t>(height) * width; }
    std::size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }
    bool same_shape(const Image& other) const {
        return channels == other.channels && height == other.height && width == other.width;
    }

    float& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
    float at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }

    std::span<float> plane(int c) { return {data.data() + c * plane_size(), plane_size()}; }
    std::span<const float> plane(int c) const { return {data.data() + c * plane_size(), plane_size()}; }
};

/// ITU-R BT.601 luma of an RGB image (1 x H x W). Single-channel input is copied.
Image luminance(const Image& rgb);

/// Replicates a single-channel image to three channels.
Image to_rgb(const Image& gray);

Image flip_horizontal(const Image& img);
Image flip_vertical(const Image& img);
Image crop(const Image& img, int y0, int x0, int h, int w);

}  // namespace evdvsr
