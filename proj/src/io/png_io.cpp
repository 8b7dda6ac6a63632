#include "evdvsr/png_io.hpp"

#include "evdvsr/error.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

namespace evdvsr {

Image read_png(const std::filesystem::path& path, bool gray) {
    png_image info;
    std::memset(&info, 0, sizeof(info));
    info.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&info, path.c_str()))
        throw DataError("cannot read PNG " + path.string() + ": " + info.message);
    info.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    const int channels = gray ? 1 : 3;
    std::vector<png_byte> buffer(PNG_IMAGE_SIZE(info));
    if (!png_image_finish_read(&info, nullptr, buffer.data(), 0, nullptr)) {
        png_image_free(&info);
        throw DataError("cannot decode PNG " + path.string() + ": " + info.message);
    }
    Image img(channels, static_cast<int>(info.height), static_cast<int>(info.width));
    const std::size_t pixels = img.plane_size();
    for (std::size_t i = 0; i < pixels; ++i)
        for (int c = 0; c < channels; ++c)
            img.data[c * pixels + i] = buffer[i * channels + c] / 255.0f;
    return img;
}

void write_png(const std::filesystem::path& path, const Image& img) {
    if (img.channels != 1 && img.channels != 3) throw InvalidInput("write_png: expected 1 or 3 channels");
    png_image info;
    std::memset(&info, 0, sizeof(info));
    info.version = PNG_IMAGE_VERSION;
    info.width = static_cast<png_uint_32>(img.width);
    info.height = static_cast<png_uint_32>(img.height);
    info.format = img.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    const std::size_t pixels = img.plane_size();
    std::vector<png_byte> buffer(pixels * img.channels);
    for (std::size_t i = 0; i < pixels; ++i)
        for (int c = 0; c < img.channels; ++c) {
            const float v = std::clamp(img.data[c * pixels + i], 0.0f, 1.0f);
            buffer[i * img.channels + c] = static_cast<png_byte>(std::lround(v * 255.0f));
        }
    if (!png_image_write_to_file(&info, path.c_str(), 0, buffer.data(), 0, nullptr))
        throw DataError("cannot write PNG " + path.string() + ": " + info.message);
}

}  // namespace evdvsr
