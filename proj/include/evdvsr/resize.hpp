#pragma once

#include "evdvsr/image.hpp"

namespace evdvsr {

/// Keys cubic convolution kernel with a = -0.5.
double cubic_kernel(double x);

/// Separable bicubic resampling of one H x W plane, half-pixel centred. When
/// shrinking, the kernel is stretched by the scale factor (anti-aliasing).
/// Borders use half-sample symmetric extension. Deterministic loop order.
void resize_plane_bicubic(const float* src, int height, int width, float* dst, int out_height, int out_width);

Image resize_bicubic(const Image& img, int out_height, int out_width);

/// Integer-factor anti-aliased bicubic downsampling. H and W must be divisible by the factor.
Image downsample_bicubic(const Image& img, int factor);

/// Integer-factor bicubic upsampling; used as the reconstruction skip path.
Image upsample_bicubic(const Image& img, int factor);

}  // namespace evdvsr
