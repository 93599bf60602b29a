#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sls {

// Row-major raster with 1 (gray) or 3 (RGB) channels, radiance values in [0,1].
// PNG files are 8-bit; intensity maps linearly 0..255 <-> 0..1, no gamma.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<double> data; // height*width*channels

    Image() = default;
    Image(int w, int h, int c, double fill = 0.0)
        : width(w), height(h), channels(c), data(size_t(w) * h * c, fill) {}

    double& at(int x, int y, int c = 0) { return data[(size_t(y) * width + x) * channels + c]; }
    double at(int x, int y, int c = 0) const { return data[(size_t(y) * width + x) * channels + c]; }

    bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
};

// 8-bit quantization used when writing; round-trips through PNG exactly.
uint8_t quantize8(double v);

void save_png(const Image& img, const std::string& path);
Image load_png(const std::string& path);

} // namespace sls
