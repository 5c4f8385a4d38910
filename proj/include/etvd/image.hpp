#pragma once

#include <string>
#include <vector>

#include "etvd/tensor.hpp"

namespace etvd {

// Planar image with intensities in [0, 1]; 8-bit sources are divided by 255
// on load. channels is 1 (gray) or 3 (RGB).
struct Image {
    int channels = 0;
    int h = 0;
    int w = 0;
    std::vector<double> pix;  // channel-major, then row-major

    Image() = default;
    Image(int channels_, int h_, int w_)
        : channels(channels_), h(h_), w(w_),
          pix(static_cast<size_t>(channels_) * h_ * w_, 0.0) {}

    double& at(int c, int y, int x) {
        return pix[(static_cast<size_t>(c) * h + y) * w + x];
    }
    double at(int c, int y, int x) const {
        return pix[(static_cast<size_t>(c) * h + y) * w + x];
    }
    double* plane(int c) { return pix.data() + static_cast<size_t>(c) * h * w; }
    const double* plane(int c) const { return pix.data() + static_cast<size_t>(c) * h * w; }

    bool operator==(const Image&) const = default;
};

// Binary PGM (P5) / PPM (P6), 8-bit, maxval 255. Malformed headers, truncated
// payloads and other maxvals are rejected.
Image read_image(const std::string& path);
void write_image(const std::string& path, const Image& img);

// Parses an in-memory netpbm payload; read_image is a thin file wrapper.
Image decode_netpbm(const std::vector<unsigned char>& bytes, const std::string& origin);
std::vector<unsigned char> encode_netpbm(const Image& img);

// Luma conversion 0.299 R + 0.587 G + 0.114 B. Rejects already-gray input.
Image to_gray(const Image& img);

Tensor<double> image_to_tensor(const Image& img);
Image tensor_to_image(const Tensor<double>& t, bool clamp);

}  // namespace etvd
