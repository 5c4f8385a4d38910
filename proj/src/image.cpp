#include "etvd/image.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "etvd/util.hpp"

namespace etvd {

namespace {

struct ByteCursor {
    const std::vector<unsigned char>& bytes;
    size_t pos = 0;
    const std::string& origin;

    [[noreturn]] void fail(const std::string& what) const {
        throw std::runtime_error(origin + ": " + what);
    }

    // Skips whitespace and '#' comments (which run to end of line).
    void skip_separators() {
        while (pos < bytes.size()) {
            unsigned char c = bytes[pos];
            if (std::isspace(c)) {
                ++pos;
            } else if (c == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
    }

    int read_int() {
        skip_separators();
        if (pos >= bytes.size() || !std::isdigit(bytes[pos]))
            fail("malformed header (expected integer)");
        long v = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            v = v * 10 + (bytes[pos] - '0');
            if (v > 1 << 30) fail("malformed header (integer overflow)");
            ++pos;
        }
        return static_cast<int>(v);
    }
};

}  // namespace

Image decode_netpbm(const std::vector<unsigned char>& bytes, const std::string& origin) {
    ByteCursor cur{bytes, 0, origin};
    if (bytes.size() < 2) cur.fail("malformed header (too short)");
    if (bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
        cur.fail("malformed header (expected P5 or P6 magic)");
    const int channels = bytes[1] == '5' ? 1 : 3;
    cur.pos = 2;

    const int w = cur.read_int();
    const int h = cur.read_int();
    const int maxval = cur.read_int();
    if (w < 1 || h < 1) cur.fail("malformed header (non-positive dimensions)");
    if (maxval != 255) cur.fail("unsupported maxval " + std::to_string(maxval) +
                                " (only 8-bit, maxval 255)");
    // Exactly one whitespace byte separates the header from the payload.
    if (cur.pos >= bytes.size() || !std::isspace(bytes[cur.pos]))
        cur.fail("malformed header (missing payload separator)");
    ++cur.pos;

    const size_t expected = static_cast<size_t>(channels) * h * w;
    if (bytes.size() - cur.pos < expected) cur.fail("truncated payload");

    Image img(channels, h, w);
    const unsigned char* payload = bytes.data() + cur.pos;
    // Disk layout is interleaved; we store planar.
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < channels; ++c)
                img.at(c, y, x) =
                    payload[(static_cast<size_t>(y) * w + x) * channels + c] / 255.0;
    return img;
}

std::vector<unsigned char> encode_netpbm(const Image& img) {
    if (img.channels != 1 && img.channels != 3)
        throw std::invalid_argument("encode_netpbm: image must have 1 or 3 channels");
    if (img.h < 1 || img.w < 1) throw std::invalid_argument("encode_netpbm: empty image");
    std::string header = (img.channels == 1 ? "P5\n" : "P6\n") + std::to_string(img.w) +
                         " " + std::to_string(img.h) + "\n255\n";
    std::vector<unsigned char> out(header.begin(), header.end());
    out.reserve(out.size() + static_cast<size_t>(img.channels) * img.h * img.w);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int c = 0; c < img.channels; ++c) {
                double v = clamp01(img.at(c, y, x));
                out.push_back(static_cast<unsigned char>(std::lround(v * 255.0)));
            }
    return out;
}

Image read_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open for reading");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    return decode_netpbm(bytes, path);
}

void write_image(const std::string& path, const Image& img) {
    auto bytes = encode_netpbm(img);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error(path + ": write failed");
}

Image to_gray(const Image& img) {
    if (img.channels == 1)
        throw std::invalid_argument("to_gray: input is already grayscale");
    if (img.channels != 3) throw std::invalid_argument("to_gray: expected 3 channels");
    Image out(1, img.h, img.w);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            out.at(0, y, x) = 0.299 * img.at(0, y, x) + 0.587 * img.at(1, y, x) +
                              0.114 * img.at(2, y, x);
    return out;
}

Tensor<double> image_to_tensor(const Image& img) {
    Tensor<double> t(1, img.channels, img.h, img.w);
    std::copy(img.pix.begin(), img.pix.end(), t.data());
    return t;
}

Image tensor_to_image(const Tensor<double>& t, bool clamp) {
    if (t.n() != 1) throw std::invalid_argument("tensor_to_image: expected a single image");
    if (t.c() != 1 && t.c() != 3)
        throw std::invalid_argument("tensor_to_image: expected 1 or 3 channels");
    Image img(t.c(), t.h(), t.w());
    for (size_t i = 0; i < t.size(); ++i)
        img.pix[i] = clamp ? clamp01(t[i]) : t[i];
    return img;
}

}  // namespace etvd
