#include "etvd/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace etvd {

namespace {

constexpr char kMagic[4] = {'E', 'T', 'V', 'D'};
constexpr uint32_t kVersion = 1;

void put_u32(std::vector<unsigned char>& out, uint32_t v) {
    out.push_back(static_cast<unsigned char>(v));
    out.push_back(static_cast<unsigned char>(v >> 8));
    out.push_back(static_cast<unsigned char>(v >> 16));
    out.push_back(static_cast<unsigned char>(v >> 24));
}

void put_u64(std::vector<unsigned char>& out, uint64_t v) {
    put_u32(out, static_cast<uint32_t>(v));
    put_u32(out, static_cast<uint32_t>(v >> 32));
}

void put_f32(std::vector<unsigned char>& out, float v) {
    put_u32(out, std::bit_cast<uint32_t>(v));
}

void put_f64(std::vector<unsigned char>& out, double v) {
    put_u64(out, std::bit_cast<uint64_t>(v));
}

struct Reader {
    const std::vector<unsigned char>& bytes;
    size_t pos = 0;
    const std::string& path;

    [[noreturn]] void fail(const std::string& what) const {
        throw std::runtime_error(path + ": " + what);
    }
    void need(size_t count) const {
        if (bytes.size() - pos < count) fail("truncated checkpoint");
    }
    uint32_t u32() {
        need(4);
        uint32_t v = static_cast<uint32_t>(bytes[pos]) |
                     static_cast<uint32_t>(bytes[pos + 1]) << 8 |
                     static_cast<uint32_t>(bytes[pos + 2]) << 16 |
                     static_cast<uint32_t>(bytes[pos + 3]) << 24;
        pos += 4;
        return v;
    }
    uint64_t u64() {
        uint64_t lo = u32();
        uint64_t hi = u32();
        return lo | hi << 32;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str(size_t len) {
        need(len);
        std::string s(reinterpret_cast<const char*>(bytes.data() + pos), len);
        pos += len;
        return s;
    }
};

}  // namespace

void save_checkpoint(const std::string& path, const ResidualDenoiser<float>& net) {
    const NetworkConfig& cfg = net.config();
    auto views = net.state_views();

    std::vector<unsigned char> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<uint32_t>(cfg.blocks));
    put_u32(out, static_cast<uint32_t>(cfg.channels));
    put_u32(out, static_cast<uint32_t>(cfg.in_channels));
    put_f64(out, cfg.alpha);
    put_u64(out, cfg.seed);
    put_u32(out, static_cast<uint32_t>(views.size()));
    for (const auto& v : views) {
        put_u32(out, static_cast<uint32_t>(v.name.size()));
        out.insert(out.end(), v.name.begin(), v.name.end());
        put_u32(out, static_cast<uint32_t>(v.dims.size()));
        for (int d : v.dims) put_u32(out, static_cast<uint32_t>(d));
        for (size_t i = 0; i < v.size; ++i) put_f32(out, v.data[i]);
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error(path + ": cannot open for writing");
    f.write(reinterpret_cast<const char*>(out.data()),
            static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error(path + ": write failed");
}

ResidualDenoiser<float> load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error(path + ": cannot open checkpoint");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                     std::istreambuf_iterator<char>());
    Reader r{bytes, 0, path};

    r.need(4);
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) r.fail("bad magic (not an ETVD checkpoint)");
    r.pos = 4;
    const uint32_t version = r.u32();
    if (version != kVersion)
        r.fail("unsupported checkpoint version " + std::to_string(version));

    NetworkConfig cfg;
    cfg.blocks = static_cast<int>(r.u32());
    cfg.channels = static_cast<int>(r.u32());
    cfg.in_channels = static_cast<int>(r.u32());
    cfg.alpha = r.f64();
    cfg.seed = r.u64();

    ResidualDenoiser<float> net(cfg);
    auto entries = net.state_entries();

    const uint32_t count = r.u32();
    if (count != entries.size())
        r.fail("record count mismatch: file has " + std::to_string(count) + ", network needs " +
               std::to_string(entries.size()));
    for (auto& e : entries) {
        const uint32_t name_len = r.u32();
        const std::string name = r.str(name_len);
        if (name != e.name) r.fail("unexpected record '" + name + "', wanted '" + e.name + "'");
        const uint32_t ndims = r.u32();
        if (ndims != e.dims.size()) r.fail("rank mismatch in record '" + name + "'");
        size_t total = 1;
        for (uint32_t d = 0; d < ndims; ++d) {
            const uint32_t dim = r.u32();
            if (dim != static_cast<uint32_t>(e.dims[d]))
                r.fail("shape mismatch in record '" + name + "'");
            total *= dim;
        }
        if (total != e.size) r.fail("size mismatch in record '" + name + "'");
        for (size_t i = 0; i < e.size; ++i) e.data[i] = r.f32();
    }
    if (r.pos != bytes.size()) r.fail("trailing bytes after last record");
    return net;
}

}  // namespace etvd
