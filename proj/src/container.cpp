#include "personlab/container.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace personlab {

namespace {

constexpr char kMagic[4] = {'P', 'L', 'F', 'D'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& buf, std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    buf.append(b, 4);
}

void put_f32(std::string& buf, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(buf, bits);
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    std::uint32_t u32() {
        if (pos + 4 > buf.size())
            throw ParseError(ParseError::Kind::Truncated, "container truncated");
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i)
            v = (v << 8) | static_cast<unsigned char>(buf[pos + i]);
        pos += 4;
        return v;
    }
    float f32() {
        std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
};

void append_block(std::string& buf, const FieldGrid& g) {
    put_u32(buf, static_cast<std::uint32_t>(g.channels));
    for (float v : g.data) put_f32(buf, v);
}

FieldGrid read_block(Reader& r, int h, int w, int stride, int expect_channels,
                     const char* name) {
    const std::uint32_t c = r.u32();
    if (static_cast<int>(c) != expect_channels)
        throw ParseError(ParseError::Kind::DimensionMismatch,
                         std::string(name) + " block has " + std::to_string(c) +
                             " channels, expected " + std::to_string(expect_channels));
    FieldGrid g(h, w, static_cast<int>(c), stride);
    for (float& v : g.data) v = r.f32();
    return g;
}

}  // namespace

void validate_outputs(const ModelOutputs& o) {
    const int k = o.heatmaps.channels;
    auto fail = [](const std::string& msg) {
        throw ParseError(ParseError::Kind::DimensionMismatch, msg);
    };
    if (k <= 0) fail("heatmaps must have at least one channel");
    const FieldGrid* grids[5] = {&o.heatmaps, &o.short_offsets, &o.mid_offsets,
                                 &o.long_offsets, &o.seg_prob};
    const char* names[5] = {"heatmaps", "short_offsets", "mid_offsets",
                            "long_offsets", "seg_prob"};
    for (int g = 1; g < 5; ++g) {
        if (grids[g]->height != o.heatmaps.height || grids[g]->width != o.heatmaps.width ||
            grids[g]->stride != o.heatmaps.stride)
            fail(std::string(names[g]) + " shape differs from heatmaps");
    }
    if (o.short_offsets.channels != 2 * k) fail("short_offsets must have 2K channels");
    if (o.mid_offsets.channels != 4 * (k - 1)) fail("mid_offsets must have 4(K-1) channels");
    if (o.long_offsets.channels != 2 * k) fail("long_offsets must have 2K channels");
    if (o.seg_prob.channels != 1) fail("seg_prob must have 1 channel");
    for (const FieldGrid* g : grids)
        if (g->data.size() != static_cast<std::size_t>(g->height) * g->width * g->channels)
            fail("grid data length does not match its dimensions");
}

void save_container(const ModelOutputs& o, const std::string& path) {
    validate_outputs(o);
    std::string buf;
    buf.append(kMagic, 4);
    put_u32(buf, kVersion);
    put_u32(buf, static_cast<std::uint32_t>(o.num_keypoints()));
    put_u32(buf, static_cast<std::uint32_t>(o.image_height));
    put_u32(buf, static_cast<std::uint32_t>(o.image_width));
    put_u32(buf, static_cast<std::uint32_t>(o.stride()));
    put_u32(buf, static_cast<std::uint32_t>(o.grid_height()));
    put_u32(buf, static_cast<std::uint32_t>(o.grid_width()));
    append_block(buf, o.heatmaps);
    append_block(buf, o.short_offsets);
    append_block(buf, o.mid_offsets);
    append_block(buf, o.long_offsets);
    append_block(buf, o.seg_prob);

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ParseError(ParseError::Kind::Io, "cannot open for writing: " + path);
    f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!f) throw ParseError(ParseError::Kind::Io, "write failed: " + path);
}

ModelOutputs load_container(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError(ParseError::Kind::Io, "cannot open: " + path);
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0)
        throw ParseError(ParseError::Kind::BadMagic, "not a PLFD container: " + path);
    Reader r{buf, 4};
    const std::uint32_t version = r.u32();
    if (version != kVersion)
        throw ParseError(ParseError::Kind::VersionMismatch,
                         "unsupported container version " + std::to_string(version));
    const int k = static_cast<int>(r.u32());
    const int image_h = static_cast<int>(r.u32());
    const int image_w = static_cast<int>(r.u32());
    const int stride = static_cast<int>(r.u32());
    const int h = static_cast<int>(r.u32());
    const int w = static_cast<int>(r.u32());
    if (k <= 0 || stride <= 0 || h <= 0 || w <= 0)
        throw ParseError(ParseError::Kind::DimensionMismatch, "invalid container header");

    ModelOutputs o;
    o.image_height = image_h;
    o.image_width = image_w;
    o.heatmaps = read_block(r, h, w, stride, k, "heatmaps");
    o.short_offsets = read_block(r, h, w, stride, 2 * k, "short_offsets");
    o.mid_offsets = read_block(r, h, w, stride, 4 * (k - 1), "mid_offsets");
    o.long_offsets = read_block(r, h, w, stride, 2 * k, "long_offsets");
    o.seg_prob = read_block(r, h, w, stride, 1, "seg_prob");
    if (r.pos != buf.size())
        throw ParseError(ParseError::Kind::Truncated,
                         "container has trailing bytes: " + path);
    return o;
}

}  // namespace personlab
