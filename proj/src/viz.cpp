#include "personlab/viz.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace personlab {

namespace {

void put_be32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>((v >> 24) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>(v & 0xff));
}

void put_chunk(std::string& out, const char type[4], const std::string& payload) {
    put_be32(out, static_cast<std::uint32_t>(payload.size()));
    const std::size_t crc_start = out.size();
    out.append(type, 4);
    out += payload;
    const std::uint32_t crc = static_cast<std::uint32_t>(
        crc32(0, reinterpret_cast<const Bytef*>(out.data() + crc_start),
              static_cast<uInt>(out.size() - crc_start)));
    put_be32(out, crc);
}

}  // namespace

namespace {

// raw = scanlines with leading filter byte 0; color_type 2 = RGB, 0 = gray
void write_png_stream(const std::string& raw, int width, int height, int color_type,
                      const std::string& path) {
    uLongf compressed_size = compressBound(static_cast<uLong>(raw.size()));
    std::string compressed(compressed_size, '\0');
    if (compress2(reinterpret_cast<Bytef*>(compressed.data()), &compressed_size,
                  reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()),
                  6) != Z_OK)
        throw std::runtime_error("png: deflate failed");
    compressed.resize(compressed_size);

    std::string ihdr;
    put_be32(ihdr, static_cast<std::uint32_t>(width));
    put_be32(ihdr, static_cast<std::uint32_t>(height));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(static_cast<char>(color_type));
    ihdr.push_back(0);  // compression
    ihdr.push_back(0);  // filter
    ihdr.push_back(0);  // interlace

    std::string out("\x89PNG\r\n\x1a\n", 8);
    put_chunk(out, "IHDR", ihdr);
    put_chunk(out, "IDAT", compressed);
    put_chunk(out, "IEND", "");

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ParseError(ParseError::Kind::Io, "cannot open for writing: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw ParseError(ParseError::Kind::Io, "write failed: " + path);
}

}  // namespace

void write_png(const RgbImage& image, const std::string& path) {
    std::string raw;
    raw.reserve(static_cast<std::size_t>(image.height) * (1 + 3 * image.width));
    for (int y = 0; y < image.height; ++y) {
        raw.push_back('\0');
        raw.append(reinterpret_cast<const char*>(image.pixels.data() +
                                                 3u * static_cast<std::size_t>(y) * image.width),
                   3u * image.width);
    }
    write_png_stream(raw, image.width, image.height, 2, path);
}

void write_mask_png(const MaskGrid& mask, const std::string& path) {
    std::string raw;
    raw.reserve(static_cast<std::size_t>(mask.height) * (1 + mask.width));
    for (int i = 0; i < mask.height; ++i) {
        raw.push_back('\0');
        for (int j = 0; j < mask.width; ++j)
            raw.push_back(mask.at(i, j, 0) ? static_cast<char>(255) : '\0');
    }
    write_png_stream(raw, mask.width, mask.height, 0, path);
}

namespace {

struct Color {
    std::uint8_t r, g, b;
};

Color instance_color(int index) {
    static const Color palette[] = {
        {230, 80, 80},  {80, 180, 90},  {90, 120, 230}, {220, 180, 60},
        {170, 90, 210}, {70, 200, 200}, {230, 130, 50}, {150, 210, 70},
    };
    return palette[index % (sizeof(palette) / sizeof(palette[0]))];
}

void draw_line(RgbImage& img, Point2D a, Point2D b, Color c) {
    int x0 = static_cast<int>(std::lround(a.x)), y0 = static_cast<int>(std::lround(a.y));
    const int x1 = static_cast<int>(std::lround(b.x)), y1 = static_cast<int>(std::lround(b.y));
    const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
        if (x0 >= 0 && y0 >= 0 && x0 < img.width && y0 < img.height) {
            std::uint8_t* px = img.at(y0, x0);
            px[0] = c.r;
            px[1] = c.g;
            px[2] = c.b;
        }
        if (x0 == x1 && y0 == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

void draw_dot(RgbImage& img, Point2D p, Color c, int radius) {
    const int cx = static_cast<int>(std::lround(p.x)), cy = static_cast<int>(std::lround(p.y));
    for (int y = cy - radius; y <= cy + radius; ++y) {
        for (int x = cx - radius; x <= cx + radius; ++x) {
            if (x < 0 || y < 0 || x >= img.width || y >= img.height) continue;
            if ((x - cx) * (x - cx) + (y - cy) * (y - cy) > radius * radius) continue;
            std::uint8_t* px = img.at(y, x);
            px[0] = c.r;
            px[1] = c.g;
            px[2] = c.b;
        }
    }
}

}  // namespace

RgbImage render_overlay(const ModelOutputs& outputs, const std::vector<PoseInstance>& instances,
                        const std::vector<MaskGrid>& image_masks, const KinematicGraph& graph) {
    RgbImage img(outputs.image_height, outputs.image_width);

    // semantic probability as gray backdrop
    const int s = outputs.stride();
    for (int y = 0; y < img.height; ++y) {
        const int ci = std::min(y / s, outputs.grid_height() - 1);
        for (int x = 0; x < img.width; ++x) {
            const int cj = std::min(x / s, outputs.grid_width() - 1);
            const auto gray = static_cast<std::uint8_t>(
                40.0 + 60.0 * outputs.seg_prob.at(ci, cj, 0));
            std::uint8_t* px = img.at(y, x);
            px[0] = px[1] = px[2] = gray;
        }
    }

    // tinted instance masks
    for (std::size_t j = 0; j < image_masks.size(); ++j) {
        const Color c = instance_color(static_cast<int>(j));
        const MaskGrid& m = image_masks[j];
        for (int y = 0; y < std::min(img.height, m.height); ++y) {
            for (int x = 0; x < std::min(img.width, m.width); ++x) {
                if (!m.at(y, x, 0)) continue;
                std::uint8_t* px = img.at(y, x);
                px[0] = static_cast<std::uint8_t>((px[0] + 2 * c.r) / 3);
                px[1] = static_cast<std::uint8_t>((px[1] + 2 * c.g) / 3);
                px[2] = static_cast<std::uint8_t>((px[2] + 2 * c.b) / 3);
            }
        }
    }

    // skeletons on top
    for (std::size_t j = 0; j < instances.size(); ++j) {
        const Color c = instance_color(static_cast<int>(j));
        const PoseInstance& inst = instances[j];
        for (const KinematicGraph::Edge& e : graph.edges)
            if (e.from < e.to)  // draw each undirected edge once
                draw_line(img, inst.keypoints[e.from], inst.keypoints[e.to], c);
        for (const Point2D& kp : inst.keypoints)
            draw_dot(img, kp, Color{255, 255, 255}, 2);
    }
    return img;
}

}  // namespace personlab
