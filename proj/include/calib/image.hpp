#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "calib/errors.hpp"

namespace calib {

/// Row-major grayscale raster with intensities in [0, 1].
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    GrayImage() = default;
    GrayImage(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

    double& at(int x, int y) { return data[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)]; }
    double at(int x, int y) const { return data[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)]; }
};

// -------------------------------------------------------- PGM (P5, 8-bit)

namespace detail {
inline int pgm_next_token(std::istream& in, std::string& tok) {
    tok.clear();
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    while (c != EOF && !std::isspace(c)) {
        tok.push_back(static_cast<char>(c));
        c = in.get();
    }
    return tok.empty() ? EOF : 0;
}
} // namespace detail

inline GrayImage read_pgm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open image: " + path);
    std::string tok;
    if (detail::pgm_next_token(f, tok) == EOF || tok != "P5")
        throw ParseError("not a P5 PGM file: " + path);
    long vals[3];
    for (int i = 0; i < 3; ++i) {
        if (detail::pgm_next_token(f, tok) == EOF) throw ParseError("truncated PGM header");
        vals[i] = std::strtol(tok.c_str(), nullptr, 10);
    }
    const long w = vals[0], h = vals[1], maxval = vals[2];
    if (w <= 0 || h <= 0) throw ParseError("bad PGM dimensions");
    if (maxval <= 0 || maxval > 255) throw ParseError("only 8-bit PGM supported");
    GrayImage img(static_cast<int>(w), static_cast<int>(h));
    std::vector<unsigned char> raw(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    f.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (f.gcount() != static_cast<std::streamsize>(raw.size()))
        throw ParseError("truncated PGM pixel data");
    const double s = 1.0 / static_cast<double>(maxval);
    for (std::size_t i = 0; i < raw.size(); ++i) img.data[i] = raw[i] * s;
    return img;
}

inline void write_pgm(const GrayImage& img, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open image for writing: " + path);
    f << "P5\n" << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> raw(img.data.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double v = std::clamp(img.data[i], 0.0, 1.0);
        raw[i] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    f.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

// ------------------------------------------------------------------- PNG
// Minimal reader: 8-bit gray / gray+alpha / RGB / RGBA / palette, no
// interlace. RGB is reduced with the usual luma weights.

namespace detail {

inline std::uint32_t be32(const unsigned char* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

inline std::vector<unsigned char> zlib_inflate(const std::vector<unsigned char>& in,
                                               std::size_t expected) {
    std::vector<unsigned char> out(expected);
    uLongf dest_len = static_cast<uLongf>(expected);
    const int rc = ::uncompress(out.data(), &dest_len, in.data(), static_cast<uLong>(in.size()));
    if (rc != Z_OK || dest_len != expected) throw ParseError("PNG: corrupt zlib stream");
    return out;
}

inline int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

} // namespace detail

inline GrayImage read_png(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open image: " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                     std::istreambuf_iterator<char>());
    static const unsigned char sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    if (bytes.size() < 8 || std::memcmp(bytes.data(), sig, 8) != 0)
        throw ParseError("not a PNG file: " + path);

    std::size_t pos = 8;
    std::uint32_t w = 0, h = 0;
    int bit_depth = 0, color_type = 0, interlace = 0;
    std::vector<unsigned char> idat;
    std::vector<std::array<unsigned char, 3>> palette;
    bool seen_ihdr = false;
    while (pos + 8 <= bytes.size()) {
        const std::uint32_t len = detail::be32(&bytes[pos]);
        const char* type = reinterpret_cast<const char*>(&bytes[pos + 4]);
        const std::size_t data = pos + 8;
        if (data + len + 4 > bytes.size()) throw ParseError("PNG: truncated chunk");
        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw ParseError("PNG: bad IHDR");
            w = detail::be32(&bytes[data]);
            h = detail::be32(&bytes[data + 4]);
            bit_depth = bytes[data + 8];
            color_type = bytes[data + 9];
            interlace = bytes[data + 12];
            seen_ihdr = true;
        } else if (std::memcmp(type, "PLTE", 4) == 0) {
            for (std::uint32_t i = 0; i + 2 < len; i += 3)
                palette.push_back({bytes[data + i], bytes[data + i + 1], bytes[data + i + 2]});
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), bytes.begin() + static_cast<long>(data),
                        bytes.begin() + static_cast<long>(data + len));
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            break;
        }
        pos = data + len + 4;
    }
    if (!seen_ihdr || w == 0 || h == 0) throw ParseError("PNG: missing IHDR");
    if (bit_depth != 8) throw ParseError("PNG: only 8-bit depth supported");
    if (interlace != 0) throw ParseError("PNG: interlaced images unsupported");
    int channels;
    switch (color_type) {
        case 0: channels = 1; break;
        case 2: channels = 3; break;
        case 3: channels = 1; break;
        case 4: channels = 2; break;
        case 6: channels = 4; break;
        default: throw ParseError("PNG: unsupported color type");
    }
    const std::size_t stride = static_cast<std::size_t>(w) * static_cast<std::size_t>(channels);
    const std::size_t expected = (stride + 1) * h;
    const std::vector<unsigned char> raw = detail::zlib_inflate(idat, expected);

    std::vector<unsigned char> img(stride * h);
    for (std::uint32_t y = 0; y < h; ++y) {
        const unsigned char filter = raw[(stride + 1) * y];
        const unsigned char* src = &raw[(stride + 1) * y + 1];
        unsigned char* dst = &img[stride * y];
        const unsigned char* prev = y > 0 ? &img[stride * (y - 1)] : nullptr;
        for (std::size_t i = 0; i < stride; ++i) {
            const int a = i >= static_cast<std::size_t>(channels) ? dst[i - static_cast<std::size_t>(channels)] : 0;
            const int b = prev ? prev[i] : 0;
            const int c = (prev && i >= static_cast<std::size_t>(channels)) ? prev[i - static_cast<std::size_t>(channels)] : 0;
            int v = src[i];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += detail::paeth(a, b, c); break;
                default: throw ParseError("PNG: bad filter byte");
            }
            dst[i] = static_cast<unsigned char>(v & 0xFF);
        }
    }

    GrayImage out(static_cast<int>(w), static_cast<int>(h));
    for (std::uint32_t y = 0; y < h; ++y) {
        for (std::uint32_t x = 0; x < w; ++x) {
            const unsigned char* px = &img[stride * y + static_cast<std::size_t>(x) * static_cast<std::size_t>(channels)];
            double v;
            if (color_type == 0 || color_type == 4) {
                v = px[0] / 255.0;
            } else if (color_type == 3) {
                if (px[0] >= palette.size()) throw ParseError("PNG: palette index out of range");
                const auto& rgb = palette[px[0]];
                v = (0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2]) / 255.0;
            } else {
                v = (0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]) / 255.0;
            }
            out.at(static_cast<int>(x), static_cast<int>(y)) = v;
        }
    }
    return out;
}

inline GrayImage read_image(const std::string& path) {
    if (path.size() >= 4) {
        std::string ext = path.substr(path.size() - 4);
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (ext == ".png") return read_png(path);
    }
    return read_pgm(path);
}

/// Area-averaging resample (exact box filter, handles non-integer ratios).
inline GrayImage downsample(const GrayImage& src, int dst_w, int dst_h) {
    if (src.width == dst_w && src.height == dst_h) return src;
    GrayImage dst(dst_w, dst_h);
    const double sx = static_cast<double>(src.width) / dst_w;
    const double sy = static_cast<double>(src.height) / dst_h;
    for (int oy = 0; oy < dst_h; ++oy) {
        const double y0 = oy * sy, y1 = (oy + 1) * sy;
        const int iy0 = static_cast<int>(std::floor(y0));
        const int iy1 = std::min(static_cast<int>(std::ceil(y1)), src.height);
        for (int ox = 0; ox < dst_w; ++ox) {
            const double x0 = ox * sx, x1 = (ox + 1) * sx;
            const int ix0 = static_cast<int>(std::floor(x0));
            const int ix1 = std::min(static_cast<int>(std::ceil(x1)), src.width);
            double acc = 0.0, area = 0.0;
            for (int iy = iy0; iy < iy1; ++iy) {
                const double hy = std::min<double>(iy + 1, y1) - std::max<double>(iy, y0);
                for (int ix = ix0; ix < ix1; ++ix) {
                    const double hx = std::min<double>(ix + 1, x1) - std::max<double>(ix, x0);
                    acc += src.at(ix, iy) * hx * hy;
                    area += hx * hy;
                }
            }
            dst.at(ox, oy) = area > 0.0 ? acc / area : 0.0;
        }
    }
    return dst;
}

} // namespace calib
