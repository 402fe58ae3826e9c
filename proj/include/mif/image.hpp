// SPDX-FileCopyrightText: (C) 2026 miftrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mif/error.hpp"

namespace mif {

/// Row-major single-channel image, luminance in [0,1].
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(int width, int height, float fill = 0.0f)
        : width_(width), height_(height), data_(checked_size(width, height), fill) {}
    GrayImage(int width, int height, std::vector<float> data) : width_(width), height_(height), data_(std::move(data)) {
        if (data_.size() != checked_size(width, height)) {
            throw DimensionMismatch("GrayImage data length must equal width * height");
        }
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return data_.empty(); }

    float& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    float at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

    const std::vector<float>& data() const noexcept { return data_; }
    std::vector<float>& data() noexcept { return data_; }

    /// Bilinear sample; false when (x, y) falls outside [0, w-1] x [0, h-1].
    bool sample(double x, double y, float& out) const noexcept {
        if (!(x >= 0.0 && y >= 0.0 && x <= width_ - 1 && y <= height_ - 1)) {
            return false;
        }
        const int x0 = std::min(static_cast<int>(x), width_ - 2 < 0 ? 0 : width_ - 2);
        const int y0 = std::min(static_cast<int>(y), height_ - 2 < 0 ? 0 : height_ - 2);
        const int x1 = std::min(x0 + 1, width_ - 1);
        const int y1 = std::min(y0 + 1, height_ - 1);
        const double fx = x - x0;
        const double fy = y - y0;
        const double top = at(x0, y0) * (1.0 - fx) + at(x1, y0) * fx;
        const double bot = at(x0, y1) * (1.0 - fx) + at(x1, y1) * fx;
        out = static_cast<float>(top * (1.0 - fy) + bot * fy);
        return true;
    }

private:
    static std::size_t checked_size(int w, int h) {
        if (w < 0 || h < 0) {
            throw InvalidArgument("image dimensions must be non-negative");
        }
        return static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<float> data_;
};

/// Interleaved 8-bit RGB image (used by the color-histogram feature provider).
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // size = 3 * width * height

    const std::uint8_t* pixel(int x, int y) const { return &data[3 * (static_cast<std::size_t>(y) * width + x)]; }
};

namespace detail {

inline void skip_pnm_space(std::istream& in) {
    while (true) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            return;
        }
    }
}

struct PnmHeader {
    std::string magic;
    int width = 0;
    int height = 0;
    int maxval = 0;
};

inline PnmHeader read_pnm_header(std::istream& in, const std::string& path) {
    PnmHeader h;
    in >> h.magic;
    skip_pnm_space(in);
    in >> h.width;
    skip_pnm_space(in);
    in >> h.height;
    skip_pnm_space(in);
    in >> h.maxval;
    if (!in || h.width <= 0 || h.height <= 0) {
        throw ParseError(path, 0, "malformed PNM header");
    }
    if (h.maxval != 255) {
        throw ParseError(path, 0, "only maxval 255 is supported");
    }
    in.get();  // single whitespace before raster
    return h;
}

}  // namespace detail

/// Reads a binary (P5) 8-bit PGM into [0,1] floats.
inline GrayImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open image: " + path);
    }
    const auto h = detail::read_pnm_header(in, path);
    if (h.magic != "P5") {
        throw ParseError(path, 0, "expected binary PGM (P5)");
    }
    std::vector<unsigned char> raw(static_cast<std::size_t>(h.width) * h.height);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
        throw ParseError(path, 0, "truncated PGM raster");
    }
    std::vector<float> data(raw.size());
    std::transform(raw.begin(), raw.end(), data.begin(), [](unsigned char v) { return v / 255.0f; });
    return GrayImage(h.width, h.height, std::move(data));
}

inline void write_pgm(const GrayImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write image: " + path);
    }
    out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
    std::vector<unsigned char> raw(img.data().size());
    std::transform(img.data().begin(), img.data().end(), raw.begin(), [](float v) {
        return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
    });
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

/// Reads a binary PPM (P6) or PGM (P5, replicated into three channels).
inline RgbImage read_pnm_rgb(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open image: " + path);
    }
    const auto h = detail::read_pnm_header(in, path);
    const int channels = h.magic == "P6" ? 3 : (h.magic == "P5" ? 1 : 0);
    if (channels == 0) {
        throw ParseError(path, 0, "expected P5 or P6");
    }
    std::vector<std::uint8_t> raw(static_cast<std::size_t>(h.width) * h.height * channels);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
        throw ParseError(path, 0, "truncated raster");
    }
    RgbImage img{h.width, h.height, {}};
    if (channels == 3) {
        img.data = std::move(raw);
    } else {
        img.data.resize(raw.size() * 3);
        for (std::size_t i = 0; i < raw.size(); ++i) {
            img.data[3 * i] = img.data[3 * i + 1] = img.data[3 * i + 2] = raw[i];
        }
    }
    return img;
}

/// Separable Gaussian blur with clamped borders. sigma <= 0 returns a copy.
inline GrayImage gaussian_blur(const GrayImage& src, double sigma) {
    if (sigma <= 0.0 || src.empty()) {
        return src;
    }
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(2 * radius + 1);
    double total = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
        total += kernel[i + radius];
    }
    for (double& k : kernel) {
        k /= total;
    }
    const int w = src.width();
    const int h = src.height();
    GrayImage tmp(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                acc += kernel[i + radius] * src.at(std::clamp(x + i, 0, w - 1), y);
            }
            tmp.at(x, y) = static_cast<float>(acc);
        }
    }
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                acc += kernel[i + radius] * tmp.at(x, std::clamp(y + i, 0, h - 1));
            }
            out.at(x, y) = static_cast<float>(acc);
        }
    }
    return out;
}

/// 2x box downsample (floor of odd dimensions).
inline GrayImage downsample2(const GrayImage& src) {
    const int w = std::max(1, src.width() / 2);
    const int h = std::max(1, src.height() / 2);
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int sx = std::min(2 * x, src.width() - 1);
            const int sy = std::min(2 * y, src.height() - 1);
            const int sx1 = std::min(sx + 1, src.width() - 1);
            const int sy1 = std::min(sy + 1, src.height() - 1);
            out.at(x, y) = 0.25f * (src.at(sx, sy) + src.at(sx1, sy) + src.at(sx, sy1) + src.at(sx1, sy1));
        }
    }
    return out;
}

/// Central-difference gradients (one-sided at the border).
inline void gradients(const GrayImage& src, GrayImage& gx, GrayImage& gy) {
    const int w = src.width();
    const int h = src.height();
    gx = GrayImage(w, h);
    gy = GrayImage(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int xl = std::max(x - 1, 0), xr = std::min(x + 1, w - 1);
            const int yu = std::max(y - 1, 0), yd = std::min(y + 1, h - 1);
            gx.at(x, y) = xr > xl ? (src.at(xr, y) - src.at(xl, y)) / static_cast<float>(xr - xl) : 0.0f;
            gy.at(x, y) = yd > yu ? (src.at(x, yd) - src.at(x, yu)) / static_cast<float>(yd - yu) : 0.0f;
        }
    }
}

}  // namespace mif
