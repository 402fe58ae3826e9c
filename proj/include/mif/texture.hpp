// SPDX-FileCopyrightText: (C) 2026 miftrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "mif/core_types.hpp"
#include "mif/image.hpp"

namespace mif {

/// Smooth procedural texture (sum of oriented sinusoids) evaluated in continuous
/// coordinates. Values lie in [0,1]. Rendering through an inverse warp gives exact
/// warped frames with no interpolation error.
class Texture {
public:
    explicit Texture(std::uint64_t seed, int components = 10, double min_wavelength = 12.0,
                     double max_wavelength = 64.0) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
        std::uniform_real_distribution<double> wl(min_wavelength, max_wavelength);
        std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
        std::uniform_real_distribution<double> amp(0.5, 1.0);
        waves_.reserve(components);
        double total = 0.0;
        for (int i = 0; i < components; ++i) {
            const double a = angle(rng);
            const double k = 2.0 * std::numbers::pi / wl(rng);
            Wave wv{k * std::cos(a), k * std::sin(a), phase(rng), amp(rng)};
            total += wv.amplitude;
            waves_.push_back(wv);
        }
        scale_ = total > 0.0 ? 0.5 / total : 0.0;
    }

    double operator()(double x, double y) const noexcept {
        double v = 0.0;
        for (const auto& w : waves_) {
            v += w.amplitude * std::sin(w.kx * x + w.ky * y + w.phase);
        }
        return 0.5 + scale_ * v;
    }

    /// Renders a frame where pixel p shows the texture at `image_to_texture(p)`.
    GrayImage render(int width, int height, const AffineTransform& image_to_texture) const {
        GrayImage img(width, height);
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                const auto q = image_to_texture.apply(x, y);
                img.at(x, y) = static_cast<float>((*this)(q[0], q[1]));
            }
        }
        return img;
    }

private:
    struct Wave {
        double kx, ky, phase, amplitude;
    };
    std::vector<Wave> waves_;
    double scale_ = 0.0;
};

}  // namespace mif
