#include "fire/augment.hpp"

#include <algorithm>
#include <cmath>

#include "fire/errors.hpp"
#include "fire/rng.hpp"

namespace fire {

std::string augment_kind_name(AugmentKind k) {
    switch (k) {
        case AugmentKind::ColorJitter: return "color_jitter";
        case AugmentKind::GaussianBlur: return "gaussian_blur";
        case AugmentKind::GaussianNoise: return "gaussian_noise";
        case AugmentKind::ShrinkPad: return "shrink_pad";
    }
    return "?";
}

AugmentKind augment_kind_from_name(const std::string& name) {
    if (name == "color_jitter") return AugmentKind::ColorJitter;
    if (name == "gaussian_blur") return AugmentKind::GaussianBlur;
    if (name == "gaussian_noise") return AugmentKind::GaussianNoise;
    if (name == "shrink_pad") return AugmentKind::ShrinkPad;
    throw ParamError("unknown augmentation kind: " + name);
}

Augmentation color_jitter(double brightness, double contrast) {
    Augmentation a;
    a.kind = AugmentKind::ColorJitter;
    a.brightness = brightness;
    a.contrast = contrast;
    return a;
}

Augmentation gaussian_blur(int kernel, double sigma) {
    Augmentation a;
    a.kind = AugmentKind::GaussianBlur;
    a.blur_kernel = kernel;
    a.blur_sigma = sigma;
    return a;
}

Augmentation gaussian_noise(double sigma) {
    Augmentation a;
    a.kind = AugmentKind::GaussianNoise;
    a.noise_sigma = sigma;
    return a;
}

Augmentation shrink_pad(double ratio) {
    Augmentation a;
    a.kind = AugmentKind::ShrinkPad;
    a.shrink_ratio = ratio;
    return a;
}

namespace {

void check_image(const Tensor& x) {
    if (x.shape.size() != 3) throw ParamError("augmentation expects {C,H,W} input, got " + shape_str(x.shape));
}

Tensor jitter_image(const Augmentation& a, const Tensor& x, std::uint64_t seed) {
    if (a.brightness < 0.0 || a.brightness >= 1.0 || a.contrast < 0.0 || a.contrast >= 1.0)
        throw ParamError("jitter ranges must be in [0,1)");
    Rng rng(seed);
    const double fb = 1.0 + rng.uniform(-a.brightness, a.brightness);
    const double fc = 1.0 + rng.uniform(-a.contrast, a.contrast);

    Tensor out = x;
    double mean = 0.0;
    for (auto& v : out.data) {
        v = static_cast<float>(v * fb);
        mean += v;
    }
    mean /= static_cast<double>(out.numel());
    for (auto& v : out.data) v = std::clamp(static_cast<float>((v - mean) * fc + mean), 0.0f, 1.0f);
    return out;
}

// Normalized Gaussian kernel; replicate padding at the borders.
Tensor blur_image(const Augmentation& a, const Tensor& x) {
    if (a.blur_kernel < 1 || a.blur_kernel % 2 == 0) throw ParamError("blur kernel must be odd and >= 1");
    if (a.blur_sigma < 0.0) throw ParamError("blur sigma must be >= 0");
    if (a.blur_kernel == 1 || a.blur_sigma == 0.0) return x;

    const int k = a.blur_kernel;
    const int r = k / 2;
    std::vector<double> kernel(static_cast<std::size_t>(k) * k);
    double sum = 0.0;
    for (int ky = -r; ky <= r; ++ky)
        for (int kx = -r; kx <= r; ++kx) {
            const double v = std::exp(-(ky * ky + kx * kx) / (2.0 * a.blur_sigma * a.blur_sigma));
            kernel[(ky + r) * k + (kx + r)] = v;
            sum += v;
        }
    for (auto& v : kernel) v /= sum;

    const int h = x.height(), w = x.width();
    Tensor out = x;
    for (int c = 0; c < x.shape[0]; ++c) {
        for (int y = 0; y < h; ++y) {
            for (int px = 0; px < w; ++px) {
                double acc = 0.0;
                for (int ky = -r; ky <= r; ++ky) {
                    const int sy = std::clamp(y + ky, 0, h - 1);
                    for (int kx = -r; kx <= r; ++kx) {
                        const int sx = std::clamp(px + kx, 0, w - 1);
                        acc += kernel[(ky + r) * k + (kx + r)] * x.at(c, sy, sx);
                    }
                }
                out.at(c, y, px) = std::clamp(static_cast<float>(acc), 0.0f, 1.0f);
            }
        }
    }
    return out;
}

Tensor noise_image(const Augmentation& a, const Tensor& x, std::uint64_t seed) {
    if (a.noise_sigma < 0.0) throw ParamError("noise sigma must be >= 0");
    if (a.noise_sigma == 0.0) return x;
    Rng rng(seed);
    Tensor out = x;
    for (auto& v : out.data) v = std::clamp(static_cast<float>(v + rng.normal(0.0, a.noise_sigma)), 0.0f, 1.0f);
    return out;
}

float sample_bilinear_clamped(const Tensor& img, int c, double sy, double sx) {
    const int h = img.height(), w = img.width();
    sy = std::clamp(sy, 0.0, static_cast<double>(h - 1));
    sx = std::clamp(sx, 0.0, static_cast<double>(w - 1));
    const int y0 = static_cast<int>(std::floor(sy));
    const int x0 = static_cast<int>(std::floor(sx));
    const int y1 = std::min(y0 + 1, h - 1);
    const int x1 = std::min(x0 + 1, w - 1);
    const double fy = sy - y0;
    const double fx = sx - x0;
    const double v = (1.0 - fy) * ((1.0 - fx) * img.at(c, y0, x0) + fx * img.at(c, y0, x1)) +
                     fy * ((1.0 - fx) * img.at(c, y1, x0) + fx * img.at(c, y1, x1));
    return static_cast<float>(v);
}

}  // namespace

Tensor shrinkpad(const Tensor& x, double shrink_ratio, std::uint64_t seed) {
    check_image(x);
    if (shrink_ratio <= 0.0 || shrink_ratio > 1.0) throw ParamError("shrink ratio must be in (0,1]");
    const int h = x.height(), w = x.width();
    const int sh = std::max(1, static_cast<int>(std::lround(h * shrink_ratio)));
    const int sw = std::max(1, static_cast<int>(std::lround(w * shrink_ratio)));

    Rng rng(seed);
    const int off_y = (h == sh) ? 0 : rng.uniform_int(h - sh + 1);
    const int off_x = (w == sw) ? 0 : rng.uniform_int(w - sw + 1);

    Tensor out = Tensor::zeros(x.shape);
    const double sy_scale = static_cast<double>(h) / sh;
    const double sx_scale = static_cast<double>(w) / sw;
    for (int c = 0; c < x.shape[0]; ++c) {
        for (int y = 0; y < sh; ++y) {
            for (int px = 0; px < sw; ++px) {
                const double src_y = (y + 0.5) * sy_scale - 0.5;
                const double src_x = (px + 0.5) * sx_scale - 0.5;
                out.at(c, off_y + y, off_x + px) =
                    std::clamp(sample_bilinear_clamped(x, c, src_y, src_x), 0.0f, 1.0f);
            }
        }
    }
    return out;
}

Tensor augment(const Augmentation& a, const Tensor& x, std::uint64_t seed) {
    check_image(x);
    switch (a.kind) {
        case AugmentKind::ColorJitter: return jitter_image(a, x, seed);
        case AugmentKind::GaussianBlur: return blur_image(a, x);
        case AugmentKind::GaussianNoise: return noise_image(a, x, seed);
        case AugmentKind::ShrinkPad: return shrinkpad(x, a.shrink_ratio, seed);
    }
    throw ParamError("unreachable augmentation kind");
}

Tensor apply_chain(const AugmentChain& chain, const Tensor& x, std::uint64_t seed) {
    Tensor cur = x;
    for (std::size_t i = 0; i < chain.size(); ++i) cur = augment(chain[i], cur, derive_seed(seed, i));
    return cur;
}

AugmentChain default_augment_chain() { return {color_jitter(0.2, 0.2), gaussian_blur(3, 1.0)}; }

}  // namespace fire
