#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fire/tensor.hpp"

namespace fire {

enum class AugmentKind { ColorJitter, GaussianBlur, GaussianNoise, ShrinkPad };

std::string augment_kind_name(AugmentKind k);
AugmentKind augment_kind_from_name(const std::string& name);

// Image corruption operator; deterministic given the per-sample seed, output
// clamped to [0,1] with the input shape preserved.
struct Augmentation {
    AugmentKind kind = AugmentKind::GaussianBlur;

    double brightness = 0.2;  // jitter: factor 1 +/- brightness
    double contrast = 0.2;    // jitter: factor 1 +/- contrast

    int blur_kernel = 3;
    double blur_sigma = 1.0;

    double noise_sigma = 0.05;

    double shrink_ratio = 0.9;
};

Augmentation color_jitter(double brightness = 0.2, double contrast = 0.2);
Augmentation gaussian_blur(int kernel = 3, double sigma = 1.0);
Augmentation gaussian_noise(double sigma = 0.05);
Augmentation shrink_pad(double ratio = 0.9);

Tensor augment(const Augmentation& a, const Tensor& x, std::uint64_t seed);

// Downscale by `shrink_ratio` (bilinear) and zero-pad back to the original
// size at a seed-determined offset.
Tensor shrinkpad(const Tensor& x, double shrink_ratio, std::uint64_t seed);

// Left-to-right composition; per-operator seeds derived from `seed`.
using AugmentChain = std::vector<Augmentation>;
Tensor apply_chain(const AugmentChain& chain, const Tensor& x, std::uint64_t seed);

// jitter(0.2, 0.2) then blur(3x3, sigma 1).
AugmentChain default_augment_chain();

}  // namespace fire
