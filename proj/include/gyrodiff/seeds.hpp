// Per-purpose seeds derived from one base seed.
#pragma once

#include <cstdint>
#include <string_view>

namespace gyrodiff {

enum class SeedPurpose : std::uint64_t {
    dataset_noise = 1,
    denoiser_training = 2,
    heading_training = 3,
    diffusion_eps = 4,
};

/// splitmix64 finalizer over (base, purpose); distinct purposes give
/// unrelated streams even for adjacent base seeds.
constexpr std::uint64_t derive_seed(std::uint64_t base, SeedPurpose purpose) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(purpose) + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::string_view to_string(SeedPurpose p) {
    switch (p) {
    case SeedPurpose::dataset_noise:
        return "dataset_noise";
    case SeedPurpose::denoiser_training:
        return "denoiser_training";
    case SeedPurpose::heading_training:
        return "heading_training";
    case SeedPurpose::diffusion_eps:
        return "diffusion_eps";
    }
    return "unknown";
}

} // namespace gyrodiff
