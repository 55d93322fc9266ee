#pragma once

#include "attncsf/types.hpp"

#include <array>
#include <cstdint>
#include <string_view>

namespace attncsf {

/// Names of the built-in procedural scenes.
inline constexpr std::array<std::string_view, 4> kSceneNames = {"tulips", "city", "mountain", "forest"};

bool is_scene_name(std::string_view name);

/// Deterministic synthetic test scene in linear luminance, values within [lo, hi].
///   tulips   - scattered soft blobs over a textured field
///   city     - axis-aligned blocks with windows and sharp edges
///   mountain - fractal ridge line over a smooth sky gradient
///   forest   - dense vertical trunks with fine foliage noise
/// Throws DomainError for an unknown name.
LuminanceImage procedural_scene(std::string_view name, int width, int height, double lo = 5.0, double hi = 90.0,
                                std::uint64_t seed = 1);

} // namespace attncsf
