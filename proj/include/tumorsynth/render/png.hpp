#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace tumorsynth::render {

// 8-bit PNG (grayscale when channels == 1, RGB when 3), rows top to bottom.
std::vector<std::uint8_t> encode_png(std::span<const std::uint8_t> pixels, std::size_t width,
                                     std::size_t height, int channels = 1);

void write_png(const std::filesystem::path& path, std::span<const std::uint8_t> pixels, std::size_t width,
               std::size_t height, int channels = 1);

}  // namespace tumorsynth::render
