#pragma once

#include <filesystem>

#include "inscribin/raster.hpp"

namespace inscribin {

// Color inputs are converted to grayscale on load. Anything OpenCV can decode
// is accepted (PNG, TIFF, JPEG, ...).
GrayImage read_gray(const std::filesystem::path& path);

// Masks are stored as single-channel {0, 255}; any nonzero pixel is text.
BinaryMask read_mask(const std::filesystem::path& path);

void write_gray(const std::filesystem::path& path, const GrayImage& img);
void write_mask(const std::filesystem::path& path, const BinaryMask& mask);
// Probabilities scaled to [0, 255] and rounded.
void write_probability(const std::filesystem::path& path, const ProbabilityMap& prob);

// Input rendered in color with predicted foreground tinted red.
void write_overlay(const std::filesystem::path& path, const GrayImage& img, const BinaryMask& mask);

}  // namespace inscribin
