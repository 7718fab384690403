#pragma once

#include <filesystem>
#include <stdexcept>

#include "helipad/image.hpp"

namespace helipad {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary PGM (P5, maxval 255).
GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage& img);
/// Masks are stored as {0, 255}.
void write_pgm(const std::filesystem::path& path, const BinaryImage& mask);

/// Binary PPM (P6, maxval 255).
RgbImage read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const RgbImage& img);

/// Reads P5 or P6; colour input is converted to luma.
GrayImage read_image(const std::filesystem::path& path);

}  // namespace helipad
