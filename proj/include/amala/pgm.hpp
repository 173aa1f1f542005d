#pragma once

#include <cstdint>
#include <string>

#include "amala/model.hpp"

namespace amala::pgm {

/// Gray levels in [0, 2] map linearly onto 0..255 (clamped, rounded).
std::uint8_t to_byte(double gray);
double from_byte(std::uint8_t b);

struct GrayImage {
  int width = 0;
  int height = 0;
  Vec values;  ///< row-major, gray range [0, 2]
};

/// Binary 8-bit PGM (P5).
void write(const std::string& path, const Vec& values, int width, int height);
GrayImage read(const std::string& path);

}  // namespace amala::pgm
