#include "amala/pgm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace amala::pgm {
namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string token(std::istream& in) {
  std::string out;
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      if (!out.empty()) break;
    } else {
      out.push_back(static_cast<char>(c));
    }
    c = in.get();
  }
  return out;
}

}  // namespace

std::uint8_t to_byte(double gray) {
  const double v = std::clamp(gray, 0.0, 2.0) * 127.5;
  return static_cast<std::uint8_t>(std::lround(v));
}

double from_byte(std::uint8_t b) { return static_cast<double>(b) / 127.5; }

void write(const std::string& path, const Vec& values, int width, int height) {
  if (values.size() != static_cast<Index>(width) * height) {
    throw std::invalid_argument("pgm::write: size mismatch");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "P5\n" << width << ' ' << height << "\n255\n";
  std::vector<char> bytes(static_cast<std::size_t>(values.size()));
  for (Index i = 0; i < values.size(); ++i) {
    bytes[static_cast<std::size_t>(i)] = static_cast<char>(to_byte(values[i]));
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

GrayImage read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  if (token(in) != "P5") throw std::runtime_error(path + ": not a binary PGM (P5)");
  GrayImage img;
  img.width = std::stoi(token(in));
  img.height = std::stoi(token(in));
  const int maxval = std::stoi(token(in));
  if (img.width <= 0 || img.height <= 0 || maxval <= 0 || maxval > 255) {
    throw std::runtime_error(path + ": unsupported PGM header");
  }
  const auto n = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
  std::vector<unsigned char> bytes(n);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) throw std::runtime_error(path + ": truncated pixel data");
  img.values.resize(static_cast<Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double scaled = maxval == 255 ? bytes[i] : std::round(255.0 * bytes[i] / maxval);
    img.values[static_cast<Index>(i)] = from_byte(static_cast<std::uint8_t>(scaled));
  }
  return img;
}

}  // namespace amala::pgm
