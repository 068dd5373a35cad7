#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "strokepipe/image.hpp"

namespace testutil {

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("strokepipe_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

/// Hand-written binary PGM.
inline void write_raw_pgm(const std::filesystem::path& p, int w, int h, const std::vector<std::uint8_t>& px,
                          int maxval = 255) {
  std::string s = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n" + std::to_string(maxval) + "\n";
  s.append(px.begin(), px.end());
  write_bytes(p, s);
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline strokepipe::GrayImage image_from(int w, int h, int levels, std::vector<std::uint16_t> px) {
  return strokepipe::GrayImage(w, h, levels, std::move(px));
}

}  // namespace testutil
