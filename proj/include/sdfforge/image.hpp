#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace sdfforge {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  constexpr bool operator==(const Rgb&) const = default;
};

struct Resolution {
  int width = 0;
  int height = 0;
  constexpr bool operator==(const Resolution&) const = default;
  constexpr std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
};

// 8-bit interleaved RGB, row-major, origin top-left.
class Image {
 public:
  Image() = default;
  Image(Resolution res, Rgb fill = {});

  Resolution resolution() const { return res_; }
  int width() const { return res_.width; }
  int height() const { return res_.height; }
  bool empty() const { return data_.empty(); }

  Rgb at(int x, int y) const {
    const std::uint8_t* p = &data_[offset(x, y)];
    return {p[0], p[1], p[2]};
  }
  void set(int x, int y, Rgb c) {
    std::uint8_t* p = &data_[offset(x, y)];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }

  const std::vector<std::uint8_t>& bytes() const { return data_; }
  std::vector<std::uint8_t>& bytes() { return data_; }

  bool operator==(const Image&) const = default;

 private:
  std::size_t offset(int x, int y) const { return (static_cast<std::size_t>(y) * res_.width + x) * 3; }

  Resolution res_{};
  std::vector<std::uint8_t> data_;
};

// Throws IoError.
void write_png(const std::filesystem::path& path, const Image& image);
// Accepts gray, gray+alpha, RGB and RGBA 8/16-bit; alpha is dropped.
Image read_png(const std::filesystem::path& path);

}  // namespace sdfforge
