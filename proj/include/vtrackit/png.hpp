#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vtrackit {

// Minimal RGB8 image with a zlib-backed PNG encoder.
class Image {
 public:
  Image(int width, int height, std::uint8_t r = 255, std::uint8_t g = 255,
        std::uint8_t b = 255);

  int width() const { return width_; }
  int height() const { return height_; }

  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);
  void fill_rect(int x0, int y0, int x1, int y1, std::uint8_t r, std::uint8_t g,
                 std::uint8_t b);
  void draw_line(double x0, double y0, double x1, double y1, double thickness,
                 std::uint8_t r, std::uint8_t g, std::uint8_t b);

  std::vector<std::uint8_t> encode_png() const;
  void write_png(const std::string& path) const;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> pixels_;  // RGB, row-major
};

}  // namespace vtrackit
