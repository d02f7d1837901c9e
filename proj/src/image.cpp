#include "splatprop/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace splatprop {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
  throw std::runtime_error(path.string() + ": " + what);
}

// Skips whitespace/comments and reads one whitespace-delimited token.
std::string next_token(std::istream& in) {
  std::string tok;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      std::string line;
      std::getline(in, line);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    tok.push_back(c);
    while (in.get(c) && !std::isspace(static_cast<unsigned char>(c))) tok.push_back(c);
    return tok;
  }
  return tok;
}

uint8_t quantize(double v) {
  const double clamped = std::clamp(v, 0.0, 1.0);
  return static_cast<uint8_t>(std::lround(clamped * 255.0));
}

void write_pfm_impl(const std::filesystem::path& path, int width, int height, int channels,
                    const std::vector<float>& rows_top_down) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out << (channels == 1 ? "Pf" : "PF") << "\n" << width << " " << height << "\n" << "-1.0" << "\n";
  // PFM stores the bottom row first.
  const size_t row = size_t(width) * channels;
  for (int y = height - 1; y >= 0; --y)
    out.write(reinterpret_cast<const char*>(rows_top_down.data() + size_t(y) * row),
              std::streamsize(row * sizeof(float)));
  if (!out) fail(path, "short write");
}

std::vector<float> read_pfm_impl(const std::filesystem::path& path, int* width, int* height,
                                 int* channels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  const std::string magic = next_token(in);
  if (magic == "PF")
    *channels = 3;
  else if (magic == "Pf")
    *channels = 1;
  else
    fail(path, "not a PFM file (bad magic '" + magic + "')");
  try {
    *width = std::stoi(next_token(in));
    *height = std::stoi(next_token(in));
  } catch (const std::exception&) {
    fail(path, "malformed PFM dimensions");
  }
  if (*width <= 0 || *height <= 0) fail(path, "malformed PFM dimensions");
  const double scale = std::stod(next_token(in));
  if (scale >= 0.0) fail(path, "big-endian PFM not supported");
  // next_token consumed the single whitespace after the scale; the payload
  // starts right here.

  const size_t row = size_t(*width) * *channels;
  std::vector<float> top_down(row * *height);
  for (int y = *height - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(top_down.data() + size_t(y) * row),
            std::streamsize(row * sizeof(float)));
    if (!in) fail(path, "truncated PFM payload at row " + std::to_string(*height - 1 - y));
  }
  return top_down;
}

}  // namespace

GrayImage luma(const ColorImage& image) {
  GrayImage out(image.width, image.height);
  for (size_t i = 0; i < image.data.size(); ++i) {
    const Vec3& c = image.data[i];
    out.data[i] = 0.299 * c.x() + 0.587 * c.y() + 0.114 * c.z();
  }
  return out;
}

template <typename T>
static bool sample_bilinear_impl(const Grid<T>& image, const Vec2& p, T* value) {
  const int x0 = static_cast<int>(std::floor(p.x()));
  const int y0 = static_cast<int>(std::floor(p.y()));
  if (x0 < 0 || y0 < 0 || x0 + 1 >= image.width || y0 + 1 >= image.height) return false;
  const double ax = p.x() - x0;
  const double ay = p.y() - y0;
  *value = (1.0 - ax) * (1.0 - ay) * image.at(x0, y0) + ax * (1.0 - ay) * image.at(x0 + 1, y0) +
           (1.0 - ax) * ay * image.at(x0, y0 + 1) + ax * ay * image.at(x0 + 1, y0 + 1);
  return true;
}

bool sample_bilinear(const GrayImage& image, const Vec2& p, double* value) {
  return sample_bilinear_impl(image, p, value);
}

bool sample_bilinear(const ColorImage& image, const Vec2& p, Vec3* value) {
  return sample_bilinear_impl(image, p, value);
}

void write_ppm(const std::filesystem::path& path, const ColorImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  std::vector<uint8_t> row(size_t(image.width) * 3);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const Vec3& c = image.at(x, y);
      row[size_t(x) * 3 + 0] = quantize(c.x());
      row[size_t(x) * 3 + 1] = quantize(c.y());
      row[size_t(x) * 3 + 2] = quantize(c.z());
    }
    out.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size()));
  }
  if (!out) fail(path, "short write");
}

ColorImage read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  if (next_token(in) != "P6") fail(path, "not a binary PPM (P6)");
  int width = 0, height = 0, maxval = 0;
  try {
    width = std::stoi(next_token(in));
    height = std::stoi(next_token(in));
    maxval = std::stoi(next_token(in));
  } catch (const std::exception&) {
    fail(path, "malformed PPM header");
  }
  if (width <= 0 || height <= 0 || maxval != 255) fail(path, "unsupported PPM header");
  ColorImage image(width, height);
  std::vector<uint8_t> row(size_t(width) * 3);
  for (int y = 0; y < height; ++y) {
    in.read(reinterpret_cast<char*>(row.data()), std::streamsize(row.size()));
    if (!in) fail(path, "truncated PPM payload at row " + std::to_string(y));
    for (int x = 0; x < width; ++x)
      image.at(x, y) = Vec3(row[size_t(x) * 3 + 0], row[size_t(x) * 3 + 1], row[size_t(x) * 3 + 2]) / 255.0;
  }
  return image;
}

void write_pfm(const std::filesystem::path& path, const GrayImage& image) {
  std::vector<float> buf(image.data.size());
  for (size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>(image.data[i]);
  write_pfm_impl(path, image.width, image.height, 1, buf);
}

void write_pfm(const std::filesystem::path& path, const ColorImage& image) {
  std::vector<float> buf(image.data.size() * 3);
  for (size_t i = 0; i < image.data.size(); ++i) {
    buf[i * 3 + 0] = static_cast<float>(image.data[i].x());
    buf[i * 3 + 1] = static_cast<float>(image.data[i].y());
    buf[i * 3 + 2] = static_cast<float>(image.data[i].z());
  }
  write_pfm_impl(path, image.width, image.height, 3, buf);
}

GrayImage read_pfm_gray(const std::filesystem::path& path) {
  int w = 0, h = 0, c = 0;
  const std::vector<float> buf = read_pfm_impl(path, &w, &h, &c);
  if (c != 1) fail(path, "expected a 1-channel PFM");
  GrayImage image(w, h);
  for (size_t i = 0; i < image.data.size(); ++i) image.data[i] = buf[i];
  return image;
}

ColorImage read_pfm_color(const std::filesystem::path& path) {
  int w = 0, h = 0, c = 0;
  const std::vector<float> buf = read_pfm_impl(path, &w, &h, &c);
  if (c != 3) fail(path, "expected a 3-channel PFM");
  ColorImage image(w, h);
  for (size_t i = 0; i < image.data.size(); ++i)
    image.data[i] = Vec3(buf[i * 3 + 0], buf[i * 3 + 1], buf[i * 3 + 2]);
  return image;
}

}  // namespace splatprop
