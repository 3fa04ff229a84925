#include "anomforge/image.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include <fmt/format.h>
#include <openssl/evp.h>
#include <png.h>

#include "anomforge/error.hpp"

namespace anomforge {

nlohmann::json to_json(const Rect& rect) {
  return {{"x", rect.x}, {"y", rect.y}, {"w", rect.width}, {"h", rect.height}};
}

Rect rect_from_json(const nlohmann::json& doc) {
  try {
    const int w = doc.contains("w") ? doc.at("w").get<int>() : doc.at("width").get<int>();
    const int h = doc.contains("h") ? doc.at("h").get<int>() : doc.at("height").get<int>();
    return {doc.at("x").get<int>(), doc.at("y").get<int>(), w, h};
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(fmt::format("rectangle: {}", e.what()));
  }
}

RasterImage::RasterImage(int width, int height, Rgb fill_color) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw validation_error("image dimensions must be non-negative");
  pixels_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
  for (std::size_t i = 0; i < pixels_.size(); i += 3) {
    pixels_[i] = fill_color.r;
    pixels_[i + 1] = fill_color.g;
    pixels_[i + 2] = fill_color.b;
  }
}

RasterImage::RasterImage(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width < 0 || height < 0) throw validation_error("image dimensions must be non-negative");
  if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3)
    throw validation_error(fmt::format("pixel buffer has {} bytes, expected {}x{}x3", pixels_.size(),
                                       width, height));
}

Rgb RasterImage::at(int x, int y) const {
  const auto o = offset(x, y);
  return {pixels_[o], pixels_[o + 1], pixels_[o + 2]};
}

void RasterImage::set(int x, int y, Rgb color) {
  const auto o = offset(x, y);
  pixels_[o] = color.r;
  pixels_[o + 1] = color.g;
  pixels_[o + 2] = color.b;
}

void RasterImage::fill(const Rect& rect, Rgb color) {
  if (!bounds().contains(rect)) throw validation_error("fill rectangle outside image bounds");
  for (int y = rect.y; y < rect.bottom(); ++y)
    for (int x = rect.x; x < rect.right(); ++x) set(x, y, color);
}

RasterImage RasterImage::crop(const Rect& rect) const {
  if (rect.empty() || !bounds().contains(rect))
    throw validation_error(fmt::format("crop rectangle ({},{},{},{}) outside {}x{} image", rect.x,
                                       rect.y, rect.width, rect.height, width_, height_));
  std::vector<std::uint8_t> out;
  out.reserve(static_cast<std::size_t>(rect.area()) * 3);
  for (int y = rect.y; y < rect.bottom(); ++y) {
    const auto row = pixels_.begin() + static_cast<std::ptrdiff_t>(offset(rect.x, y));
    out.insert(out.end(), row, row + static_cast<std::ptrdiff_t>(rect.width) * 3);
  }
  return {rect.width, rect.height, std::move(out)};
}

void RasterImage::paste(const RasterImage& patch, Point origin) {
  const Rect target{origin.x, origin.y, patch.width(), patch.height()};
  if (!bounds().contains(target)) throw validation_error("paste target outside image bounds");
  for (int y = 0; y < patch.height(); ++y) {
    const auto src = patch.pixels_.begin() + static_cast<std::ptrdiff_t>(patch.offset(0, y));
    std::copy(src, src + static_cast<std::ptrdiff_t>(patch.width()) * 3,
              pixels_.begin() + static_cast<std::ptrdiff_t>(offset(origin.x, origin.y + y)));
  }
}

std::vector<std::uint8_t> encode_png(const RasterImage& image) {
  if (image.empty()) throw validation_error("cannot encode an empty image");
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width());
  png.height = static_cast<png_uint_32>(image.height());
  png.format = PNG_FORMAT_RGB;

  png.flags = PNG_IMAGE_FLAG_FAST;

  // One pass into a worst-case buffer instead of a sizing pass plus a write.
  png_alloc_size_t size = PNG_IMAGE_PNG_SIZE_MAX(png);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, image.pixels().data(), 0, nullptr))
    throw io_error(fmt::format("png encode failed: {}", png.message));
  out.resize(size);
  return out;
}

RasterImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size()))
    throw parse_error(fmt::format("png decode failed: {}", png.message));
  png.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, pixels.data(), 0, nullptr)) {
    png_image_free(&png);
    throw parse_error(fmt::format("png decode failed: {}", png.message));
  }
  return {static_cast<int>(png.width), static_cast<int>(png.height), std::move(pixels)};
}

RasterImage read_png(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error(fmt::format("cannot open image '{}'", path.string()));
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_png(bytes);
  } catch (const Error& e) {
    throw Error(e.kind(), fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_png(const RasterImage& image, const std::filesystem::path& path) {
  const auto bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error(fmt::format("cannot write image '{}'", path.string()));
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw io_error(fmt::format("failed writing image '{}'", path.string()));
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  std::string clean;
  clean.reserve(text.size());
  for (char c : text)
    if (c != '\n' && c != '\r' && c != ' ' && c != '\t') clean.push_back(c);
  if (clean.size() % 4 != 0) throw parse_error("base64 payload length is not a multiple of 4");
  std::vector<std::uint8_t> out(clean.size() / 4 * 3);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(clean.data()),
                                static_cast<int>(clean.size()));
  if (n < 0) throw parse_error("invalid base64 payload");
  std::size_t padding = 0;
  if (!clean.empty() && clean.back() == '=') ++padding;
  if (clean.size() > 1 && clean[clean.size() - 2] == '=') ++padding;
  out.resize(static_cast<std::size_t>(n) - padding);
  return out;
}

}  // namespace anomforge
