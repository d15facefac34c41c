#include "vprobe/png_io.hpp"

#include <png.h>

#include <cstring>
#include <fstream>
#include <iterator>

#include "vprobe/error.hpp"

namespace vprobe {
namespace {

void on_write(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void on_flush(png_structp) {}

struct ReadCursor {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

void on_read(png_structp png, png_bytep data, png_size_t length) {
  auto* cursor = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cursor->offset + length > cursor->bytes.size()) png_error(png, "truncated PNG");
  std::memcpy(data, cursor->bytes.data() + cursor->offset, length);
  cursor->offset += length;
}

[[noreturn]] void on_error(png_structp png, png_const_charp message) {
  auto* msg = static_cast<std::string*>(png_get_error_ptr(png));
  if (msg != nullptr) *msg = message;
  png_longjmp(png, 1);
}

void on_warning(png_structp, png_const_charp) {}

}  // namespace

// Locals are never written between setjmp and a longjmp, so GCC's clobber
// warning does not apply here.
#pragma GCC diagnostic push
#pragma GCC diagnostic ignored "-Wclobbered"
std::vector<std::uint8_t> encode_png(const GrayImage& img, PngColor color) {
  std::vector<std::uint8_t> out;
  std::string message;
  const int channels = color == PngColor::kRgb ? 3 : 1;
  std::vector<std::uint8_t> line(static_cast<std::size_t>(img.width()) * channels);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, on_error, on_warning);
  png_infop info = png != nullptr ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIo, "png: allocation failed");
  }

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIo, "png encode: " + message);
  }
  png_set_write_fn(png, &out, on_write, on_flush);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), 8,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  // fixed settings keep the byte stream reproducible
  png_set_compression_level(png, 6);
  png_set_filter(png, 0, PNG_FILTER_NONE);
  png_write_info(png, info);

  for (int y = 0; y < img.height(); ++y) {
    auto src = img.row(y);
    if (channels == 1) {
      std::copy(src.begin(), src.end(), line.begin());
    } else {
      for (std::size_t x = 0; x < src.size(); ++x) {
        line[3 * x] = line[3 * x + 1] = line[3 * x + 2] = src[x];
      }
    }
    png_write_row(png, line.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

#pragma GCC diagnostic pop

GrayImage decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw Error(ErrorCode::kIo, "not a PNG stream");
  }
  std::string message;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, on_error, on_warning);
  png_infop info = png != nullptr ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kIo, "png: allocation failed");
  }
  ReadCursor cursor{bytes, 0};
  std::vector<std::uint8_t> gray;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kIo, "png decode: " + message);
  }
  png_set_read_fn(png, &cursor, on_read);
  png_read_info(png, info);

  png_set_strip_16(png);
  png_set_packing(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);
  std::vector<std::uint8_t> line(png_get_rowbytes(png, info));
  gray.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) {
    png_read_row(png, line.data(), nullptr);
    std::uint8_t* dst = gray.data() + static_cast<std::size_t>(y) * width;
    for (int x = 0; x < width; ++x) {
      if (channels >= 3) {
        const unsigned r = line[static_cast<std::size_t>(x) * channels];
        const unsigned g = line[static_cast<std::size_t>(x) * channels + 1];
        const unsigned b = line[static_cast<std::size_t>(x) * channels + 2];
        dst[x] = static_cast<std::uint8_t>((299 * r + 587 * g + 114 * b + 500) / 1000);
      } else {
        dst[x] = line[static_cast<std::size_t>(x) * channels];
      }
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return GrayImage(width, height, std::move(gray));
}

void write_png(const std::filesystem::path& path, const GrayImage& img, PngColor color) {
  const auto bytes = encode_png(img, color);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

GrayImage read_png(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_png(bytes);
}

}  // namespace vprobe
