#include "autochar/png_io.hpp"

#include "autochar/error.hpp"

#include <png.h>

#include <cstdio>
#include <memory>

namespace autochar {
namespace {

struct FileCloser {
  void operator()(std::FILE *f) const {
    if (f)
      std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void on_png_error(png_structp, png_const_charp msg) {
  throw FormatError(std::string("png: ") + msg);
}
void on_png_warning(png_structp, png_const_charp) {}

} // namespace

PngImage read_png(const std::filesystem::path &file) {
  FilePtr fp(std::fopen(file.c_str(), "rb"));
  if (!fp)
    throw IoError("cannot open " + file.string());

  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw FormatError("not a PNG file: " + file.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           on_png_error, on_png_warning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("png: out of memory");
  }
  struct Guard {
    png_structp *p;
    png_infop *i;
    ~Guard() { png_destroy_read_struct(p, i, nullptr); }
  } guard{&png, &info};

  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE)
    png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS))
    png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS))
    png_set_strip_alpha(png);
  if (depth == 16)
    png_set_swap(png); // host little-endian 16-bit samples
  png_read_update_info(png, info);

  PngImage out;
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  depth = png_get_bit_depth(png, info);
  out.bit_depth = depth;
  if (out.channels != 1 && out.channels != 3)
    throw FormatError("png: unsupported channel layout in " + file.string());

  const std::size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<png_byte> buffer(rowbytes * out.height);
  std::vector<png_bytep> rows(out.height);
  for (int y = 0; y < out.height; ++y)
    rows[y] = buffer.data() + rowbytes * y;
  png_read_image(png, rows.data());

  const std::size_t n =
      static_cast<std::size_t>(out.width) * out.height * out.channels;
  out.samples.resize(n);
  const std::size_t per_row = static_cast<std::size_t>(out.width) * out.channels;
  for (int y = 0; y < out.height; ++y) {
    const png_byte *row = rows[y];
    for (std::size_t i = 0; i < per_row; ++i) {
      std::uint16_t v;
      if (depth == 16)
        v = static_cast<std::uint16_t>(row[2 * i] | (row[2 * i + 1] << 8));
      else
        v = row[i];
      out.samples[y * per_row + i] = v;
    }
  }
  return out;
}

void write_png(const PngImage &image, const std::filesystem::path &file) {
  if (image.channels != 1 && image.channels != 3)
    throw DomainError("png: channels must be 1 or 3");
  if (image.bit_depth != 8 && image.bit_depth != 16)
    throw DomainError("png: bit depth must be 8 or 16");

  FilePtr fp(std::fopen(file.c_str(), "wb"));
  if (!fp)
    throw IoError("cannot write " + file.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            on_png_error, on_png_warning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error("png: out of memory");
  }
  struct Guard {
    png_structp *p;
    png_infop *i;
    ~Guard() { png_destroy_write_struct(p, i); }
  } guard{&png, &info};

  png_init_io(png, fp.get());
  png_set_compression_level(png, 3);
  png_set_IHDR(png, info, image.width, image.height, image.bit_depth,
               image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  const std::size_t per_row =
      static_cast<std::size_t>(image.width) * image.channels;
  const std::size_t bytes = image.bit_depth == 16 ? 2 : 1;
  std::vector<png_byte> row(per_row * bytes);
  for (int y = 0; y < image.height; ++y) {
    for (std::size_t i = 0; i < per_row; ++i) {
      const std::uint16_t v = image.samples[y * per_row + i];
      if (bytes == 2) {
        row[2 * i] = static_cast<png_byte>(v >> 8); // PNG is big-endian
        row[2 * i + 1] = static_cast<png_byte>(v & 0xff);
      } else {
        row[i] = static_cast<png_byte>(v);
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  if (std::fflush(fp.get()) != 0)
    throw IoError("write failed: " + file.string());
}

} // namespace autochar
