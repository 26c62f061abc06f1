#include "orient/imageio.hpp"

#include <algorithm>
#include <cctype>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include <jpeglib.h>
#include <png.h>

namespace orient {

std::string_view to_string(ImageFormat format) {
  switch (format) {
    case ImageFormat::ppm: return "ppm";
    case ImageFormat::png: return "png";
    case ImageFormat::jpeg: return "jpeg";
  }
  return "unknown";
}

CorruptImageError::CorruptImageError(const std::string& what, std::optional<std::size_t> offset)
    : ImageError(offset ? what + " (at byte " + std::to_string(*offset) + ")" : what), offset_(offset) {}

namespace {

std::uint8_t to_byte(float v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

void require_rgb(const Tensor& pixels) {
  if (pixels.rank() != 3 || pixels.dim(0) != 3) {
    throw ImageWriteError("encode: expected (3, H, W) pixels, got " + shape_string(pixels.shape()));
  }
}

// Interleaved 8-bit RGB (row-major HWC) <-> planar float CHW.
Tensor from_interleaved(const std::uint8_t* data, std::size_t h, std::size_t w, std::size_t components) {
  Tensor out({3, h, w});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::uint8_t* px = data + (y * w + x) * components;
      for (std::size_t c = 0; c < 3; ++c) {
        out.at(c, y, x) = static_cast<float>(components == 1 ? px[0] : px[c]);
      }
    }
  }
  return out;
}

std::vector<std::uint8_t> to_interleaved(const Tensor& pixels) {
  const std::size_t h = pixels.dim(1);
  const std::size_t w = pixels.dim(2);
  std::vector<std::uint8_t> out(h * w * 3);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        out[(y * w + x) * 3 + c] = to_byte(pixels.at(c, y, x));
      }
    }
  }
  return out;
}

// ---- PPM ----------------------------------------------------------------------

class PnmHeaderReader {
 public:
  explicit PnmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes), pos_(2) {}

  std::size_t number(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    std::size_t value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_]) != 0) {
      value = value * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
      if (value > (1U << 24U)) {
        throw CorruptImageError(std::string("PPM ") + what + " is implausibly large", start);
      }
      ++pos_;
    }
    if (pos_ == start) {
      throw CorruptImageError(std::string("PPM header: expected ") + what, pos_);
    }
    return value;
  }

  std::size_t end_of_header() {
    if (pos_ >= bytes_.size() || std::isspace(bytes_[pos_]) == 0) {
      throw CorruptImageError("PPM header must end with one whitespace byte", pos_);
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') {
          ++pos_;
        }
      } else if (std::isspace(bytes_[pos_]) != 0) {
        ++pos_;
      } else {
        return;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_;
};

ImageFile decode_pnm(std::span<const std::uint8_t> bytes) {
  const char kind = static_cast<char>(bytes[1]);
  if (kind != '5' && kind != '6') {
    throw UnsupportedVariantError(std::string("PNM variant P") + kind + " is not supported (binary P5/P6 only)");
  }
  PnmHeaderReader header(bytes);
  const std::size_t width = header.number("width");
  const std::size_t height = header.number("height");
  const std::size_t maxval = header.number("maxval");
  const std::size_t data_start = header.end_of_header();
  if (width == 0 || height == 0) {
    throw CorruptImageError("PPM has a zero dimension");
  }
  if (maxval != 255) {
    throw UnsupportedVariantError("PPM maxval " + std::to_string(maxval) + " is not supported (8-bit only)");
  }
  const std::size_t components = kind == '6' ? 3 : 1;
  const std::size_t needed = width * height * components;
  if (bytes.size() - data_start < needed) {
    throw CorruptImageError("PPM pixel data truncated: need " + std::to_string(needed) + " bytes, have " +
                                std::to_string(bytes.size() - data_start),
                            bytes.size());
  }
  return {from_interleaved(bytes.data() + data_start, height, width, components), std::nullopt, ImageFormat::ppm};
}

std::vector<std::uint8_t> encode_ppm(const Tensor& pixels) {
  const std::string header = "P6\n" + std::to_string(pixels.dim(2)) + " " + std::to_string(pixels.dim(1)) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const auto body = to_interleaved(pixels);
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

// ---- PNG (libpng simplified API) ---------------------------------------------------

ImageFile decode_png(std::span<const std::uint8_t> bytes) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()) == 0) {
    throw CorruptImageError(std::string("PNG header: ") + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr) == 0) {
    const std::string message = image.message;
    png_image_free(&image);
    throw CorruptImageError("PNG stream: " + message);
  }
  return {from_interleaved(buffer.data(), image.height, image.width, 3), std::nullopt, ImageFormat::png};
}

std::vector<std::uint8_t> encode_png(const Tensor& pixels) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(pixels.dim(2));
  image.height = static_cast<png_uint_32>(pixels.dim(1));
  image.format = PNG_FORMAT_RGB;
  const auto rgb = to_interleaved(pixels);
  png_alloc_size_t size = 0;
  if (png_image_write_to_memory(&image, nullptr, &size, 0, rgb.data(), 0, nullptr) == 0) {
    throw ImageWriteError(std::string("PNG encode: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (png_image_write_to_memory(&image, out.data(), &size, 0, rgb.data(), 0, nullptr) == 0) {
    throw ImageWriteError(std::string("PNG encode: ") + image.message);
  }
  out.resize(size);
  return out;
}

// ---- JPEG (libjpeg) -------------------------------------------------------------------

struct JpegErrorManager {
  jpeg_error_mgr base{};
  std::jmp_buf jump{};
  char message[JMSG_LENGTH_MAX]{};
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

void jpeg_silence(j_common_ptr /*cinfo*/, int /*level*/) {}

// setjmp/longjmp must not cross frames with non-trivial destructors, so the
// libjpeg calls live in these plain functions and report through out-params.
struct JpegDecodeRaw {
  std::vector<std::uint8_t> pixels;
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t components = 0;
  bool progressive = false;
  std::vector<std::uint8_t> exif;
};

bool jpeg_decode_raw(std::span<const std::uint8_t> bytes, JpegDecodeRaw& out, char* message) {
  jpeg_decompress_struct cinfo{};
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  err.base.emit_message = jpeg_silence;
  if (setjmp(err.jump) != 0) {
    std::memcpy(message, err.message, JMSG_LENGTH_MAX);
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_save_markers(&cinfo, JPEG_APP0 + 1, 0xFFFF);
  jpeg_read_header(&cinfo, TRUE);
  for (auto* marker = cinfo.marker_list; marker != nullptr; marker = marker->next) {
    if (marker->marker == JPEG_APP0 + 1 && marker->data_length >= 6 && std::memcmp(marker->data, "Exif\0\0", 6) == 0) {
      out.exif.assign(marker->data, marker->data + marker->data_length);
      break;
    }
  }
  out.progressive = cinfo.progressive_mode != 0;
  if (out.progressive) {
    jpeg_destroy_decompress(&cinfo);
    return true;
  }
  if (cinfo.num_components != 1) {
    cinfo.out_color_space = JCS_RGB;
  }
  jpeg_start_decompress(&cinfo);
  out.width = cinfo.output_width;
  out.height = cinfo.output_height;
  out.components = static_cast<std::size_t>(cinfo.output_components);
  out.pixels.resize(out.width * out.height * out.components);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = out.pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * out.width * out.components;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return true;
}

ImageFile decode_jpeg(std::span<const std::uint8_t> bytes) {
  JpegDecodeRaw raw;
  char message[JMSG_LENGTH_MAX]{};
  if (!jpeg_decode_raw(bytes, raw, message)) {
    throw CorruptImageError(std::string("JPEG stream: ") + message);
  }
  if (raw.progressive) {
    throw UnsupportedVariantError("progressive JPEG is not supported");
  }
  if (raw.components != 1 && raw.components != 3) {
    throw UnsupportedVariantError("JPEG with " + std::to_string(raw.components) + " components is not supported");
  }
  ImageFile file{from_interleaved(raw.pixels.data(), raw.height, raw.width, raw.components), std::nullopt,
                 ImageFormat::jpeg};
  if (!raw.exif.empty()) {
    file.exif_orientation = parse_exif_orientation(raw.exif);
  }
  return file;
}

bool jpeg_encode_raw(const std::vector<std::uint8_t>& rgb, std::size_t width, std::size_t height, int quality,
                     const std::vector<std::uint8_t>& exif, unsigned char** buffer, unsigned long* size,
                     char* message) {
  jpeg_compress_struct cinfo{};
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  err.base.emit_message = jpeg_silence;
  if (setjmp(err.jump) != 0) {
    std::memcpy(message, err.message, JMSG_LENGTH_MAX);
    jpeg_destroy_compress(&cinfo);
    return false;
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, buffer, size);
  cinfo.image_width = static_cast<JDIMENSION>(width);
  cinfo.image_height = static_cast<JDIMENSION>(height);
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  if (!exif.empty()) {
    cinfo.write_JFIF_header = FALSE;
  }
  jpeg_start_compress(&cinfo, TRUE);
  if (!exif.empty()) {
    jpeg_write_marker(&cinfo, JPEG_APP0 + 1, exif.data(), static_cast<unsigned int>(exif.size()));
  }
  while (cinfo.next_scanline < cinfo.image_height) {
    auto* row = const_cast<JSAMPROW>(rgb.data() + static_cast<std::size_t>(cinfo.next_scanline) * width * 3);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  return true;
}

std::vector<std::uint8_t> encode_jpeg(const Tensor& pixels, const EncodeOptions& options) {
  if (options.jpeg_quality < 1 || options.jpeg_quality > 100) {
    throw ImageWriteError("JPEG quality must be in [1, 100]");
  }
  const auto rgb = to_interleaved(pixels);
  std::vector<std::uint8_t> exif;
  if (options.exif_orientation) {
    exif = make_exif_orientation(*options.exif_orientation);
  }
  unsigned char* buffer = nullptr;
  unsigned long size = 0;
  char message[JMSG_LENGTH_MAX]{};
  const bool ok = jpeg_encode_raw(rgb, pixels.dim(2), pixels.dim(1), options.jpeg_quality, exif, &buffer, &size, message);
  std::vector<std::uint8_t> out;
  if (ok) {
    out.assign(buffer, buffer + size);
  }
  std::free(buffer);
  if (!ok) {
    throw ImageWriteError(std::string("JPEG encode: ") + message);
  }
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ImageError("cannot open image '" + path.string() + "'");
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

ImageFile decode_bytes(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] >= '1' && bytes[1] <= '7') {
    return decode_pnm(bytes);
  }
  constexpr std::array<std::uint8_t, 8> kPngSignature{0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  if (bytes.size() >= kPngSignature.size() && std::equal(kPngSignature.begin(), kPngSignature.end(), bytes.begin())) {
    return decode_png(bytes);
  }
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) {
    return decode_jpeg(bytes);
  }
  throw UnknownFormatError("unrecognized image format (not PPM, PNG or JPEG)");
}

ImageFile decode(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_bytes(bytes);
  } catch (const UnknownFormatError& e) {
    throw UnknownFormatError(path.string() + ": " + e.what());
  } catch (const UnsupportedVariantError& e) {
    throw UnsupportedVariantError(path.string() + ": " + e.what());
  } catch (const CorruptImageError& e) {
    throw CorruptImageError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_bytes(const Tensor& pixels, ImageFormat format, const EncodeOptions& options) {
  require_rgb(pixels);
  switch (format) {
    case ImageFormat::ppm: return encode_ppm(pixels);
    case ImageFormat::png: return encode_png(pixels);
    case ImageFormat::jpeg: return encode_jpeg(pixels, options);
  }
  throw ImageWriteError("unknown output format");
}

ImageFormat format_from_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".ppm") {
    return ImageFormat::ppm;
  }
  if (ext == ".png") {
    return ImageFormat::png;
  }
  if (ext == ".jpg" || ext == ".jpeg") {
    return ImageFormat::jpeg;
  }
  throw UnknownFormatError("unsupported output format for '" + path.string() + "' (use .ppm, .png, .jpg)");
}

void encode(const std::filesystem::path& path, const Tensor& pixels, const EncodeOptions& options) {
  const auto bytes = encode_bytes(pixels, format_from_extension(path), options);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw ImageWriteError("cannot open '" + path.string() + "' for writing");
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw ImageWriteError("failed writing '" + path.string() + "'");
  }
}

std::optional<OrientationLabel> exif_to_theta(int exif_orientation) {
  switch (exif_orientation) {
    case 1: return OrientationLabel(0);
    case 8: return OrientationLabel(1);
    case 3: return OrientationLabel(2);
    case 6: return OrientationLabel(3);
    case 2:
    case 4:
    case 5:
    case 7: return std::nullopt;
    default: throw DataError("EXIF orientation must be in 1..8, got " + std::to_string(exif_orientation));
  }
}

std::optional<int> parse_exif_orientation(std::span<const std::uint8_t> payload) {
  constexpr std::size_t kTiff = 6;
  if (payload.size() < kTiff + 8 || std::memcmp(payload.data(), "Exif\0\0", 6) != 0) {
    return std::nullopt;
  }
  const auto tiff = payload.subspan(kTiff);
  bool little = false;
  if (tiff[0] == 'I' && tiff[1] == 'I') {
    little = true;
  } else if (!(tiff[0] == 'M' && tiff[1] == 'M')) {
    return std::nullopt;
  }
  auto u16 = [&](std::size_t at) -> std::uint32_t {
    return little ? (tiff[at] | (tiff[at + 1] << 8U)) : ((tiff[at] << 8U) | tiff[at + 1]);
  };
  auto u32 = [&](std::size_t at) -> std::uint32_t {
    return little ? (u16(at) | (u16(at + 2) << 16U)) : ((u16(at) << 16U) | u16(at + 2));
  };
  if (u16(2) != 42) {
    return std::nullopt;
  }
  const std::size_t ifd = u32(4);
  if (ifd + 2 > tiff.size()) {
    return std::nullopt;
  }
  const std::size_t entries = u16(ifd);
  for (std::size_t i = 0; i < entries; ++i) {
    const std::size_t at = ifd + 2 + i * 12;
    if (at + 12 > tiff.size()) {
      return std::nullopt;
    }
    if (u16(at) == 0x0112 && u16(at + 2) == 3) {
      const auto value = static_cast<int>(u16(at + 8));
      if (value >= 1 && value <= 8) {
        return value;
      }
      return std::nullopt;
    }
  }
  return std::nullopt;
}

std::vector<std::uint8_t> make_exif_orientation(int orientation) {
  if (orientation < 1 || orientation > 8) {
    throw DataError("EXIF orientation must be in 1..8, got " + std::to_string(orientation));
  }
  const auto o = static_cast<std::uint8_t>(orientation);
  return {'E', 'x', 'i', 'f', 0, 0,                    // APP1 identifier
          'I', 'I', 42, 0, 8, 0, 0, 0,                 // little-endian TIFF header, IFD0 at 8
          1, 0,                                        // one entry
          0x12, 0x01, 3, 0, 1, 0, 0, 0, o, 0, 0, 0,    // 0x0112 SHORT x1
          0, 0, 0, 0};                                 // no next IFD
}

CorrectionResult correct_file(const std::filesystem::path& path_in, const std::filesystem::path& path_out,
                              OrientationLabel theta) {
  const ImageFile input = decode(path_in);
  const ImageFormat out_format = format_from_extension(path_out);
  EncodeOptions options;
  if (out_format == ImageFormat::jpeg) {
    options.exif_orientation = 1;
  }
  encode(path_out, rotate_image(input.pixels, theta.correction()), options);
  return {out_format, out_format == ImageFormat::jpeg};
}

}  // namespace orient
