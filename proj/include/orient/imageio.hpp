#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "orient/datapipe.hpp"
#include "orient/tensor.hpp"

namespace orient {

enum class ImageFormat { ppm, png, jpeg };

std::string_view to_string(ImageFormat format);

/// Raw decoded pixels; EXIF orientation is reported, never applied.
struct ImageFile {
  Tensor pixels;  // (3, H, W), values in [0, 255]
  std::optional<int> exif_orientation;
  ImageFormat format = ImageFormat::ppm;
};

class ImageError : public DataError {
 public:
  using DataError::DataError;
};
class UnknownFormatError : public ImageError {
 public:
  using ImageError::ImageError;
};
class CorruptImageError : public ImageError {
 public:
  CorruptImageError(const std::string& what, std::optional<std::size_t> offset = std::nullopt);
  [[nodiscard]] std::optional<std::size_t> offset() const { return offset_; }

 private:
  std::optional<std::size_t> offset_;
};
class UnsupportedVariantError : public ImageError {
 public:
  using ImageError::ImageError;
};
class ImageWriteError : public ImageError {
 public:
  using ImageError::ImageError;
};

ImageFile decode(const std::filesystem::path& path);
ImageFile decode_bytes(std::span<const std::uint8_t> bytes);

struct EncodeOptions {
  /// Written as an EXIF APP1 segment (JPEG only).
  std::optional<int> exif_orientation;
  int jpeg_quality = 95;
};

std::vector<std::uint8_t> encode_bytes(const Tensor& pixels, ImageFormat format, const EncodeOptions& options = {});
void encode(const std::filesystem::path& path, const Tensor& pixels, const EncodeOptions& options = {});

/// Format implied by a file extension (.ppm, .png, .jpg/.jpeg).
ImageFormat format_from_extension(const std::filesystem::path& path);

/// Stored-pixel orientation for a pure-rotation EXIF tag: 1 -> 0, 8 -> 1,
/// 3 -> 2, 6 -> 3. Mirrored tags (2, 4, 5, 7) yield nullopt; anything
/// outside 1..8 throws DataError.
std::optional<OrientationLabel> exif_to_theta(int exif_orientation);

/// Orientation tag (0x0112) from an APP1 payload starting with "Exif\0\0".
std::optional<int> parse_exif_orientation(std::span<const std::uint8_t> app1_payload);
/// Minimal APP1 payload carrying only the orientation tag.
std::vector<std::uint8_t> make_exif_orientation(int orientation);

struct CorrectionResult {
  ImageFormat output_format = ImageFormat::ppm;
  /// Output went through lossy JPEG re-encoding.
  bool recompressed = false;
};

/// Writes `path_in` rotated back upright (clockwise by (4 - theta) mod 4)
/// to `path_out`, with EXIF orientation reset to 1 for JPEG output.
CorrectionResult correct_file(const std::filesystem::path& path_in, const std::filesystem::path& path_out,
                              OrientationLabel theta);

}  // namespace orient
