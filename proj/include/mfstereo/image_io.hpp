#pragma once

#include <filesystem>

#include "mfstereo/image.hpp"

namespace mfstereo {

/// Decodes an 8-bit PNG (gray, gray+alpha, palette, RGB or RGBA) or a binary
/// PPM (P6, maxval 255). Gray is replicated to three channels and alpha is
/// dropped; no other color transformation is applied. Errors name the path.
RgbImage read_image(const std::filesystem::path& path);

void write_ppm(const RgbImage& image, const std::filesystem::path& path);
void write_png(const RgbImage& image, const std::filesystem::path& path);
void write_png(const Grid<std::uint8_t, 1>& image,
               const std::filesystem::path& path);

/// Rec.601 luminance 0.299 r + 0.587 g + 0.114 b.
GrayImage to_gray(const RgbImage& image);

/// Grayscale PFM ("Pf"). Rows are stored bottom-up; a negative scale marks
/// little-endian payload. NaN values are rejected, +inf is kept as the
/// invalid marker.
DisparityMap read_pfm(const std::filesystem::path& path);
void write_pfm(const DisparityMap& map, const std::filesystem::path& path,
               float scale = -1.0f);

/// Middlebury non-occlusion mask: only pixels equal to 255 are valid.
ValidityMask read_mask(const std::filesystem::path& path);

/// Fields of a Middlebury v3 calib.txt that the matcher uses. Width and
/// height are 0 when the file does not list them.
struct CalibInfo {
  int ndisp = 0;
  int width = 0;
  int height = 0;
};

CalibInfo parse_calib(const std::filesystem::path& path);

/// Disparity levels searched on images downsampled by `scale`:
/// ceil(ndisp / scale).
int effective_levels(int ndisp, int scale);

/// Box-average downsampling by an integer factor. Output size is
/// ceil(width / scale) x ceil(height / scale); partial border blocks average
/// over the pixels they cover.
RgbImage downsample(const RgbImage& image, int scale);

}  // namespace mfstereo
