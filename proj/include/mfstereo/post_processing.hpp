#pragma once

#include "mfstereo/gaussian_lattice.hpp"
#include "mfstereo/image.hpp"

namespace mfstereo {

/// Left-right consistency: (x, y) is valid iff dL is valid, x - round(dL)
/// lies in the image and |dL(x, y) - dR(x - round(dL), y)| <= tolerance.
ValidityMask lrc_check(const DisparityMap& left, const DisparityMap& right,
                       float tolerance = 1.0f);

/// Fills every pixel that is invalid in `mask` (or holds the invalid marker)
/// with the smaller of the nearest valid disparities to its left and right on
/// the same scanline. A row without valid pixels copies the nearest filled
/// row, taking the smaller value when two rows are equally near. Throws
/// InputError when no pixel is valid.
DisparityMap occlusion_fill(const DisparityMap& disparity, const ValidityMask& mask);

/// Weighted median over a window x window neighborhood, applied only to pixels
/// invalid in `mask`; valid pixels pass through. Neighbor weights are
///   exp(-|dx|^2 / 2 sigma_x^2 - |dcolor|^2 / 2 sigma_f^2)
/// from `guide`, and the median is the smallest value whose cumulative weight
/// reaches half the window total. Expects a map without invalid values.
DisparityMap weighted_median(const DisparityMap& disparity, const RgbImage& guide,
                             const ValidityMask& mask, int window = 9,
                             const FeatureSpec& spec = {});

}  // namespace mfstereo
