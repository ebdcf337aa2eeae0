#include <doctest.h>

#include <algorithm>
#include <random>

#include "mfstereo/cost_volume.hpp"
#include "mfstereo/image_io.hpp"
#include "synthetic.hpp"
#include "test_util.hpp"

using namespace mfstereo;

namespace {

/// Census bit straight from the definition, independent of CensusField.
bool census_bit(const GrayImage& img, int x, int y, int window, int k) {
  const int r = window / 2;
  int index = 0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      if (dx == 0 && dy == 0) continue;
      if (index == k) {
        const int sx = std::clamp(x + dx, 0, img.width() - 1);
        const int sy = std::clamp(y + dy, 0, img.height() - 1);
        return img.at(sx, sy) < img.at(x, y);
      }
      ++index;
    }
  }
  return false;
}

float oracle_cost(const GrayImage& base, const GrayImage& other, int x, int y, int xo,
                  const CostParams& p) {
  int hd = 0;
  const int bits = p.census_window * p.census_window - 1;
  for (int k = 0; k < bits; ++k) {
    hd += census_bit(base, x, y, p.census_window, k) != census_bit(other, xo, y, p.census_window, k);
  }
  auto gx = [](const GrayImage& g, int x, int y) {
    const int w = g.width();
    if (x == 0) return g.at(1, y) - g.at(0, y);
    if (x == w - 1) return g.at(w - 1, y) - g.at(w - 2, y);
    return 0.5f * (g.at(x + 1, y) - g.at(x - 1, y));
  };
  return p.w_census * static_cast<float>(hd) +
         p.w_grad * std::min(std::abs(gx(base, x, y) - gx(other, xo, y)), p.tau_grad);
}

/// right(x) = left(x + shift), so left (x, y) matches right (x - shift, y).
GrayImage shift_left(const GrayImage& img, int shift) {
  GrayImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      out.at(x, y) = img.at(std::min(x + shift, img.width() - 1), y);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("census of a constant image is all zero") {
  const GrayImage img(9, 7, 42.0f);
  const CensusField field = census(img, 5);
  for (int y = 0; y < 7; ++y) {
    for (int x = 0; x < 9; ++x) {
      for (auto word : field.code(x, y)) CHECK(word == 0);
    }
  }
}

TEST_CASE("census of a bright center over a dark ring sets all eight bits") {
  GrayImage img(3, 3, 1.0f);
  img.at(1, 1) = 5.0f;
  const CensusField field = census(img, 3);
  CHECK(field.bits() == 8);
  CHECK(field.code(1, 1)[0] == 0xFFu);
}

TEST_CASE("census matches the definition and is offset invariant") {
  std::mt19937 rng(5);
  for (int window : {3, 5, 7, 9}) {
    const GrayImage img = testing::random_gray(13, 11, rng);
    GrayImage brighter = img;
    for (auto& v : brighter.data()) v += 10.0f;
    const CensusField a = census(img, window);
    const CensusField b = census(brighter, window);
    CHECK(a.words() == (window * window - 1 + 63) / 64);
    for (int y = 0; y < img.height(); ++y) {
      for (int x = 0; x < img.width(); ++x) {
        CHECK(hamming(a.code(x, y), b.code(x, y)) == 0);
        for (int k = 0; k < a.bits(); ++k) {
          CHECK(a.bit(x, y, k) == census_bit(img, x, y, window, k));
        }
      }
    }
  }
}

TEST_CASE("census rejects bad windows") {
  const GrayImage img(8, 6, 0.0f);
  CHECK_THROWS_AS(census(img, 4), InputError);
  CHECK_THROWS_AS(census(img, 1), InputError);
  CHECK_THROWS_AS(census(img, 7), InputError);
}

TEST_CASE("census Hamming distance is a metric on sampled codes") {
  std::mt19937 rng(17);
  const GrayImage img = testing::random_gray(24, 24, rng);
  const CensusField field = census(img, 9);
  std::uniform_int_distribution<int> coord(0, 23);
  for (int trial = 0; trial < 500; ++trial) {
    const auto a = field.code(coord(rng), coord(rng));
    const auto b = field.code(coord(rng), coord(rng));
    const auto c = field.code(coord(rng), coord(rng));
    CHECK(hamming(a, a) == 0);
    CHECK(hamming(a, b) == hamming(b, a));
    CHECK(hamming(a, c) <= hamming(a, b) + hamming(b, c));
  }
}

TEST_CASE("horizontal gradient") {
  GrayImage ramp(6, 3);
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 6; ++x) ramp.at(x, y) = 2.0f * x;
  }
  const GrayImage g = gradient_x(ramp);
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 6; ++x) CHECK(g.at(x, y) == 2.0f);
  }
  const GrayImage flat = gradient_x(GrayImage(5, 4, 9.0f));
  for (float v : flat.data()) CHECK(v == 0.0f);
  GrayImage thin(1, 4);
  thin.data() = {1.0f, 5.0f, 2.0f, 8.0f};
  const GrayImage thin_grad = gradient_x(thin);
  for (float v : thin_grad.data()) CHECK(v == 0.0f);
}

TEST_CASE("self match costs nothing at zero disparity") {
  std::mt19937 rng(2);
  const GrayImage img = testing::random_gray(20, 12, rng);
  const CostVolume cv = build_cost_volume(img, img, 6, {});
  for (int y = 0; y < 12; ++y) {
    for (int x = 0; x < 20; ++x) CHECK(cv.at(x, y, 0) == 0.0f);
  }
}

TEST_CASE("cost volume matches the brute-force definition") {
  std::mt19937 rng(23);
  CostParams p;
  p.census_window = 3;
  p.w_census = 1.5f;
  p.w_grad = 0.7f;
  p.tau_grad = 9.0f;
  const GrayImage left = testing::random_gray(14, 9, rng);
  const GrayImage right = testing::random_gray(14, 9, rng);
  const CostVolume cl = build_cost_volume(left, right, 5, p, Reference::kLeft);
  const CostVolume cr = build_cost_volume(left, right, 5, p, Reference::kRight);
  for (int y = 0; y < 9; ++y) {
    for (int x = 0; x < 14; ++x) {
      for (int d = 0; d < 5; ++d) {
        const float expect_l =
            x - d >= 0 ? oracle_cost(left, right, x, y, x - d, p) : p.out_of_view_cost();
        const float expect_r =
            x + d < 14 ? oracle_cost(right, left, x, y, x + d, p) : p.out_of_view_cost();
        CHECK(cl.at(x, y, d) == doctest::Approx(expect_l).epsilon(1e-6));
        CHECK(cr.at(x, y, d) == doctest::Approx(expect_r).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("shifted pair has its minimum at the shift") {
  std::mt19937 rng(31);
  const GrayImage left = testing::random_gray(40, 20, rng);
  const GrayImage right = shift_left(left, 3);
  const CostVolume cv = build_cost_volume(left, right, 8, {});
  // Interior: away from the census border and the clamped right edge.
  for (int y = 2; y < 18; ++y) {
    for (int x = 10; x < 30; ++x) {
      const auto row = cv.pixel(static_cast<std::size_t>(y) * 40 + x);
      const auto best = std::min_element(row.begin(), row.end()) - row.begin();
      CHECK(best == 3);
    }
  }
}

TEST_CASE("out-of-view entries hold the out-of-view cost") {
  CostParams p;
  const GrayImage img(10, 6, 3.0f);
  const CostVolume cv = build_cost_volume(img, img, 4, p);
  CHECK(p.out_of_view_cost() == doctest::Approx(0.9f * (24.0f + 0.4f * 16.0f)));
  CHECK(cv.at(0, 2, 1) == p.out_of_view_cost());
  CHECK(cv.at(2, 2, 3) == p.out_of_view_cost());
  p.cost_out_of_view = 5.0f;
  CHECK(build_cost_volume(img, img, 4, p).at(0, 0, 1) == 5.0f);
}

TEST_CASE("costs are bounded and non-negative") {
  std::mt19937 rng(37);
  CostParams p;
  const GrayImage left = testing::random_gray(30, 15, rng);
  const GrayImage right = testing::random_gray(30, 15, rng);
  const CostVolume cv = build_cost_volume(left, right, 10, p);
  for (int y = 0; y < 15; ++y) {
    for (int x = 0; x < 30; ++x) {
      for (int d = 0; d < 10; ++d) {
        const float c = cv.at(x, y, d);
        CHECK(c >= 0.0f);
        if (x - d >= 0) CHECK(c <= p.max_in_view_cost());
      }
    }
  }
}

TEST_CASE("right reference equals the mirrored left-reference construction") {
  std::mt19937 rng(41);
  for (int trial = 0; trial < 5; ++trial) {
    const GrayImage left = testing::random_gray(17 + trial, 9, rng);
    const GrayImage right = testing::random_gray(17 + trial, 9, rng);
    const CostVolume direct = build_cost_volume(left, right, 6, {}, Reference::kRight);
    const CostVolume via_mirror =
        mirror(build_cost_volume(mirror(right), mirror(left), 6, {}, Reference::kLeft));
    REQUIRE(direct.data().size() == via_mirror.data().size());
    for (std::size_t k = 0; k < direct.data().size(); ++k) {
      CHECK(direct.data()[k] == doctest::Approx(via_mirror.data()[k]).epsilon(1e-6));
    }
  }
}

TEST_CASE("cost volume argument checks") {
  const GrayImage a(10, 6, 0.0f);
  const GrayImage b(11, 6, 0.0f);
  CHECK_THROWS_AS(build_cost_volume(a, b, 4, {}), InputError);
  CHECK_THROWS_AS(build_cost_volume(a, a, 1, {}), InputError);
  CostParams bad;
  bad.tau_grad = 0.0f;
  CHECK_THROWS_AS(build_cost_volume(a, a, 4, bad), InputError);
  bad = {};
  bad.w_grad = -1.0f;
  CHECK_THROWS_AS(build_cost_volume(a, a, 4, bad), InputError);
}

TEST_CASE("cost slice extracts one level") {
  std::mt19937 rng(43);
  const GrayImage left = testing::random_gray(8, 5, rng);
  const CostVolume cv = build_cost_volume(left, left, 3, {});
  const GrayImage s = cv.slice(2);
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 8; ++x) CHECK(s.at(x, y) == cv.at(x, y, 2));
  }
}
