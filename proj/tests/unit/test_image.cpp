#include <doctest.h>

#include <png.h>

#include <cstdio>

#include "strokepipe/error.hpp"
#include "strokepipe/image.hpp"
#include "strokepipe/rng.hpp"
#include "support/oracles.hpp"
#include "support/test_util.hpp"

using namespace strokepipe;

namespace {

void write_png(const std::filesystem::path& p, int w, int h, int color_type, int bit_depth,
               const std::vector<std::uint8_t>& data) {
  std::FILE* fp = std::fopen(p.c_str(), "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  png_init_io(png, fp);
  png_set_IHDR(png, info, w, h, bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const int channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
  const int row_bytes = w * channels * (bit_depth / 8);
  for (int r = 0; r < h; ++r) png_write_row(png, const_cast<png_bytep>(data.data() + r * row_bytes));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("load_image passes PGM bytes through") {
  const auto dir = testutil::scratch_dir("image_load");
  testutil::write_raw_pgm(dir / "a.pgm", 2, 2, {0, 255, 0, 255});
  const GrayImage img = load_image(dir / "a.pgm", ImageFormat::Pgm);
  CHECK(img.width() == 2);
  CHECK(img.height() == 2);
  CHECK(img.levels() == 256);
  CHECK(!img.has_mask());
  CHECK(std::vector<std::uint16_t>(img.pixels().begin(), img.pixels().end()) ==
        std::vector<std::uint16_t>{0, 255, 0, 255});

  testutil::write_raw_pgm(dir / "b.pgm", 1, 1, {128});
  const GrayImage one = load_image(dir / "b.pgm");
  CHECK(one.size() == 1);
  CHECK(one.at(0, 0) == 128);
}

TEST_CASE("PGM header comments are skipped") {
  const auto dir = testutil::scratch_dir("image_comment");
  testutil::write_bytes(dir / "c.pgm", std::string("P5\n# made by hand\n2 1\n255\n") + char(7) + char(9));
  const GrayImage img = load_image(dir / "c.pgm");
  CHECK(img.at(0, 0) == 7);
  CHECK(img.at(0, 1) == 9);
}

TEST_CASE("load_image rejects bad input") {
  const auto dir = testutil::scratch_dir("image_bad");
  CHECK(code_of([&] { load_image(dir / "missing.pgm"); }) == ErrorCode::Io);

  testutil::write_bytes(dir / "rgb.ppm.pgm", "P6\n1 1\n255\nabc");
  try {
    load_image(dir / "rgb.ppm.pgm");
    FAIL("expected multi-channel error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("multi-channel") != std::string::npos);
  }

  testutil::write_bytes(dir / "deep.pgm", "P5\n1 1\n65535\n\x01\x02");
  CHECK(code_of([&] { load_image(dir / "deep.pgm"); }) == ErrorCode::Format);

  testutil::write_bytes(dir / "short.pgm", "P5\n4 4\n255\nab");
  CHECK(code_of([&] { load_image(dir / "short.pgm"); }) == ErrorCode::Format);
}

TEST_CASE("PNG grayscale loads and RGB PNG is rejected") {
  const auto dir = testutil::scratch_dir("image_png");
  write_png(dir / "g.png", 3, 2, PNG_COLOR_TYPE_GRAY, 8, {1, 2, 3, 4, 5, 6});
  const GrayImage g = load_image(dir / "g.png");
  CHECK(g.width() == 3);
  CHECK(g.height() == 2);
  CHECK(g.at(1, 2) == 6);

  write_png(dir / "rgb.png", 1, 1, PNG_COLOR_TYPE_RGB, 8, {10, 20, 30});
  try {
    load_image(dir / "rgb.png", ImageFormat::PngGray);
    FAIL("expected multi-channel error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("multi-channel") != std::string::npos);
  }

  write_png(dir / "g16.png", 1, 1, PNG_COLOR_TYPE_GRAY, 16, {1, 2});
  CHECK(code_of([&] { load_image(dir / "g16.png"); }) == ErrorCode::Format);
}

TEST_CASE("normalize_intensity maps by the mean of the top fraction") {
  // 1000 pixels, the single largest is 200, all others <= 100.
  std::vector<std::uint16_t> px(1000, 50);
  px[0] = 200;
  px[1] = 100;
  const GrayImage out = normalize_intensity(testutil::image_from(1000, 1, 256, px));
  CHECK(out.at(0, 0) == 255);
  CHECK(out.at(0, 1) == 128);  // round(0.5 * 255)
  CHECK(out.at(0, 2) == 64);   // round(0.25 * 255) = round(63.75)

  const GrayImage flat = normalize_intensity(testutil::image_from(4, 4, 256, std::vector<std::uint16_t>(16, 37)));
  for (auto v : flat.pixels()) CHECK(v == 255);
}

TEST_CASE("normalize_intensity clamps values above M and skips masked pixels") {
  // top_fraction 0.5 of 4 pixels -> mean of {200, 100} = 150.
  auto img = testutil::image_from(4, 1, 256, {200, 100, 30, 0});
  const GrayImage out = normalize_intensity(img, 0.5);
  CHECK(out.at(0, 0) == 255);  // 200 > M clamps
  CHECK(out.at(0, 1) == 170);  // round(100/150 * 255) = round(170)

  const GrayImage masked = apply_mask(img, std::vector<bool>{true, false, false, false});
  const GrayImage mout = normalize_intensity(masked);
  CHECK(mout.at(0, 0) == 200);  // untouched
  CHECK(mout.at(0, 1) == 255);

  const GrayImage all = apply_mask(img, std::vector<bool>(4, true));
  CHECK(code_of([&] { normalize_intensity(all); }) == ErrorCode::AllMasked);
}

TEST_CASE("normalize_intensity is idempotent when the top set is a single pixel") {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    const int w = 1 + static_cast<int>(rng.below(30));
    const int h = 1 + static_cast<int>(rng.below(30));
    const GrayImage img = oracle::random_image(rng, w, h, 256);
    const GrayImage once = normalize_intensity(img);
    const GrayImage twice = normalize_intensity(once);
    for (std::size_t i = 0; i < once.size(); ++i)
      CHECK(std::abs(int(once.pixels()[i]) - int(twice.pixels()[i])) <= 1);
  }
}

TEST_CASE("quantize examples and errors") {
  const GrayImage img = testutil::image_from(3, 1, 256, {255, 0, 16});
  const GrayImage q = quantize(img, 4);
  CHECK(q.levels() == 16);
  CHECK(q.at(0, 0) == 15);
  CHECK(q.at(0, 1) == 0);
  CHECK(q.at(0, 2) == 1);

  CHECK(code_of([&] { quantize(q, 5); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { quantize(img, 0); }) == ErrorCode::InvalidArgument);

  const GrayImage m = apply_mask(img, std::vector<bool>{false, true, false});
  CHECK(quantize(m, 2).mask() == m.mask());
}

TEST_CASE("quantize keeps order and range over random images") {
  Rng rng(11);
  for (int t = 0; t < 1000; ++t) {
    const int bpp = 1 + static_cast<int>(rng.below(8));
    const GrayImage img = oracle::random_image(rng, 6, 5, 256);
    const GrayImage q = quantize(img, bpp);
    for (std::size_t i = 0; i < img.size(); ++i) {
      REQUIRE(q.pixels()[i] < (1u << bpp));
      for (std::size_t j = 0; j < img.size(); ++j)
        if (img.pixels()[i] <= img.pixels()[j]) REQUIRE(q.pixels()[i] <= q.pixels()[j]);
    }
  }
}

TEST_CASE("apply_mask from files") {
  const auto dir = testutil::scratch_dir("image_mask");
  const GrayImage img = testutil::image_from(4, 4, 256, std::vector<std::uint16_t>(16, 9));

  testutil::write_raw_pgm(dir / "zeros.pgm", 4, 4, std::vector<std::uint8_t>(16, 0));
  CHECK(apply_mask(img, dir / "zeros.pgm").valid_count() == 16);

  testutil::write_raw_pgm(dir / "ones.pgm", 4, 4, std::vector<std::uint8_t>(16, 255));
  const GrayImage none = apply_mask(img, dir / "ones.pgm");
  CHECK(none.valid_count() == 0);
  CHECK(code_of([&] { normalize_intensity(none); }) == ErrorCode::AllMasked);

  std::vector<std::uint8_t> half(16, 0);
  std::fill(half.begin(), half.begin() + 8, 255);
  testutil::write_raw_pgm(dir / "half.pgm", 4, 4, half);
  CHECK(apply_mask(img, dir / "half.pgm").valid_count() == 8);

  testutil::write_raw_pgm(dir / "small.pgm", 2, 2, {0, 0, 0, 0});
  CHECK(code_of([&] { apply_mask(img, dir / "small.pgm"); }) == ErrorCode::DimensionMismatch);

  std::vector<std::uint8_t> grey(16, 0);
  grey[0] = 255;
  grey[1] = 128;
  testutil::write_raw_pgm(dir / "grey.pgm", 4, 4, grey);
  CHECK(code_of([&] { apply_mask(img, dir / "grey.pgm"); }) == ErrorCode::Format);
}

TEST_CASE("apply_mask conserves the valid count") {
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    const GrayImage img = oracle::random_image(rng, 7, 4, 16);
    std::vector<bool> lesion(img.size());
    std::size_t ones = 0;
    for (std::size_t i = 0; i < lesion.size(); ++i) ones += (lesion[i] = rng.bernoulli(0.3)) ? 1 : 0;
    CHECK(apply_mask(img, lesion).valid_count() == img.size() - ones);
  }
}

TEST_CASE("resample nearest neighbour") {
  const GrayImage img = testutil::image_from(2, 2, 256, {1, 2, 3, 4});
  CHECK(resample(img, 2, 2) == img);

  const GrayImage up = resample(img, 4, 4);
  const std::vector<std::uint16_t> expect = {1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4};
  CHECK(std::vector<std::uint16_t>(up.pixels().begin(), up.pixels().end()) == expect);

  // 4x4 -> 2x2 samples source pixels (1,1), (1,3), (3,1), (3,3).
  std::vector<bool> lesion(16, false);
  lesion[1 * 4 + 3] = true;
  const GrayImage m = apply_mask(testutil::image_from(4, 4, 256, std::vector<std::uint16_t>(16, 0)), lesion);
  const GrayImage down = resample(m, 2, 2);
  CHECK(down.valid(0, 0));
  CHECK(!down.valid(0, 1));
  CHECK(down.valid(1, 0));
  CHECK(down.valid(1, 1));

  lesion.assign(16, false);
  lesion[0] = true;  // never sampled
  CHECK(resample(apply_mask(m.with_mask(std::nullopt), lesion), 2, 2).valid_count() == 4);
  CHECK(code_of([&] { resample(img, 0, 3); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("GrayImage rejects invalid construction") {
  CHECK(code_of([] { GrayImage(0, 1, 2, {}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { GrayImage(1, 1, 1, {0}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { GrayImage(1, 1, 2, {2}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { GrayImage(2, 1, 2, {0, 1}, std::vector<bool>{true}); }) == ErrorCode::DimensionMismatch);
}
