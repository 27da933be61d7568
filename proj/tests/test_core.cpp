#include <bit>
#include <cstring>

#include "doctest.h"
#include "maf/core.hpp"
#include "support/test_util.hpp"

using namespace maf;
using test::TempDir;

namespace {

void push_f32le(std::vector<uint8_t>& out, float f) {
  const uint32_t u = std::bit_cast<uint32_t>(f);
  out.push_back(static_cast<uint8_t>(u));
  out.push_back(static_cast<uint8_t>(u >> 8));
  out.push_back(static_cast<uint8_t>(u >> 16));
  out.push_back(static_cast<uint8_t>(u >> 24));
}

void push_i32le(std::vector<uint8_t>& out, int32_t v) { push_f32le(out, std::bit_cast<float>(v)); }

std::vector<uint8_t> flo_bytes(int32_t w, int32_t h, const std::vector<float>& interleaved,
                               float magic = 202021.25f) {
  std::vector<uint8_t> bytes;
  push_f32le(bytes, magic);
  push_i32le(bytes, w);
  push_i32le(bytes, h);
  for (float f : interleaved) push_f32le(bytes, f);
  return bytes;
}

}  // namespace

TEST_CASE("read_flow parses a minimal well-formed file") {
  TempDir dir("flo");
  const auto path = dir / "min.flo";
  test::spit(path, flo_bytes(1, 1, {3.0f, 4.0f}));

  const FlowField f = read_flow(path);
  CHECK(f.width == 1);
  CHECK(f.height == 1);
  CHECK(f.fx == std::vector<double>{3.0});
  CHECK(f.fy == std::vector<double>{4.0});
  CHECK(f.valid == std::vector<uint8_t>{1});
}

TEST_CASE("read_flow rejects malformed containers") {
  TempDir dir("flo");

  SUBCASE("bad magic") {
    const auto path = dir / "bad_magic.flo";
    test::spit(path, flo_bytes(1, 1, {1.0f, 2.0f}, 0.0f));
    CHECK_THROWS_WITH_AS(read_flow(path), doctest::Contains("magic"), MafError);
    try {
      read_flow(path);
    } catch (const MafError& e) {
      CHECK(e.code() == Err::BadMagic);
    }
  }
  SUBCASE("truncated payload") {
    auto bytes = flo_bytes(2, 2, {1, 2, 3, 4, 5, 6, 7, 8});
    bytes.resize(bytes.size() - 5);
    const auto path = dir / "short.flo";
    test::spit(path, bytes);
    try {
      read_flow(path);
      FAIL("expected TruncatedFile");
    } catch (const MafError& e) {
      CHECK(e.code() == Err::TruncatedFile);
    }
  }
  SUBCASE("trailing bytes") {
    auto bytes = flo_bytes(1, 1, {1.0f, 2.0f});
    bytes.push_back(0);
    const auto path = dir / "long.flo";
    test::spit(path, bytes);
    try {
      read_flow(path);
      FAIL("expected TruncatedFile");
    } catch (const MafError& e) {
      CHECK(e.code() == Err::TruncatedFile);
    }
  }
  SUBCASE("non-positive dimensions") {
    const auto path = dir / "dims.flo";
    test::spit(path, flo_bytes(0, 4, {}));
    try {
      read_flow(path);
      FAIL("expected NonPositiveDims");
    } catch (const MafError& e) {
      CHECK(e.code() == Err::NonPositiveDims);
    }
  }
  SUBCASE("missing file") {
    try {
      read_flow(dir / "nope.flo");
      FAIL("expected ArtifactMissing");
    } catch (const MafError& e) {
      CHECK(e.code() == Err::ArtifactMissing);
    }
  }
}

TEST_CASE("flow sentinel values mark pixels invalid but survive round trips") {
  TempDir dir("flo");
  const auto path = dir / "sentinel.flo";
  test::spit(path, flo_bytes(2, 1, {1e10f, 0.5f, -1.0f, 2.0f}));

  const FlowField f = read_flow(path);
  CHECK(f.valid == std::vector<uint8_t>{0, 1});
  CHECK(f.fx[0] == doctest::Approx(1e10).epsilon(1e-6));

  const auto path2 = dir / "sentinel2.flo";
  write_flow(path2, f);
  CHECK(test::slurp(path) == test::slurp(path2));
}

TEST_CASE("flow write/read round trip is bit-identical") {
  TempDir dir("flo");
  Rng rng(7);
  for (int iter = 0; iter < 20; ++iter) {
    const FlowField f = test::random_flow(rng, 8, 8, 0.05);
    const auto path = dir / "rt.flo";
    write_flow(path, f);
    const FlowField g = read_flow(path);
    CHECK(g.width == f.width);
    CHECK(g.height == f.height);
    CHECK(g.fx == f.fx);
    CHECK(g.fy == f.fy);
    CHECK(g.valid == f.valid);
    const auto path2 = dir / "rt2.flo";
    write_flow(path2, g);
    CHECK(test::slurp(path) == test::slurp(path2));
  }
}

TEST_CASE("read_depth parses PFM") {
  TempDir dir("pfm");

  SUBCASE("1x1 value") {
    std::vector<uint8_t> bytes{'P', 'f', '\n', '1', ' ', '1', '\n', '-', '1', '\n'};
    push_f32le(bytes, 2.5f);
    const auto path = dir / "one.pfm";
    test::spit(path, bytes);
    const DepthMap d = read_depth(path);
    CHECK(d.width == 1);
    CHECK(d.height == 1);
    CHECK(d.z == std::vector<double>{2.5});
    CHECK(d.valid == std::vector<uint8_t>{1});
  }
  SUBCASE("non-positive sample is invalid, not an error") {
    std::vector<uint8_t> bytes{'P', 'f', '\n', '2', ' ', '1', '\n', '-', '1', '\n'};
    push_f32le(bytes, -1.0f);
    push_f32le(bytes, 3.0f);
    const auto path = dir / "neg.pfm";
    test::spit(path, bytes);
    const DepthMap d = read_depth(path);
    CHECK(d.valid == std::vector<uint8_t>{0, 1});
    CHECK(d.z[0] == -1.0);
  }
  SUBCASE("big-endian raster via positive scale") {
    std::vector<uint8_t> bytes{'P', 'f', '\n', '1', ' ', '1', '\n', '1', '\n'};
    const uint32_t u = std::bit_cast<uint32_t>(2.5f);
    bytes.push_back(static_cast<uint8_t>(u >> 24));
    bytes.push_back(static_cast<uint8_t>(u >> 16));
    bytes.push_back(static_cast<uint8_t>(u >> 8));
    bytes.push_back(static_cast<uint8_t>(u));
    const auto path = dir / "be.pfm";
    test::spit(path, bytes);
    CHECK(read_depth(path).z == std::vector<double>{2.5});
  }
  SUBCASE("rows are stored bottom-up") {
    // 1x2 raster: file stores the bottom row (image row 1) first
    std::vector<uint8_t> bytes{'P', 'f', '\n', '1', ' ', '2', '\n', '-', '1', '\n'};
    push_f32le(bytes, 7.0f);  // bottom row
    push_f32le(bytes, 5.0f);  // top row
    const auto path = dir / "rows.pfm";
    test::spit(path, bytes);
    const DepthMap d = read_depth(path);
    CHECK(d.z == std::vector<double>{5.0, 7.0});
  }
}

TEST_CASE("read_depth rejects malformed headers") {
  TempDir dir("pfm");
  auto expect_code = [&](const std::vector<uint8_t>& bytes, Err code) {
    const auto path = dir / "bad.pfm";
    test::spit(path, bytes);
    try {
      read_depth(path);
      FAIL("expected error");
    } catch (const MafError& e) {
      CHECK(e.code() == code);
    }
  };

  expect_code({'P', 'F', '\n', '1', ' ', '1', '\n', '-', '1', '\n', 0, 0, 0, 0}, Err::BadHeader);
  expect_code({'X', 'f', '\n', '1', ' ', '1', '\n', '-', '1', '\n', 0, 0, 0, 0}, Err::BadHeader);
  expect_code({'P', 'f', '\n', 'a', ' ', '1', '\n', '-', '1', '\n', 0, 0, 0, 0}, Err::BadHeader);
  expect_code({'P', 'f', '\n', '0', ' ', '1', '\n', '-', '1', '\n'}, Err::BadHeader);
  // truncated raster
  expect_code({'P', 'f', '\n', '1', ' ', '2', '\n', '-', '1', '\n', 0, 0, 0, 0}, Err::TruncatedFile);
}

TEST_CASE("depth write/read round trip is bit-identical") {
  TempDir dir("pfm");
  Rng rng(11);
  for (int iter = 0; iter < 20; ++iter) {
    const DepthMap d = test::random_depth(rng, 8, 8);
    const auto path = dir / "rt.pfm";
    write_depth(path, d);
    const DepthMap e = read_depth(path);
    CHECK(e.z == d.z);
    CHECK(e.valid == d.valid);
    const auto path2 = dir / "rt2.pfm";
    write_depth(path2, e);
    CHECK(test::slurp(path) == test::slurp(path2));
  }
}

TEST_CASE("decode_rle basics") {
  SUBCASE("all background") {
    const Mask m = decode_rle({4}, 2, 2);
    CHECK(m.data == std::vector<uint8_t>{0, 0, 0, 0});
  }
  SUBCASE("all foreground via zero-length leading run") {
    const Mask m = decode_rle({0, 4}, 2, 2);
    CHECK(m.data == std::vector<uint8_t>{1, 1, 1, 1});
  }
  SUBCASE("column-major order") {
    // position 1 in column-major order is (row 1, col 0)
    const Mask m = decode_rle({1, 1, 2}, 2, 2);
    CHECK(m.data == std::vector<uint8_t>{0, 0, 1, 0});
    CHECK(encode_rle(m) == std::vector<int64_t>{1, 1, 2});
  }
  SUBCASE("sum mismatch") {
    try {
      decode_rle({3}, 2, 2);
      FAIL("expected RunSumMismatch");
    } catch (const MafError& e) {
      CHECK(e.code() == Err::RunSumMismatch);
    }
  }
  SUBCASE("negative run") {
    try {
      decode_rle({-1, 5}, 2, 2);
      FAIL("expected RunSumMismatch");
    } catch (const MafError& e) {
      CHECK(e.code() == Err::RunSumMismatch);
    }
  }
}

TEST_CASE("RLE round trips") {
  Rng rng(13);
  for (int iter = 0; iter < 100; ++iter) {
    const Mask m = test::random_mask(rng, 16, 16);
    CHECK(decode_rle(encode_rle(m), 16, 16) == m);
  }
  // canonical runs survive decode-encode too
  for (int iter = 0; iter < 100; ++iter) {
    const Mask m = test::random_mask(rng, 9, 5);
    const auto runs = encode_rle(m);
    CHECK(encode_rle(decode_rle(runs, 9, 5)) == runs);
  }
}

TEST_CASE("ScoreSource validation") {
  ScoreSource src;
  src.scores = {0.5, 1.0};
  CHECK_NOTHROW(src.validate());

  src.scores = {0.5, -1.0};
  CHECK_THROWS_AS(src.validate(), MafError);

  src.scores = {0.5, 1.0};
  src.alpha_mask = 1.5;
  CHECK_THROWS_AS(src.validate(), MafError);
}
