#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomgraph/util.hpp>

using namespace atomgraph;

TEST_CASE("payload codec round-trips") {
  payload_writer w;
  w.u8(0xab).u16(0x1234).u32(0xdeadbeef).u64(0x0123456789abcdefULL).f64(-1.5);
  payload inner = {1, 2, 3};
  w.blob(inner);
  payload p = w.take();

  payload_reader r(p);
  CHECK(r.u8() == 0xab);
  CHECK(r.u16() == 0x1234);
  CHECK(r.u32() == 0xdeadbeef);
  CHECK(r.u64() == 0x0123456789abcdefULL);
  CHECK(r.f64() == -1.5);
  CHECK(r.blob() == inner);
  CHECK(r.done());
}

TEST_CASE("payload reader underrun throws") {
  payload p = {1, 2, 3};
  payload_reader r(p);
  CHECK_THROWS_AS(r.u64(), codec_error);
}

TEST_CASE("little-endian layout") {
  payload p = payload_writer().u32(0x01020304).take();
  CHECK(p == payload{0x04, 0x03, 0x02, 0x01});
}

TEST_CASE("hex round-trip") {
  payload p = {0x00, 0xff, 0x10, 0xab};
  CHECK(to_hex(p) == "00ff10ab");
  CHECK(from_hex("00ff10ab") == p);
  CHECK(from_hex(to_hex(payload{})) == payload{});
  CHECK_THROWS_AS(from_hex("abc"), codec_error);
  CHECK_THROWS_AS(from_hex("zz"), codec_error);
}

TEST_CASE("splitmix64 is a stable function") {
  CHECK(splitmix64(0) == splitmix64(0));
  CHECK(splitmix64(1) != splitmix64(2));
  // spread check over a small range
  std::vector<std::uint64_t> vals;
  for (std::uint64_t i = 0; i < 64; ++i) vals.push_back(splitmix64(i) % 8);
  bool any_nonzero = false;
  for (auto v : vals) any_nonzero |= v != 0;
  CHECK(any_nonzero);
}

TEST_CASE("rng determinism and bounds") {
  rng a(42), b(42), c(43), d(7);
  bool same = true, diff = false;
  for (int i = 0; i < 100; ++i) {
    auto x = a.next_u64(), y = b.next_u64(), z = c.next_u64();
    same &= x == y;
    diff |= x != z;
    double u = d.unit();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(d.below(7) < 7);
  }
  CHECK(same);
  CHECK(diff);
}

TEST_CASE("hasher64 distinguishes payload boundaries") {
  hasher64 h1, h2;
  h1.payload_bytes({1, 2}).payload_bytes({3});
  h2.payload_bytes({1}).payload_bytes({2, 3});
  CHECK(h1.digest() != h2.digest());
}
