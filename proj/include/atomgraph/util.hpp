/**
 * Copyright (c) 2012 Carnegie Mellon University.
 *     All rights reserved.
 *
 *  Licensed under the Apache License, Version 2.0 (the "License");
 *  you may not use this file except in compliance with the License.
 *  You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 *  Unless required by applicable law or agreed to in writing,
 *  software distributed under the License is distributed on an "AS
 *  IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either
 *  express or implied.  See the License for the specific language
 *  governing permissions and limitations under the License.
 */

#ifndef ATOMGRAPH_UTIL_HPP
#define ATOMGRAPH_UTIL_HPP

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace atomgraph {

using payload = std::vector<std::uint8_t>;

class codec_error : public std::runtime_error {
public:
  explicit codec_error(const std::string& what) : std::runtime_error(what) {}
};

/// 64-bit mixer; also the hash partitioner. Output is fixed for all time:
/// atom(v) = splitmix64(v) mod k is part of the atom file contract.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Incremental FNV-1a, used for file checksums and trace digests.
class hasher64 {
public:
  hasher64& bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
    return *this;
  }
  hasher64& u64(std::uint64_t v) {
    std::uint8_t buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = std::uint8_t(v >> (8 * i));
    return bytes(buf, 8);
  }
  hasher64& payload_bytes(const payload& p) {
    u64(p.size());
    return bytes(p.data(), p.size());
  }
  std::uint64_t digest() const { return state_; }

private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t fnv1a64(const void* data, std::size_t n) {
  return hasher64().bytes(data, n).digest();
}

/// Deterministic, portable RNG. All randomness in the system flows through
/// this so that runs are reproducible across platforms; std::* distributions
/// are implementation-defined and must not be used.
class rng {
public:
  explicit rng(std::uint64_t seed) : state_(seed ? seed : 0x853c49e6748fea9bULL) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return splitmix64(state_);
  }

  /// Uniform in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    // rejection sampling keeps the draw unbiased
    const std::uint64_t limit = n * ((~std::uint64_t(0)) / n);
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
  }

  /// Uniform double in [0, 1).
  double unit() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  /// Box-Muller; one value per call, cached pair discarded for simplicity.
  double normal() {
    double u1 = unit(), u2 = unit();
    while (u1 <= 1e-300) u1 = unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  /// Derive an independent stream for a named purpose.
  rng fork(std::uint64_t salt) const { return rng(splitmix64(state_ ^ salt)); }

private:
  std::uint64_t state_;
};

// ---- little-endian payload codec ----------------------------------------

class payload_writer {
public:
  payload_writer& u8(std::uint8_t v) {
    buf_.push_back(v);
    return *this;
  }
  payload_writer& u16(std::uint16_t v) { return uint(v, 2); }
  payload_writer& u32(std::uint32_t v) { return uint(v, 4); }
  payload_writer& u64(std::uint64_t v) { return uint(v, 8); }
  payload_writer& f64(double v) { return u64(std::bit_cast<std::uint64_t>(v)); }
  payload_writer& raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    buf_.insert(buf_.end(), p, p + n);
    return *this;
  }
  payload_writer& blob(const payload& p) {
    u32(std::uint32_t(p.size()));
    return raw(p.data(), p.size());
  }
  payload take() { return std::move(buf_); }
  const payload& view() const { return buf_; }

private:
  payload_writer& uint(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(std::uint8_t(v >> (8 * i)));
    return *this;
  }
  payload buf_;
};

class payload_reader {
public:
  explicit payload_reader(std::span<const std::uint8_t> data) : data_(data) {}
  explicit payload_reader(const payload& p) : data_(p.data(), p.size()) {}

  std::uint8_t u8() { return std::uint8_t(uint(1)); }
  std::uint16_t u16() { return std::uint16_t(uint(2)); }
  std::uint32_t u32() { return std::uint32_t(uint(4)); }
  std::uint64_t u64() { return uint(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  payload blob() {
    std::uint32_t n = u32();
    return take_raw(n);
  }
  payload take_raw(std::size_t n) {
    need(n);
    payload out(data_.begin() + pos_, data_.begin() + pos_ + n);
    pos_ += n;
    return out;
  }
  std::size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return pos_ == data_.size(); }

private:
  std::uint64_t uint(int n) {
    need(std::size_t(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t(data_[pos_ + i]) << (8 * i);
    pos_ += std::size_t(n);
    return v;
  }
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw codec_error("payload underrun");
  }
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

inline std::string to_hex(const payload& p) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  s.reserve(p.size() * 2);
  for (std::uint8_t b : p) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 0xf]);
  }
  return s;
}

inline payload from_hex(const std::string& s) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (s.size() % 2 != 0) throw codec_error("odd hex length");
  payload p;
  p.reserve(s.size() / 2);
  for (std::size_t i = 0; i < s.size(); i += 2) {
    int hi = nibble(s[i]), lo = nibble(s[i + 1]);
    if (hi < 0 || lo < 0) throw codec_error("bad hex digit");
    p.push_back(std::uint8_t(hi << 4 | lo));
  }
  return p;
}

}  // namespace atomgraph

#endif
