// Copyright 2026 The streamctr Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>

namespace streamctr {

// 64-bit FNV-1a. Used for checkpoint and dataset fingerprints, not for security.
class Fnv1a64 {
 public:
  void update(std::span<const std::byte> bytes) {
    for (std::byte b : bytes) {
      state_ ^= static_cast<std::uint64_t>(b);
      state_ *= kPrime;
    }
  }

  void update(std::string_view text) { update(std::as_bytes(std::span(text.data(), text.size()))); }

  template <typename T>
    requires std::is_trivially_copyable_v<T>
  void update_value(const T& value) {
    update(std::as_bytes(std::span(&value, 1)));
  }

  template <typename T>
    requires std::is_trivially_copyable_v<T>
  void update_values(std::span<const T> values) {
    update(std::as_bytes(values));
  }

  std::uint64_t digest() const { return state_; }

 private:
  static constexpr std::uint64_t kOffset = 14695981039346656037ULL;
  static constexpr std::uint64_t kPrime = 1099511628211ULL;
  std::uint64_t state_ = kOffset;
};

inline std::string hex_digest(std::uint64_t value) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[value & 0xF];
    value >>= 4;
  }
  return out;
}

}  // namespace streamctr
