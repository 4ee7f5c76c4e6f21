// Copyright 2026 The streamctr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "streamctr/checkpoint.h"

#include <algorithm>
#include <bit>
#include <istream>
#include <ostream>

#include "streamctr/errors.h"
#include "streamctr/hashing.h"

namespace streamctr::nn {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes little-endian");

constexpr char kMagic[8] = {'S', 'C', 'T', 'R', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError("truncated checkpoint");
  return v;
}

}  // namespace

void write_checkpoint(std::ostream& out, std::span<const TensorView> tensors) {
  out.write(kMagic, sizeof(kMagic));
  put(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const TensorView& t : tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(t.value->rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(t.value->cols()));
    out.write(reinterpret_cast<const char*>(t.value->data()),
              static_cast<std::streamsize>(t.value->size() * sizeof(double)));
  }
  if (!out) throw DataError("failed to write checkpoint");
}

NamedTensors read_checkpoint(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(magic, magic + 8, kMagic)) throw DataError("not a checkpoint file");
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) throw DataError("unsupported checkpoint version " + std::to_string(version));
  const auto count = get<std::uint32_t>(in);
  NamedTensors out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(get<std::uint32_t>(in), '\0');
    in.read(name.data(), static_cast<std::streamsize>(name.size()));
    const auto rows = get<std::uint64_t>(in);
    const auto cols = get<std::uint64_t>(in);
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw DataError("truncated checkpoint tensor '" + name + "'");
    out.emplace_back(std::move(name), std::move(m));
  }
  return out;
}

std::uint64_t tensors_hash(std::span<const TensorView> tensors) {
  Fnv1a64 h;
  for (const TensorView& t : tensors) {
    h.update(t.name);
    h.update_value(static_cast<std::int64_t>(t.value->rows()));
    h.update_value(static_cast<std::int64_t>(t.value->cols()));
    h.update_values(std::span<const double>(t.value->data(), static_cast<std::size_t>(t.value->size())));
  }
  return h.digest();
}

}  // namespace streamctr::nn
