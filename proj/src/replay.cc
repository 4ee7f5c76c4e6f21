// Copyright 2026 The streamctr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "streamctr/replay.h"

#include <cmath>
#include <random>
#include <stdexcept>

#include "streamctr/errors.h"

namespace streamctr::engine {

std::string to_string(ReplayPolicy p) { return p == ReplayPolicy::kReservoir ? "reservoir" : "fifo"; }

ReplayPolicy replay_policy_from_string(const std::string& name) {
  if (name == "reservoir") return ReplayPolicy::kReservoir;
  if (name == "fifo") return ReplayPolicy::kFifo;
  throw ConfigError("unknown replay policy '" + name + "' (expected reservoir|fifo)");
}

ExemplarBuffer::ExemplarBuffer(std::size_t capacity, ReplayPolicy policy, std::uint64_t seed)
    : capacity_(capacity), policy_(policy), rng_(derive_rng(seed, {0x52504c59})) {
  items_.reserve(capacity);
}

void ExemplarBuffer::update(std::span<const data::EncodedSample> samples) {
  if (capacity_ == 0) return;
  for (const data::EncodedSample& s : samples) {
    ++seen_;
    if (items_.size() < capacity_) {
      items_.push_back(s);
      continue;
    }
    if (policy_ == ReplayPolicy::kFifo) {
      items_[next_] = s;
      next_ = (next_ + 1) % capacity_;
      continue;
    }
    // Algorithm R: sample i survives with probability C / i.
    std::uniform_int_distribution<std::size_t> pick(0, seen_ - 1);
    const std::size_t j = pick(rng_);
    if (j < capacity_) items_[j] = s;
  }
}

std::vector<data::EncodedSample> replay_mix(std::span<const data::EncodedSample> hour_train,
                                            ExemplarBuffer& buffer, double mix_ratio, Rng& rng) {
  if (!(mix_ratio >= 0.0)) throw ConfigError("replay mix ratio must be >= 0");
  std::vector<data::EncodedSample> out(hour_train.begin(), hour_train.end());
  if (!buffer.empty()) {
    const auto draws = static_cast<std::size_t>(std::floor(mix_ratio * static_cast<double>(hour_train.size())));
    std::uniform_int_distribution<std::size_t> pick(0, buffer.items().size() - 1);
    out.reserve(out.size() + draws);
    for (std::size_t i = 0; i < draws; ++i) out.push_back(buffer.items()[pick(rng)]);
  }
  buffer.update(hour_train);
  return out;
}

}  // namespace streamctr::engine
