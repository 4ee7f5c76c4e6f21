// Copyright 2026 The streamctr Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Bounded exemplar memory of past training samples.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "streamctr/data_pipeline.h"
#include "streamctr/random.h"

namespace streamctr::engine {

enum class ReplayPolicy {
  kReservoir,  // every sample seen so far is retained with probability C / n
  kFifo,       // the C most recent samples
};

std::string to_string(ReplayPolicy p);
ReplayPolicy replay_policy_from_string(const std::string& name);

class ExemplarBuffer {
 public:
  ExemplarBuffer(std::size_t capacity, ReplayPolicy policy, std::uint64_t seed);

  // Offers every sample in order. Capacity 0 ignores all input.
  void update(std::span<const data::EncodedSample> samples);

  const std::vector<data::EncodedSample>& items() const { return items_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t seen() const { return seen_; }
  ReplayPolicy policy() const { return policy_; }
  bool empty() const { return items_.empty(); }

 private:
  std::size_t capacity_;
  ReplayPolicy policy_;
  Rng rng_;
  std::vector<data::EncodedSample> items_;
  std::size_t seen_ = 0;
  std::size_t next_ = 0;  // fifo write position
};

// hour_train followed by floor(r * |hour_train|) uniform draws (with
// replacement) from the buffer; the buffer then absorbs hour_train. An empty
// buffer contributes nothing.
std::vector<data::EncodedSample> replay_mix(std::span<const data::EncodedSample> hour_train,
                                            ExemplarBuffer& buffer, double mix_ratio, Rng& rng);

}  // namespace streamctr::engine
