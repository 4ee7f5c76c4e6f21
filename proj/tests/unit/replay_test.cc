// Copyright 2026 The streamctr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "streamctr/replay.h"

#include <doctest.h>

#include <set>

using namespace streamctr;
using namespace streamctr::engine;

namespace {

std::vector<data::EncodedSample> numbered(int from, int to) {
  std::vector<data::EncodedSample> out;
  for (int i = from; i < to; ++i) out.push_back({{i}, i % 2, 0});
  return out;
}

}  // namespace

TEST_SUITE("replay") {
TEST_CASE("reservoir keeps at most capacity distinct samples") {
  ExemplarBuffer buf(10, ReplayPolicy::kReservoir, 1);
  buf.update(numbered(0, 5));
  CHECK(buf.items().size() == 5);
  buf.update(numbered(5, 100));
  CHECK(buf.items().size() == 10);
  CHECK(buf.seen() == 100);
  std::set<int> ids;
  for (const auto& s : buf.items()) ids.insert(s.field_indices[0]);
  CHECK(ids.size() == 10);
}

TEST_CASE("fifo keeps the most recent samples") {
  ExemplarBuffer buf(4, ReplayPolicy::kFifo, 1);
  buf.update(numbered(0, 10));
  std::set<int> ids;
  for (const auto& s : buf.items()) ids.insert(s.field_indices[0]);
  CHECK(ids == std::set<int>{6, 7, 8, 9});
}

TEST_CASE("capacity zero stores nothing") {
  ExemplarBuffer buf(0, ReplayPolicy::kReservoir, 1);
  buf.update(numbered(0, 10));
  CHECK(buf.empty());
}

TEST_CASE("reservoir content depends only on the seed") {
  ExemplarBuffer a(5, ReplayPolicy::kReservoir, 3), b(5, ReplayPolicy::kReservoir, 3), c(5, ReplayPolicy::kReservoir, 4);
  a.update(numbered(0, 50));
  b.update(numbered(0, 20));
  b.update(numbered(20, 50));
  c.update(numbered(0, 50));
  CHECK(a.items() == b.items());
  CHECK(a.items() != c.items());
}

TEST_CASE("replay_mix draws first, then absorbs the hour") {
  ExemplarBuffer buf(100, ReplayPolicy::kReservoir, 1);
  Rng rng(2);
  const auto first = numbered(0, 40);
  const auto mixed0 = replay_mix(first, buf, 0.25, rng);
  CHECK(mixed0.size() == 40);
  CHECK(buf.items().size() == 40);
  const auto second = numbered(100, 140);
  const auto mixed = replay_mix(second, buf, 0.25, rng);
  REQUIRE(mixed.size() == 50);
  for (std::size_t i = 0; i < 40; ++i) CHECK(mixed[i] == second[i]);
  for (std::size_t i = 40; i < 50; ++i) CHECK(mixed[i].field_indices[0] < 40);
  CHECK(buf.seen() == 80);
}
}
