// Copyright 2026 The streamctr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "streamctr/data_pipeline.h"

#include <doctest.h>

#include <set>
#include <sstream>

#include "../oracles.h"
#include "streamctr/errors.h"

using namespace streamctr;
using namespace streamctr::data;

TEST_SUITE("data_pipeline") {
TEST_CASE("ingest reads the default layout") {
  std::istringstream in(
      "id,click,hour,C1,site\n"
      "1,0,14102100,a,x\n"
      "2,1,14102101,b,x\n");
  const RawDataset ds = ingest(in);
  CHECK(ds.field_names == std::vector<std::string>{"C1", "site"});
  REQUIRE(ds.records.size() == 2);
  CHECK(ds.records[1].label == 1);
  CHECK(ds.records[1].hour_stamp == "14102101");
  CHECK(ds.records[1].fields == std::vector<std::string>{"b", "x"});
}

TEST_CASE("ingest honors a format descriptor") {
  std::istringstream in("y;t;keep;drop\n1;14102100;k;d\n");
  FormatDescriptor fmt;
  fmt.label_column = "y";
  fmt.hour_column = "t";
  fmt.ignored_columns = {"drop"};
  fmt.delimiter = ';';
  const RawDataset ds = ingest(in, fmt);
  CHECK(ds.field_names == std::vector<std::string>{"keep"});
  CHECK(ds.records[0].fields == std::vector<std::string>{"k"});
}

TEST_CASE("ingest rejects malformed input with a line number") {
  std::istringstream short_row("id,click,hour,C1\n1,0,14102100\n");
  CHECK_THROWS_AS(ingest(short_row), DataError);
  std::istringstream bad_label("id,click,hour,C1\n1,2,14102100,a\n");
  try {
    ingest(bad_label);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }
  std::istringstream no_label("id,hour,C1\n1,14102100,a\n");
  CHECK_THROWS_AS(ingest(no_label), DataError);
  std::istringstream bad_hour("id,click,hour,C1\n1,0,14133100,a\n");
  CHECK_THROWS_AS(ingest(bad_hour), DataError);
}

TEST_CASE("hour stamps round-trip and are consecutive") {
  const std::int64_t a = parse_hour_stamp("14102123");
  const std::int64_t b = parse_hour_stamp("14102200");
  CHECK(b - a == 1);
  CHECK(format_hour_stamp(a) == "14102123");
  CHECK(parse_hour_stamp("00010100") == 0);
  CHECK(parse_hour_stamp("00010200") == 24);
  // 2012 is a leap year.
  CHECK(parse_hour_stamp("12030100") - parse_hour_stamp("12022800") == 48);
  CHECK_THROWS_AS(parse_hour_stamp("1410210"), DataError);
  CHECK_THROWS_AS(parse_hour_stamp("14102124"), DataError);
  CHECK_THROWS_AS(parse_hour_stamp("13022900"), DataError);
}

TEST_CASE("vocabulary keeps frequent tokens in first-appearance order") {
  std::vector<RawRecord> recs = {
      {0, "14102100", {"b", "x"}}, {0, "14102100", {"a", "x"}}, {1, "14102100", {"b", "y"}},
      {0, "14102100", {"a", "z"}}, {0, "14102100", {"c", "x"}}};
  const VocabMap v = build_vocab(recs, 2, 2);
  CHECK(v.lookup(0, "b") == 1);
  CHECK(v.lookup(0, "a") == 2);
  CHECK(v.lookup(0, "c") == VocabMap::kOovIndex);
  CHECK(v.lookup(0, "never") == VocabMap::kOovIndex);
  CHECK(v.size(0) == 3);
  CHECK(v.size(1) == 2);
  CHECK(v.token(0, 2) == "a");
  const VocabMap all = build_vocab(recs, 2, 1);
  CHECK(all.size(0) == 4);
  CHECK(all.size(1) == 4);
}

TEST_CASE("encode maps hours relative to the origin") {
  std::vector<RawRecord> recs = {{1, "14102105", {"a"}}, {0, "14102103", {"q"}}};
  const VocabMap v = build_vocab(recs, 1, 1);
  const std::int64_t origin = earliest_hour(recs);
  const auto enc = encode(recs, v, origin);
  CHECK(enc[0].hour_index == 2);
  CHECK(enc[1].hour_index == 0);
  CHECK(enc[0].label == 1);
  CHECK(enc[0].field_indices[0] == 1);
}

TEST_CASE("pretrain hour count for the standard split") {
  CHECK(pretrain_hour_count(0.7, 240) == 168);
  CHECK(pretrain_hour_count(2.0 / 3.0, 36) == 24);
  CHECK(pretrain_hour_count(0.7, 10) == 7);
}

TEST_CASE("schedule partitions every sample exactly once") {
  const std::vector<std::int32_t> sizes = {5, 7};
  auto samples = oracle::random_samples(4000, sizes, 20, 3);
  ScheduleOptions o;
  o.seed = 9;
  const StreamSchedule s = make_schedule(samples, sizes, o);
  CHECK(s.total_hours == 20);
  CHECK(s.pretrain_hours == 14);
  CHECK(s.horizon() == 6);
  std::size_t total = s.pretrain_train.size() + s.pretrain_test.size();
  for (const EncodedSample& x : s.pretrain_train) CHECK(x.hour_index < 14);
  for (std::int32_t t = 1; t <= s.horizon(); ++t) {
    const HourBucket& b = s.buckets[static_cast<std::size_t>(t - 1)];
    CHECK(b.hour_index == 13 + t);
    for (const EncodedSample& x : b.train) CHECK(x.hour_index == b.hour_index);
    for (const EncodedSample& x : b.test) CHECK(x.hour_index == b.hour_index);
    const double n = static_cast<double>(b.train.size() + b.test.size());
    CHECK(static_cast<double>(b.test.size()) == doctest::Approx(n * o.holdout_fraction).epsilon(0.02));
    total += b.train.size() + b.test.size();
    CHECK(&s.train_set(t) == &b.train);
    CHECK(&s.test_set(t) == &b.test);
  }
  CHECK(&s.test_set(0) == &s.pretrain_test);
  CHECK(total == samples.size());
}

TEST_CASE("schedule is deterministic and sensitive to the split seed") {
  const std::vector<std::int32_t> sizes = {4, 4};
  auto samples = oracle::random_samples(500, sizes, 10, 1);
  ScheduleOptions o;
  const auto a = make_schedule(samples, sizes, o);
  const auto b = make_schedule(samples, sizes, o);
  CHECK(schedule_fingerprint(a) == schedule_fingerprint(b));
  o.seed = 1;
  const auto c = make_schedule(samples, sizes, o);
  CHECK(schedule_fingerprint(a) != schedule_fingerprint(c));
}

TEST_CASE("schedule binary form round-trips") {
  const std::vector<std::int32_t> sizes = {3, 6, 2};
  auto samples = oracle::random_samples(300, sizes, 12, 5);
  const auto a = make_schedule(samples, sizes, {});
  std::stringstream buf;
  write_schedule(buf, a);
  const std::string bytes = buf.str();
  const StreamSchedule b = read_schedule(buf);
  CHECK(schedule_fingerprint(a) == schedule_fingerprint(b));
  CHECK(b.buckets.size() == a.buckets.size());
  CHECK(b.pretrain_test == a.pretrain_test);
  std::stringstream again;
  write_schedule(again, b);
  CHECK(again.str() == bytes);
  std::istringstream truncated(bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(read_schedule(truncated), DataError);
}

TEST_CASE("degenerate hours are flagged") {
  std::vector<EncodedSample> samples;
  for (int h = 0; h < 10; ++h) {
    for (int i = 0; i < 20; ++i) samples.push_back({{i % 3}, h == 8 ? 0 : i % 2, h});
  }
  const auto s = make_schedule(samples, {3}, {});
  CHECK(s.degenerate_timestamps == std::vector<std::int32_t>{2});
}

TEST_CASE("schedule rejects bad options") {
  auto samples = oracle::random_samples(100, {3}, 5, 1);
  ScheduleOptions o;
  o.pretrain_fraction = 1.0;
  CHECK_THROWS_AS(make_schedule(samples, {3}, o), ConfigError);
  o = {};
  o.holdout_fraction = 0.0;
  CHECK_THROWS_AS(make_schedule(samples, {3}, o), ConfigError);
  CHECK_THROWS_AS(make_schedule(samples, {2}, {}), DataError);
}

TEST_CASE("batches cover every index once") {
  const auto b = batches(103, 10, 4);
  CHECK(b.size() == 11);
  CHECK(b.back().size() == 3);
  std::set<std::size_t> seen;
  for (const auto& batch : b) seen.insert(batch.begin(), batch.end());
  CHECK(seen.size() == 103);
  CHECK(batches(103, 10, 4) == b);
  CHECK(batches(103, 10, 5) != b);
  CHECK_THROWS_AS(batches(5, 0, 0), ConfigError);
}
}
