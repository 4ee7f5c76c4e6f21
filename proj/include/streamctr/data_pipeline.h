// Copyright 2026 The streamctr Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Raw log ingestion, vocabulary construction, encoding and the
// pretrain/streaming split with per-hour holdouts.

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace streamctr::data {

struct RawRecord {
  int label = 0;
  std::string hour_stamp;
  std::vector<std::string> fields;
};

// Column layout of a headered CSV. Defaults match the Avazu layout:
// id (ignored), click, hour (YYMMDDHH), then categorical columns.
struct FormatDescriptor {
  std::string label_column = "click";
  std::string hour_column = "hour";
  std::vector<std::string> ignored_columns = {"id"};
  // Empty means every column that is not label, hour or ignored, in file order.
  std::vector<std::string> feature_columns;
  char delimiter = ',';
};

struct RawDataset {
  std::vector<std::string> field_names;
  std::vector<RawRecord> records;
};

// Throws DataError naming the 1-based line number on malformed rows.
RawDataset ingest(std::istream& in, const FormatDescriptor& format = {});

// YYMMDDHH -> hours since 2000-01-01T00. Throws DataError on bad stamps.
std::int64_t parse_hour_stamp(std::string_view stamp);
std::string format_hour_stamp(std::int64_t hours);

class VocabMap {
 public:
  static constexpr std::int32_t kOovIndex = 0;

  VocabMap() = default;
  // tokens[f][i] is the token with index i + 1 in field f.
  VocabMap(std::vector<std::vector<std::string>> tokens, std::int64_t min_count);

  std::int32_t lookup(std::size_t field, const std::string& token) const;
  std::size_t num_fields() const { return tokens_.size(); }
  // Cardinality including the OOV slot.
  std::int32_t size(std::size_t field) const;
  std::vector<std::int32_t> sizes() const;
  std::int64_t min_count() const { return min_count_; }
  // Token for a non-OOV index.
  const std::string& token(std::size_t field, std::int32_t index) const;

 private:
  std::vector<std::vector<std::string>> tokens_;
  std::vector<std::unordered_map<std::string, std::int32_t>> index_;
  std::int64_t min_count_ = 1;
};

// Tokens whose frequency in `records` reaches min_count get indices >= 1 in
// first-appearance order; everything else maps to kOovIndex.
VocabMap build_vocab(std::span<const RawRecord> records, std::size_t num_fields,
                     std::int64_t min_count);

struct EncodedSample {
  std::vector<std::int32_t> field_indices;
  int label = 0;
  std::int32_t hour_index = 0;

  friend bool operator==(const EncodedSample&, const EncodedSample&) = default;
};

std::int64_t earliest_hour(std::span<const RawRecord> records);

// hour_origin is an absolute hour as returned by parse_hour_stamp.
std::vector<EncodedSample> encode(std::span<const RawRecord> records, const VocabMap& vocab,
                                  std::int64_t hour_origin);

struct ScheduleOptions {
  double pretrain_fraction = 0.7;
  double holdout_fraction = 0.5;
  std::uint64_t seed = 0;
  // <= 0 infers max(hour_index) + 1.
  std::int32_t total_hours = 0;
};

struct HourBucket {
  std::int32_t hour_index = 0;
  std::vector<EncodedSample> train;
  std::vector<EncodedSample> test;
};

struct StreamSchedule {
  std::vector<std::int32_t> field_sizes;
  std::int32_t total_hours = 0;
  std::int32_t pretrain_hours = 0;
  ScheduleOptions options;
  std::vector<EncodedSample> pretrain_train;
  std::vector<EncodedSample> pretrain_test;
  std::vector<HourBucket> buckets;
  // Streaming timestamps (1-based) whose hour has < 2 samples or a
  // single-class test half, so AUC is undefined there.
  std::vector<std::int32_t> degenerate_timestamps;

  std::int32_t horizon() const { return static_cast<std::int32_t>(buckets.size()); }
  // t = 0 addresses the pretraining block, t in [1, T] the streaming hours.
  const std::vector<EncodedSample>& train_set(std::int32_t t) const;
  const std::vector<EncodedSample>& test_set(std::int32_t t) const;
};

// Number of whole pretraining hours for a fraction of `total_hours`.
std::int32_t pretrain_hour_count(double pretrain_fraction, std::int32_t total_hours);

StreamSchedule make_schedule(std::vector<EncodedSample> samples,
                             std::vector<std::int32_t> field_sizes,
                             const ScheduleOptions& options);

// One pass over n samples in a seeded permutation; the last batch may be short.
std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size,
                                              std::uint64_t seed);

// Flat binary form. Identical schedules serialize to identical bytes.
void write_schedule(std::ostream& out, const StreamSchedule& schedule);
StreamSchedule read_schedule(std::istream& in);
std::uint64_t schedule_fingerprint(const StreamSchedule& schedule);

}  // namespace streamctr::data
