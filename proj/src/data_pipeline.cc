// Copyright 2026 The streamctr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "streamctr/data_pipeline.h"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "streamctr/errors.h"
#include "streamctr/hashing.h"
#include "streamctr/random.h"

namespace streamctr::data {
namespace {

std::vector<std::string> split_line(std::string_view line, char delimiter) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delimiter, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::string line_error(std::size_t line_no, const std::string& what) {
  return "line " + std::to_string(line_no) + ": " + what;
}

}  // namespace

RawDataset ingest(std::istream& in, const FormatDescriptor& format) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw DataError("missing header row");
  ++line_no;
  strip_cr(line);
  const std::vector<std::string> header = split_line(line, format.delimiter);

  auto column_of = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("header has no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };

  const std::size_t label_col = column_of(format.label_column);
  const std::size_t hour_col = column_of(format.hour_column);
  for (const auto& ignored : format.ignored_columns) {
    if (std::find(header.begin(), header.end(), ignored) == header.end()) {
      throw DataError("header has no ignored column '" + ignored + "'");
    }
  }

  RawDataset dataset;
  std::vector<std::size_t> feature_cols;
  if (format.feature_columns.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      const bool ignored = std::find(format.ignored_columns.begin(), format.ignored_columns.end(),
                                     header[c]) != format.ignored_columns.end();
      if (c == label_col || c == hour_col || ignored) continue;
      feature_cols.push_back(c);
      dataset.field_names.push_back(header[c]);
    }
  } else {
    for (const auto& name : format.feature_columns) {
      feature_cols.push_back(column_of(name));
      dataset.field_names.push_back(name);
    }
  }
  if (feature_cols.empty()) throw DataError("layout declares no feature columns");

  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    std::vector<std::string> cells = split_line(line, format.delimiter);
    if (cells.size() != header.size()) {
      throw DataError(line_error(line_no, "expected " + std::to_string(header.size()) +
                                              " columns, found " + std::to_string(cells.size())));
    }
    RawRecord record;
    const std::string& label = cells[label_col];
    if (label == "0") {
      record.label = 0;
    } else if (label == "1") {
      record.label = 1;
    } else {
      throw DataError(line_error(line_no, "label out of domain: '" + label + "'"));
    }
    try {
      parse_hour_stamp(cells[hour_col]);
    } catch (const DataError& e) {
      throw DataError(line_error(line_no, e.what()));
    }
    record.hour_stamp = std::move(cells[hour_col]);
    record.fields.reserve(feature_cols.size());
    for (std::size_t c : feature_cols) record.fields.push_back(std::move(cells[c]));
    dataset.records.push_back(std::move(record));
  }
  return dataset;
}

std::int64_t parse_hour_stamp(std::string_view stamp) {
  if (stamp.size() != 8 ||
      !std::all_of(stamp.begin(), stamp.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw DataError("hour stamp '" + std::string(stamp) + "' is not YYMMDDHH");
  }
  auto two = [&](std::size_t pos) { return (stamp[pos] - '0') * 10 + (stamp[pos + 1] - '0'); };
  using namespace std::chrono;
  const year_month_day ymd{year{2000 + two(0)}, month{static_cast<unsigned>(two(2))},
                           day{static_cast<unsigned>(two(4))}};
  const int hour = two(6);
  if (!ymd.ok() || hour > 23) {
    throw DataError("hour stamp '" + std::string(stamp) + "' is not a valid date/hour");
  }
  const sys_days base{year{2000} / January / 1};
  const auto days = (sys_days{ymd} - base).count();
  return static_cast<std::int64_t>(days) * 24 + hour;
}

std::string format_hour_stamp(std::int64_t hours) {
  using namespace std::chrono;
  if (hours < 0) throw DataError("hour offset precedes 2000-01-01");
  const sys_days base{year{2000} / January / 1};
  const year_month_day ymd{base + days{hours / 24}};
  const int yy = static_cast<int>(ymd.year()) - 2000;
  if (yy > 99) throw DataError("hour offset beyond YYMMDDHH range");
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%02d%02u%02u%02d", yy, static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()), static_cast<int>(hours % 24));
  return buf;
}

VocabMap::VocabMap(std::vector<std::vector<std::string>> tokens, std::int64_t min_count)
    : tokens_(std::move(tokens)), index_(tokens_.size()), min_count_(min_count) {
  for (std::size_t f = 0; f < tokens_.size(); ++f) {
    index_[f].reserve(tokens_[f].size());
    for (std::size_t i = 0; i < tokens_[f].size(); ++i) {
      index_[f].emplace(tokens_[f][i], static_cast<std::int32_t>(i + 1));
    }
  }
}

std::int32_t VocabMap::lookup(std::size_t field, const std::string& token) const {
  const auto& map = index_.at(field);
  auto it = map.find(token);
  return it == map.end() ? kOovIndex : it->second;
}

std::int32_t VocabMap::size(std::size_t field) const {
  return static_cast<std::int32_t>(tokens_.at(field).size() + 1);
}

std::vector<std::int32_t> VocabMap::sizes() const {
  std::vector<std::int32_t> out;
  out.reserve(tokens_.size());
  for (std::size_t f = 0; f < tokens_.size(); ++f) out.push_back(size(f));
  return out;
}

const std::string& VocabMap::token(std::size_t field, std::int32_t index) const {
  if (index <= kOovIndex) throw std::out_of_range("OOV index has no token");
  return tokens_.at(field).at(static_cast<std::size_t>(index - 1));
}

VocabMap build_vocab(std::span<const RawRecord> records, std::size_t num_fields,
                     std::int64_t min_count) {
  if (min_count < 1) throw ConfigError("min_count must be >= 1");
  std::vector<std::vector<std::string>> tokens(num_fields);
  for (std::size_t f = 0; f < num_fields; ++f) {
    std::unordered_map<std::string, std::int64_t> counts;
    std::vector<const std::string*> order;
    for (const RawRecord& r : records) {
      if (r.fields.size() != num_fields) throw DataError("inconsistent field count in records");
      auto [it, inserted] = counts.try_emplace(r.fields[f], 0);
      if (inserted) order.push_back(&it->first);
      ++it->second;
    }
    for (const std::string* token : order) {
      if (counts.at(*token) >= min_count) tokens[f].push_back(*token);
    }
  }
  return VocabMap(std::move(tokens), min_count);
}

std::int64_t earliest_hour(std::span<const RawRecord> records) {
  if (records.empty()) throw DataError("no records to take an hour origin from");
  std::int64_t best = parse_hour_stamp(records.front().hour_stamp);
  for (const RawRecord& r : records) best = std::min(best, parse_hour_stamp(r.hour_stamp));
  return best;
}

std::vector<EncodedSample> encode(std::span<const RawRecord> records, const VocabMap& vocab,
                                  std::int64_t hour_origin) {
  std::vector<EncodedSample> out;
  out.reserve(records.size());
  for (const RawRecord& r : records) {
    if (r.fields.size() != vocab.num_fields()) {
      throw DataError("record has " + std::to_string(r.fields.size()) + " fields, vocabulary has " +
                      std::to_string(vocab.num_fields()));
    }
    const std::int64_t hour = parse_hour_stamp(r.hour_stamp);
    if (hour < hour_origin) {
      throw DataError("hour stamp " + r.hour_stamp + " precedes the hour origin");
    }
    EncodedSample s;
    s.label = r.label;
    s.hour_index = static_cast<std::int32_t>(hour - hour_origin);
    s.field_indices.reserve(r.fields.size());
    for (std::size_t f = 0; f < r.fields.size(); ++f) s.field_indices.push_back(vocab.lookup(f, r.fields[f]));
    out.push_back(std::move(s));
  }
  return out;
}

const std::vector<EncodedSample>& StreamSchedule::train_set(std::int32_t t) const {
  if (t == 0) return pretrain_train;
  return buckets.at(static_cast<std::size_t>(t - 1)).train;
}

const std::vector<EncodedSample>& StreamSchedule::test_set(std::int32_t t) const {
  if (t == 0) return pretrain_test;
  return buckets.at(static_cast<std::size_t>(t - 1)).test;
}

std::int32_t pretrain_hour_count(double pretrain_fraction, std::int32_t total_hours) {
  // Guard against 0.7 * 240 landing a hair above 168.
  const double raw = pretrain_fraction * static_cast<double>(total_hours);
  return static_cast<std::int32_t>(std::ceil(raw - 1e-9));
}

namespace {

void split_pool(std::vector<EncodedSample> pool, double holdout_fraction, Rng rng,
                std::vector<EncodedSample>& train, std::vector<EncodedSample>& test) {
  std::shuffle(pool.begin(), pool.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::floor(holdout_fraction * static_cast<double>(pool.size())));
  const std::size_t n_train = pool.size() - n_test;
  train.assign(std::make_move_iterator(pool.begin()),
               std::make_move_iterator(pool.begin() + static_cast<std::ptrdiff_t>(n_train)));
  test.assign(std::make_move_iterator(pool.begin() + static_cast<std::ptrdiff_t>(n_train)),
              std::make_move_iterator(pool.end()));
}

bool single_class_or_empty(const std::vector<EncodedSample>& samples) {
  bool pos = false, neg = false;
  for (const auto& s : samples) (s.label ? pos : neg) = true;
  return !(pos && neg);
}

}  // namespace

StreamSchedule make_schedule(std::vector<EncodedSample> samples,
                             std::vector<std::int32_t> field_sizes,
                             const ScheduleOptions& options) {
  if (!(options.pretrain_fraction > 0.0 && options.pretrain_fraction < 1.0)) {
    throw ConfigError("pretrain_fraction must lie in (0, 1)");
  }
  if (!(options.holdout_fraction > 0.0 && options.holdout_fraction < 1.0)) {
    throw ConfigError("holdout_fraction must lie in (0, 1)");
  }
  std::int32_t max_hour = -1;
  for (const EncodedSample& s : samples) {
    if (s.field_indices.size() != field_sizes.size()) throw DataError("sample field count mismatch");
    for (std::size_t f = 0; f < field_sizes.size(); ++f) {
      if (s.field_indices[f] < 0 || s.field_indices[f] >= field_sizes[f]) {
        throw DataError("sample index out of vocabulary range in field " + std::to_string(f));
      }
    }
    if (s.hour_index < 0) throw DataError("negative hour index");
    max_hour = std::max(max_hour, s.hour_index);
  }
  StreamSchedule schedule;
  schedule.field_sizes = std::move(field_sizes);
  schedule.options = options;
  schedule.total_hours = options.total_hours > 0 ? options.total_hours : max_hour + 1;
  if (max_hour >= schedule.total_hours) throw DataError("sample hour beyond total_hours");
  schedule.pretrain_hours = pretrain_hour_count(options.pretrain_fraction, schedule.total_hours);
  if (schedule.pretrain_hours < 1 || schedule.pretrain_hours >= schedule.total_hours) {
    throw DataError("split leaves no pretraining or no streaming hours (" +
                    std::to_string(schedule.total_hours) + " hours total)");
  }

  std::vector<EncodedSample> pool;
  std::vector<std::vector<EncodedSample>> per_hour(
      static_cast<std::size_t>(schedule.total_hours - schedule.pretrain_hours));
  for (EncodedSample& s : samples) {
    if (s.hour_index < schedule.pretrain_hours) {
      pool.push_back(std::move(s));
    } else {
      per_hour[static_cast<std::size_t>(s.hour_index - schedule.pretrain_hours)].push_back(std::move(s));
    }
  }
  split_pool(std::move(pool), options.holdout_fraction, derive_rng(options.seed, {0}),
             schedule.pretrain_train, schedule.pretrain_test);

  schedule.buckets.resize(per_hour.size());
  for (std::size_t i = 0; i < per_hour.size(); ++i) {
    HourBucket& bucket = schedule.buckets[i];
    bucket.hour_index = schedule.pretrain_hours + static_cast<std::int32_t>(i);
    const std::size_t count = per_hour[i].size();
    split_pool(std::move(per_hour[i]), options.holdout_fraction,
               derive_rng(options.seed, {1, static_cast<std::uint64_t>(bucket.hour_index)}),
               bucket.train, bucket.test);
    if (count < 2 || single_class_or_empty(bucket.test)) {
      schedule.degenerate_timestamps.push_back(static_cast<std::int32_t>(i + 1));
    }
  }
  return schedule;
}

std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size,
                                              std::uint64_t seed) {
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = derive_rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> out;
  out.reserve((n + batch_size - 1) / batch_size);
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Binary schedule format (little-endian):
//   "SCTRSCHD" u32 version
//   u32 F, i32 sizes[F], i32 total_hours, i32 pretrain_hours,
//   f64 pretrain_fraction, f64 holdout_fraction, u64 seed, i32 options.total_hours,
//   samples(pretrain_train), samples(pretrain_test), u32 T, T x {i32 hour, samples, samples},
//   u32 D, i32 degenerate[D]
// samples := u64 n, n x {i32 indices[F], u8 label, i32 hour}

namespace {

static_assert(std::endian::native == std::endian::little, "binary formats assume little-endian");

constexpr char kScheduleMagic[8] = {'S', 'C', 'T', 'R', 'S', 'C', 'H', 'D'};
constexpr std::uint32_t kScheduleVersion = 1;

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError("truncated schedule file");
  return v;
}

void put_samples(std::ostream& out, const std::vector<EncodedSample>& samples) {
  put<std::uint64_t>(out, samples.size());
  for (const EncodedSample& s : samples) {
    out.write(reinterpret_cast<const char*>(s.field_indices.data()),
              static_cast<std::streamsize>(s.field_indices.size() * sizeof(std::int32_t)));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(s.label));
    put<std::int32_t>(out, s.hour_index);
  }
}

std::vector<EncodedSample> get_samples(std::istream& in, std::size_t fields) {
  const auto n = get<std::uint64_t>(in);
  std::vector<EncodedSample> samples(n);
  for (EncodedSample& s : samples) {
    s.field_indices.resize(fields);
    in.read(reinterpret_cast<char*>(s.field_indices.data()),
            static_cast<std::streamsize>(fields * sizeof(std::int32_t)));
    s.label = get<std::uint8_t>(in);
    s.hour_index = get<std::int32_t>(in);
  }
  return samples;
}

}  // namespace

void write_schedule(std::ostream& out, const StreamSchedule& schedule) {
  out.write(kScheduleMagic, sizeof(kScheduleMagic));
  put(out, kScheduleVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(schedule.field_sizes.size()));
  for (std::int32_t size : schedule.field_sizes) put(out, size);
  put(out, schedule.total_hours);
  put(out, schedule.pretrain_hours);
  put(out, schedule.options.pretrain_fraction);
  put(out, schedule.options.holdout_fraction);
  put(out, schedule.options.seed);
  put(out, schedule.options.total_hours);
  put_samples(out, schedule.pretrain_train);
  put_samples(out, schedule.pretrain_test);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(schedule.buckets.size()));
  for (const HourBucket& b : schedule.buckets) {
    put(out, b.hour_index);
    put_samples(out, b.train);
    put_samples(out, b.test);
  }
  put<std::uint32_t>(out, static_cast<std::uint32_t>(schedule.degenerate_timestamps.size()));
  for (std::int32_t t : schedule.degenerate_timestamps) put(out, t);
}

StreamSchedule read_schedule(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(magic, magic + 8, kScheduleMagic)) throw DataError("not a schedule file");
  if (get<std::uint32_t>(in) != kScheduleVersion) throw DataError("unsupported schedule version");
  StreamSchedule s;
  const auto fields = get<std::uint32_t>(in);
  s.field_sizes.resize(fields);
  for (auto& size : s.field_sizes) size = get<std::int32_t>(in);
  s.total_hours = get<std::int32_t>(in);
  s.pretrain_hours = get<std::int32_t>(in);
  s.options.pretrain_fraction = get<double>(in);
  s.options.holdout_fraction = get<double>(in);
  s.options.seed = get<std::uint64_t>(in);
  s.options.total_hours = get<std::int32_t>(in);
  s.pretrain_train = get_samples(in, fields);
  s.pretrain_test = get_samples(in, fields);
  s.buckets.resize(get<std::uint32_t>(in));
  for (HourBucket& b : s.buckets) {
    b.hour_index = get<std::int32_t>(in);
    b.train = get_samples(in, fields);
    b.test = get_samples(in, fields);
  }
  s.degenerate_timestamps.resize(get<std::uint32_t>(in));
  for (auto& t : s.degenerate_timestamps) t = get<std::int32_t>(in);
  return s;
}

std::uint64_t schedule_fingerprint(const StreamSchedule& schedule) {
  std::ostringstream buffer(std::ios::binary);
  write_schedule(buffer, schedule);
  Fnv1a64 h;
  h.update(buffer.view());
  return h.digest();
}

}  // namespace streamctr::data
