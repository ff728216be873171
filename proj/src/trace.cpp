#include "ftsim/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <random>

namespace ftsim {

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view field, std::size_t line_no, const char* what) {
  field = trim(field);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw TraceParseError(line_no, std::string("invalid ") + what + " field '" + std::string(field) + "'");
  if (!std::isfinite(value))
    throw TraceParseError(line_no, std::string(what) + " is not finite");
  return value;
}

void check_row(const TraceRow& row, std::size_t line_no) {
  if (row.timestamp < 0.0) throw TraceParseError(line_no, "negative timestamp");
  for (int r = 0; r < kNumResources; ++r) {
    if (!std::isfinite(row.usage[r]) || row.usage[r] < 0.0)
      throw TraceParseError(line_no, std::string(resource_name(r)) + " usage must be finite and >= 0");
  }
}

constexpr std::string_view kCanonicalHeader = "timestamp,vm_id,cpu_pct,mem_pct,net_pct";
constexpr std::string_view kGcdHeader = "time,job_id,task_index,cpu_usage_percent,memory_usage_percent";
constexpr std::string_view kBitbrainsHeader =
    "vm_id;timestamp_ms;cpu_usage_pct;mem_usage_kb;mem_provisioned_kb;net_rx_kbps;net_tx_kbps";

struct LineCursor {
  std::string_view raw;
  std::size_t pos = 0;
  std::size_t line_no = 0;

  bool next(std::string_view& line) {
    while (pos < raw.size()) {
      std::size_t nl = raw.find('\n', pos);
      std::string_view candidate =
          nl == std::string_view::npos ? raw.substr(pos) : raw.substr(pos, nl - pos);
      pos = nl == std::string_view::npos ? raw.size() : nl + 1;
      ++line_no;
      candidate = trim(candidate);
      if (!candidate.empty()) {
        line = candidate;
        return true;
      }
    }
    return false;
  }
};

}  // namespace

std::vector<TraceRow> parse_trace(TraceFormat format, std::string_view raw,
                                  const TraceParseOptions& opts) {
  std::vector<TraceRow> rows;
  LineCursor cursor{raw};
  std::string_view line;
  if (!cursor.next(line)) return rows;  // empty file -> empty list

  const std::string_view expected = format == TraceFormat::canonical_csv ? kCanonicalHeader
                                    : format == TraceFormat::gcd_like    ? kGcdHeader
                                                                         : kBitbrainsHeader;
  if (line != expected)
    throw TraceParseError(cursor.line_no, "unknown header '" + std::string(line) + "' for format " +
                                              to_string(format));

  const char sep = format == TraceFormat::bitbrains_like ? ';' : ',';
  const std::size_t n_fields = format == TraceFormat::canonical_csv ? 5u
                               : format == TraceFormat::gcd_like    ? 5u
                                                                    : 7u;
  while (cursor.next(line)) {
    auto fields = split(line, sep);
    if (fields.size() != n_fields)
      throw TraceParseError(cursor.line_no, "expected " + std::to_string(n_fields) + " fields, got " +
                                                std::to_string(fields.size()));
    TraceRow row;
    switch (format) {
      case TraceFormat::canonical_csv: {
        row.timestamp = parse_number(fields[0], cursor.line_no, "timestamp");
        row.vm_id = std::string(trim(fields[1]));
        row.usage[0] = parse_number(fields[2], cursor.line_no, "cpu_pct") / 100.0;
        row.usage[1] = parse_number(fields[3], cursor.line_no, "mem_pct") / 100.0;
        row.usage[2] = parse_number(fields[4], cursor.line_no, "net_pct") / 100.0;
        break;
      }
      case TraceFormat::gcd_like: {
        // Timestamps in microseconds; each job/task pair is its own VM id.
        row.timestamp = parse_number(fields[0], cursor.line_no, "time") / 1e6;
        row.vm_id = std::string(trim(fields[1])) + "-" + std::string(trim(fields[2]));
        row.usage[0] = parse_number(fields[3], cursor.line_no, "cpu_usage_percent") / 100.0;
        row.usage[1] = parse_number(fields[4], cursor.line_no, "memory_usage_percent") / 100.0;
        row.usage[2] = 0.0;  // no network column in this dialect
        break;
      }
      case TraceFormat::bitbrains_like: {
        row.vm_id = std::string(trim(fields[0]));
        row.timestamp = parse_number(fields[1], cursor.line_no, "timestamp_ms") / 1000.0;
        row.usage[0] = parse_number(fields[2], cursor.line_no, "cpu_usage_pct") / 100.0;
        const double mem_used = parse_number(fields[3], cursor.line_no, "mem_usage_kb");
        const double mem_prov = parse_number(fields[4], cursor.line_no, "mem_provisioned_kb");
        row.usage[1] = mem_prov > 0.0 ? mem_used / mem_prov : 0.0;
        const double kbps = parse_number(fields[5], cursor.line_no, "net_rx_kbps") +
                            parse_number(fields[6], cursor.line_no, "net_tx_kbps");
        row.usage[2] = kbps * 8000.0 / (opts.bitbrains_link_mbps * 1e6);
        break;
      }
    }
    if (row.vm_id.empty()) throw TraceParseError(cursor.line_no, "empty vm id");
    check_row(row, cursor.line_no);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string serialize_canonical(const std::vector<TraceRow>& rows) {
  std::string out(kCanonicalHeader);
  out.push_back('\n');
  char buf[160];
  for (const TraceRow& row : rows) {
    std::snprintf(buf, sizeof buf, "%.3f,%s,%.6f,%.6f,%.6f\n", row.timestamp, row.vm_id.c_str(),
                  row.usage[0] * 100.0, row.usage[1] * 100.0, row.usage[2] * 100.0);
    out += buf;
  }
  return out;
}

std::map<std::string, VmSeries> aggregate_per_interval(const std::vector<TraceRow>& rows,
                                                       int interval_seconds) {
  if (interval_seconds <= 0) throw std::invalid_argument("interval_seconds must be positive");

  struct Cell {
    ResourceVector sum = ResourceVector::Zero();
    long long count = 0;
  };
  std::map<std::string, std::map<long long, Cell>> buckets;
  long long min_bucket = 0;
  bool first = true;
  for (const TraceRow& row : rows) {
    const long long b = static_cast<long long>(std::floor(row.timestamp / interval_seconds));
    Cell& cell = buckets[row.vm_id][b];
    cell.sum += row.usage;
    cell.count += 1;
    min_bucket = first ? b : std::min(min_bucket, b);
    first = false;
  }

  std::map<std::string, VmSeries> out;
  for (auto& [vm, cells] : buckets) {
    VmSeries series;
    series.vm_id = vm;
    series.interval_seconds = interval_seconds;
    const long long last = cells.rbegin()->first;
    series.values.reserve(static_cast<std::size_t>(last - min_bucket + 1));
    ResourceVector carry = ResourceVector::Zero();  // leading gaps are zero
    for (long long b = min_bucket; b <= last; ++b) {
      auto it = cells.find(b);
      if (it != cells.end()) carry = it->second.sum / static_cast<double>(it->second.count);
      series.values.push_back(carry);
    }
    out.emplace(vm, std::move(series));
  }
  return out;
}

NormRecord compute_norm_record(const VmSeries& series) {
  if (series.values.empty()) throw std::invalid_argument("cannot normalize an empty series");
  NormRecord record;
  record.min = series.values.front();
  record.max = series.values.front();
  for (const ResourceVector& v : series.values) {
    record.min = record.min.min(v);
    record.max = record.max.max(v);
  }
  for (int r = 0; r < kNumResources; ++r) record.constant[r] = record.max[r] <= record.min[r];
  return record;
}

std::pair<VmSeries, NormRecord> normalize_minmax(const VmSeries& series) {
  const NormRecord record = compute_norm_record(series);
  VmSeries normalized = series;
  for (ResourceVector& v : normalized.values) v = normalize_value(v, record);
  return {std::move(normalized), record};
}

ResourceVector normalize_value(const ResourceVector& v, const NormRecord& record) {
  ResourceVector out;
  for (int r = 0; r < kNumResources; ++r)
    out[r] = record.constant[r] ? 0.0 : (v[r] - record.min[r]) / (record.max[r] - record.min[r]);
  return out;
}

ResourceVector denormalize_value(const ResourceVector& v, const NormRecord& record) {
  ResourceVector out;
  for (int r = 0; r < kNumResources; ++r)
    out[r] = record.constant[r] ? record.min[r] : v[r] * (record.max[r] - record.min[r]) + record.min[r];
  return out;
}

WindowSet build_windows(const VmSeries& series, int window_length) {
  if (window_length < 1) throw std::invalid_argument("window length must be >= 1");
  const auto needed = static_cast<std::size_t>(window_length) + 1;
  if (series.size() < needed)
    throw std::invalid_argument("series too short for window length " + std::to_string(window_length) +
                                ": need at least " + std::to_string(needed) + " values, got " +
                                std::to_string(series.size()));

  const int n = kNumResources;
  const auto m = static_cast<Eigen::Index>(series.size() - static_cast<std::size_t>(window_length));
  WindowSet ws;
  ws.window_length = window_length;
  ws.inputs.resize(m, static_cast<Eigen::Index>(window_length) * n);
  ws.targets.resize(m, n);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (int t = 0; t < window_length; ++t)
      for (int r = 0; r < n; ++r)
        ws.inputs(j, t * n + r) = series.values[static_cast<std::size_t>(j) + t][r];
    for (int r = 0; r < n; ++r)
      ws.targets(j, r) = series.values[static_cast<std::size_t>(j) + window_length][r];
  }
  return ws;
}

namespace {

std::string synthetic_vm_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "vm%04d", index);
  return buf;
}

}  // namespace

std::vector<TraceRow> generate_synthetic_trace(const SyntheticSpec& spec) {
  if (spec.n_vms < 1 || spec.n_intervals < 1)
    throw std::invalid_argument("synthetic trace needs n_vms >= 1 and n_intervals >= 1");
  if (spec.period <= 0.0) throw std::invalid_argument("synthetic period must be positive");

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Bursts model a shared peak hour: every bursting VM rides the same cycle
  // phase so aggregated load actually spikes.
  const int burst_offset =
      spec.burst_period > 0 ? static_cast<int>(unit(rng) * spec.burst_period) % spec.burst_period
                            : 0;

  // Per-VM shape parameters drawn up front, in vm order.
  struct VmShape {
    double phase = 0.0;     // sinusoid/ramp offset in intervals
    double baseline = 0.0;  // step_burst idle level
    double peak = 0.0;      // step_burst level
    bool bursts = false;
  };
  std::vector<VmShape> shapes(static_cast<std::size_t>(spec.n_vms));
  for (auto& s : shapes) {
    s.phase = unit(rng) * spec.period;
    s.baseline = 0.06 + 0.08 * unit(rng);
    s.peak = spec.burst_level + 0.05 * (unit(rng) - 0.5);
    s.bursts = unit(rng) < spec.burst_vm_fraction;
  }

  std::vector<TraceRow> rows;
  rows.reserve(static_cast<std::size_t>(spec.n_vms) * static_cast<std::size_t>(spec.n_intervals));
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  for (int v = 0; v < spec.n_vms; ++v) {
    const VmShape& s = shapes[static_cast<std::size_t>(v)];
    const std::string id = synthetic_vm_id(v);
    for (int t = 0; t < spec.n_intervals; ++t) {
      TraceRow row;
      row.timestamp = static_cast<double>(t) * spec.interval_seconds;
      row.vm_id = id;
      for (int r = 0; r < kNumResources; ++r) {
        double value = 0.0;
        switch (spec.pattern) {
          case SyntheticPattern::sinusoid:
            value = spec.base +
                    spec.amplitude * std::sin(kTwoPi * (t + s.phase) / spec.period + r * spec.phase_step);
            break;
          case SyntheticPattern::ramp: {
            // Triangle wave: ramp up for half a period, back down for the rest.
            const double pos = std::fmod(t + s.phase, spec.period) / spec.period;
            const double tri = pos < 0.5 ? 2.0 * pos : 2.0 - 2.0 * pos;
            value = spec.base + spec.amplitude * (2.0 * tri - 1.0);
            break;
          }
          case SyntheticPattern::step_burst: {
            const bool bursting = s.bursts && spec.burst_period > 0 &&
                                  (t + burst_offset) % spec.burst_period < spec.burst_length;
            value = bursting ? s.peak : s.baseline;
            break;
          }
          case SyntheticPattern::noisy_constant:
            value = spec.base + spec.amplitude * (2.0 * unit(rng) - 1.0);
            break;
        }
        if (spec.noise > 0.0 && spec.pattern != SyntheticPattern::noisy_constant)
          value += spec.noise * (2.0 * unit(rng) - 1.0);
        row.usage[r] = std::clamp(value, 0.0, 1.0);
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

const char* to_string(SyntheticPattern p) {
  switch (p) {
    case SyntheticPattern::sinusoid: return "sinusoid";
    case SyntheticPattern::ramp: return "ramp";
    case SyntheticPattern::step_burst: return "step_burst";
    case SyntheticPattern::noisy_constant: return "noisy_constant";
  }
  return "?";
}

SyntheticPattern synthetic_pattern_from_string(const std::string& s) {
  if (s == "sinusoid") return SyntheticPattern::sinusoid;
  if (s == "ramp") return SyntheticPattern::ramp;
  if (s == "step_burst") return SyntheticPattern::step_burst;
  if (s == "noisy_constant") return SyntheticPattern::noisy_constant;
  throw std::invalid_argument("unknown synthetic pattern '" + s + "'");
}

const char* to_string(TraceFormat f) {
  switch (f) {
    case TraceFormat::canonical_csv: return "canonical_csv";
    case TraceFormat::gcd_like: return "gcd_like";
    case TraceFormat::bitbrains_like: return "bitbrains_like";
  }
  return "?";
}

TraceFormat trace_format_from_string(const std::string& s) {
  if (s == "canonical_csv") return TraceFormat::canonical_csv;
  if (s == "gcd_like") return TraceFormat::gcd_like;
  if (s == "bitbrains_like") return TraceFormat::bitbrains_like;
  throw std::invalid_argument("unknown trace format '" + s + "'");
}

}  // namespace ftsim
