#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ftsim/types.hpp"

namespace ftsim {

/// One parsed usage sample. Usage components are fractions of the reference
/// capacity (raw files carry percent or raw units; adapters convert).
struct TraceRow {
  double timestamp = 0.0;  // seconds since trace epoch
  std::string vm_id;
  ResourceVector usage = ResourceVector::Zero();
};

enum class TraceFormat { canonical_csv, gcd_like, bitbrains_like };

struct TraceParseOptions {
  /// Link capacity used to turn Bitbrains-style KB/s throughput into a fraction.
  double bitbrains_link_mbps = 1000.0;
};

class TraceParseError : public std::runtime_error {
 public:
  TraceParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

std::vector<TraceRow> parse_trace(TraceFormat format, std::string_view raw,
                                  const TraceParseOptions& opts = {});

/// Canonical CSV writer: header `timestamp,vm_id,cpu_pct,mem_pct,net_pct`,
/// percents at 6 decimals, LF newlines. parse -> serialize is byte-stable
/// after one normalization pass.
std::string serialize_canonical(const std::vector<TraceRow>& rows);

/// Equally spaced per-VM usage, one ResourceVector per interval.
struct VmSeries {
  std::string vm_id;
  int interval_seconds = 300;
  std::vector<ResourceVector> values;

  std::size_t size() const { return values.size(); }
};

/// Buckets rows by floor(timestamp/interval) and averages per bucket.
/// Buckets are rebased to the earliest bucket in `rows`; gaps carry the
/// previous value forward and gaps before a VM's first sample are zero.
std::map<std::string, VmSeries> aggregate_per_interval(const std::vector<TraceRow>& rows,
                                                       int interval_seconds);

/// Per-resource Min-Max scaling state, kept to de-normalize predictions.
struct NormRecord {
  ResourceVector min = ResourceVector::Zero();
  ResourceVector max = ResourceVector::Zero();
  std::array<bool, 3> constant{false, false, false};  // max == min
};

std::pair<VmSeries, NormRecord> normalize_minmax(const VmSeries& series);

/// Min-Max state of a series without materializing the normalized copy.
NormRecord compute_norm_record(const VmSeries& series);

ResourceVector normalize_value(const ResourceVector& v, const NormRecord& record);
ResourceVector denormalize_value(const ResourceVector& v, const NormRecord& record);

/// Sliding-window training matrices. Row j of inputs is values[j..j+l)
/// flattened time-major with the resource index innermost; targets[j] is
/// values[j+l].
struct WindowSet {
  int window_length = 0;
  int n_resources = kNumResources;
  Matrix inputs;   // m x (l * n)
  Matrix targets;  // m x n

  Eigen::Index rows() const { return inputs.rows(); }
};

WindowSet build_windows(const VmSeries& series, int window_length);

enum class SyntheticPattern { sinusoid, ramp, step_burst, noisy_constant };

/// Deterministic synthetic trace generator; every value lands in [0, 1].
struct SyntheticSpec {
  int n_vms = 1;
  int n_intervals = 100;
  SyntheticPattern pattern = SyntheticPattern::sinusoid;
  std::uint64_t seed = 1;
  int interval_seconds = 300;

  double base = 0.45;       // midline (sinusoid), floor (ramp), level (constant)
  double amplitude = 0.30;  // swing (sinusoid/ramp), noise half-width (constant)
  double period = 12.0;     // intervals per cycle (sinusoid/ramp)
  double noise = 0.0;       // extra jitter half-width (sinusoid/ramp/burst)
  double phase_step = 0.4;  // per-resource phase offset, radians (sinusoid)

  int burst_period = 10;          // intervals between burst onsets
  int burst_length = 3;           // intervals a burst lasts
  double burst_level = 0.9;       // usage fraction during a burst
  double burst_vm_fraction = 0.4; // share of VMs that ever burst
};

std::vector<TraceRow> generate_synthetic_trace(const SyntheticSpec& spec);

const char* to_string(SyntheticPattern p);
SyntheticPattern synthetic_pattern_from_string(const std::string& s);
const char* to_string(TraceFormat f);
TraceFormat trace_format_from_string(const std::string& s);

}  // namespace ftsim
