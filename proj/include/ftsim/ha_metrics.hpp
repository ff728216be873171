#pragma once

#include <string>

namespace ftsim {

/// Uptime/downtime bookkeeping for one HAVN (or the whole datacenter).
/// Uptime accumulates successfully-deployed-VM-count x interval minutes;
/// downtime accumulates the fixed per-migration cost. `failures` counts
/// recovery episodes: intervals that produced at least one repair action.
struct AvailabilityLedger {
  double uptime_min = 0.0;
  double downtime_min = 0.0;
  long long failures = 0;
  long long migrations = 0;

  AvailabilityLedger& operator+=(const AvailabilityLedger& other) {
    uptime_min += other.uptime_min;
    downtime_min += other.downtime_min;
    failures += other.failures;
    migrations += other.migrations;
    return *this;
  }
};

/// Fixed live-migration downtime, minutes.
inline constexpr double kMigrationDowntimeMin = 0.21;

/// Mean time between failures: total uptime / failure count. No failures
/// reports the infinite-uptime sentinel.
double mtbf(const AvailabilityLedger& ledger);

/// Mean time to repair: total downtime / failure count.
double mttr(const AvailabilityLedger& ledger);

/// Average availability as a percent: 100 * MTBF / (MTBF + MTTR).
/// Zero repair time (or the no-failure sentinel) is full availability.
double availability_pct(double mtbf_min, double mttr_min);

/// Offered-availability accounting. The first form divides downtime by uptime
/// (as specified); the conventional downtime/(uptime+downtime) stays available
/// behind the flag.
enum class OfferedAvailabilityForm { downtime_over_uptime, downtime_over_total };

double offered_availability(const AvailabilityLedger& ledger,
                            OfferedAvailabilityForm form = OfferedAvailabilityForm::downtime_over_uptime);

/// Percentage shortfall of offered availability against the SLA guarantee:
/// (A_g - A_o) / A_g * 100. Larger means a larger shortfall.
double ha_score(double a_guaranteed, double a_offered);

struct HaReport {
  double mtbf_min = 0.0;
  double mttr_min = 0.0;
  double availability = 0.0;  // percent
  double offered = 0.0;       // fraction
  double guaranteed = 0.0;    // fraction
  double score = 0.0;
};

HaReport make_ha_report(const AvailabilityLedger& ledger, double a_guaranteed,
                        OfferedAvailabilityForm form = OfferedAvailabilityForm::downtime_over_uptime);

}  // namespace ftsim
