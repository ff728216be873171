#include "ftsim/ha_metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ftsim {

double mtbf(const AvailabilityLedger& ledger) {
  if (ledger.failures < 0 || ledger.uptime_min < 0.0)
    throw std::invalid_argument("mtbf: ledger counters must be non-negative");
  if (ledger.failures == 0) return std::numeric_limits<double>::infinity();
  return ledger.uptime_min / static_cast<double>(ledger.failures);
}

double mttr(const AvailabilityLedger& ledger) {
  if (ledger.failures < 0 || ledger.downtime_min < 0.0)
    throw std::invalid_argument("mttr: ledger counters must be non-negative");
  if (ledger.failures == 0) return 0.0;
  return ledger.downtime_min / static_cast<double>(ledger.failures);
}

double availability_pct(double mtbf_min, double mttr_min) {
  if (mtbf_min < 0.0 || mttr_min < 0.0)
    throw std::invalid_argument("availability: MTBF and MTTR must be non-negative");
  if (mttr_min == 0.0) return 100.0;
  if (std::isinf(mtbf_min)) return 100.0;
  if (mtbf_min + mttr_min <= 0.0)
    throw std::invalid_argument("availability undefined: MTBF + MTTR is zero");
  return 100.0 * mtbf_min / (mtbf_min + mttr_min);
}

double offered_availability(const AvailabilityLedger& ledger, OfferedAvailabilityForm form) {
  if (ledger.downtime_min == 0.0) return 1.0;
  switch (form) {
    case OfferedAvailabilityForm::downtime_over_uptime:
      if (ledger.uptime_min <= 0.0)
        throw std::invalid_argument("offered availability undefined without uptime");
      return 1.0 - ledger.downtime_min / ledger.uptime_min;
    case OfferedAvailabilityForm::downtime_over_total:
      return 1.0 - ledger.downtime_min / (ledger.uptime_min + ledger.downtime_min);
  }
  throw std::logic_error("unreachable offered-availability form");
}

double ha_score(double a_guaranteed, double a_offered) {
  if (a_guaranteed <= 0.0)
    throw std::invalid_argument("ha_score: guaranteed availability must be positive");
  return (a_guaranteed - a_offered) / a_guaranteed * 100.0;
}

HaReport make_ha_report(const AvailabilityLedger& ledger, double a_guaranteed,
                        OfferedAvailabilityForm form) {
  HaReport report;
  report.mtbf_min = mtbf(ledger);
  report.mttr_min = mttr(ledger);
  report.availability = availability_pct(report.mtbf_min, report.mttr_min);
  report.offered = offered_availability(ledger, form);
  report.guaranteed = a_guaranteed;
  report.score = ha_score(a_guaranteed, report.offered);
  return report;
}

}  // namespace ftsim
