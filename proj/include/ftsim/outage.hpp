#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "ftsim/datacenter.hpp"
#include "ftsim/forecaster.hpp"
#include "ftsim/trace.hpp"
#include "ftsim/types.hpp"

namespace ftsim {

/// Per-interval split of the VM population by predicted contention.
/// failure_prone and normal partition every classified VM; VMs with fewer
/// than l history points are normal by default and flagged.
struct VmClassification {
  int interval = 0;
  std::set<std::string> failure_prone;
  std::set<std::string> normal;
  std::map<std::string, Prediction> predictions;
  std::set<std::string> insufficient_history;
};

struct ServerRisk {
  int server_id = 0;
  ResourceVector aggregated_demand = ResourceVector::Zero();  // absolute units
  bool thermal_unsafe = false;
  bool overloaded = false;
};

/// Classification step: predict each HAVN member's next-interval demand and
/// flag it failure-prone when the prediction exceeds the type allocation in
/// any resource (strict, per-resource OR). Min-Max records are derived from
/// the history slice handed in.
VmClassification classify_vms(const std::vector<Havn>& havns,
                              const std::map<std::string, VmSeries>& history,
                              const NetworkGenome& genome, const Datacenter& dc,
                              const ResourceVector& reference_capacity, int interval);

/// Server sweep: aggregate the predicted demand hosted on each server (VMs
/// without a prediction contribute their carried-forward observed demand) and
/// keep a server's VMs failure-prone only when the server itself is at risk —
/// aggregated demand over capacity in some resource, or temperature above the
/// threshold. VMs on safe servers move back to the normal set.
std::vector<ServerRisk> assess_servers(const Datacenter& dc, VmClassification& classification,
                                       const std::map<std::string, ResourceVector>& observed_demand,
                                       const ResourceVector& reference_capacity, double t_thr_c);

struct IntervalAssessment {
  VmClassification classification;
  std::vector<ServerRisk> risks;
};

/// One prediction pass: classify then assess. Retraining is scheduled by the
/// caller, never in here.
IntervalAssessment run_interval(const std::vector<Havn>& havns,
                                const std::map<std::string, VmSeries>& history,
                                const NetworkGenome& genome, const Datacenter& dc,
                                const std::map<std::string, ResourceVector>& observed_demand,
                                const ResourceVector& reference_capacity, double t_thr_c,
                                int interval);

}  // namespace ftsim
