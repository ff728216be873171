#include "ftsim/outage.hpp"

#include <stdexcept>

namespace ftsim {

VmClassification classify_vms(const std::vector<Havn>& havns,
                              const std::map<std::string, VmSeries>& history,
                              const NetworkGenome& genome, const Datacenter& dc,
                              const ResourceVector& reference_capacity, int interval) {
  VmClassification out;
  out.interval = interval;
  const auto l = static_cast<std::size_t>(genome.layout.input_sets);

  for (const Havn& havn : havns) {
    for (const std::string& vm_id : havn.vm_ids) {
      auto it = history.find(vm_id);
      if (it == history.end() || it->second.size() < l) {
        out.normal.insert(vm_id);
        out.insufficient_history.insert(vm_id);
        continue;
      }
      const NormRecord record = compute_norm_record(it->second);
      Prediction pred = predict_next(genome, it->second, record);

      const ResourceVector allocation_fraction = dc.vm(vm_id).allocated / reference_capacity;
      const bool contended = exceeds_any(pred.denormalized, allocation_fraction);
      out.predictions.emplace(vm_id, std::move(pred));
      if (contended)
        out.failure_prone.insert(vm_id);
      else
        out.normal.insert(vm_id);
    }
  }
  return out;
}

std::vector<ServerRisk> assess_servers(const Datacenter& dc, VmClassification& classification,
                                       const std::map<std::string, ResourceVector>& observed_demand,
                                       const ResourceVector& reference_capacity, double t_thr_c) {
  std::vector<ServerRisk> risks;
  risks.reserve(dc.servers().size());

  for (const ServerState& server : dc.servers()) {
    ServerRisk risk;
    risk.server_id = server.spec.id;
    for (const std::string& vm_id : server.hosted) {
      auto pred = classification.predictions.find(vm_id);
      if (pred != classification.predictions.end()) {
        risk.aggregated_demand += pred->second.denormalized * reference_capacity;
      } else {
        auto obs = observed_demand.find(vm_id);
        if (obs == observed_demand.end())
          throw std::runtime_error("assess_servers: no demand known for vm '" + vm_id + "'");
        risk.aggregated_demand += obs->second;
      }
    }
    risk.thermal_unsafe = server.temperature_c > t_thr_c;
    risk.overloaded = exceeds_any(risk.aggregated_demand, server.spec.capacity) || risk.thermal_unsafe;

    if (!risk.overloaded) {
      for (const std::string& vm_id : server.hosted) {
        if (classification.failure_prone.erase(vm_id) > 0) classification.normal.insert(vm_id);
      }
    }
    risks.push_back(std::move(risk));
  }
  return risks;
}

IntervalAssessment run_interval(const std::vector<Havn>& havns,
                                const std::map<std::string, VmSeries>& history,
                                const NetworkGenome& genome, const Datacenter& dc,
                                const std::map<std::string, ResourceVector>& observed_demand,
                                const ResourceVector& reference_capacity, double t_thr_c,
                                int interval) {
  IntervalAssessment assessment;
  assessment.classification =
      classify_vms(havns, history, genome, dc, reference_capacity, interval);
  assessment.risks = assess_servers(dc, assessment.classification, observed_demand,
                                    reference_capacity, t_thr_c);
  return assessment;
}

}  // namespace ftsim
