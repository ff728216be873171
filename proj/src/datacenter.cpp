#include "ftsim/datacenter.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace ftsim {

namespace {

constexpr double kFeasibilityTol = 1e-9;
constexpr double kInverseThermalSlope = 1.0 / 0.130;  // degC per unit envelope fraction

struct ServerModelRow {
  int pe;
  double mips, ram_gb, storage_gb, pw_max, pw_idle;
};
constexpr ServerModelRow kServerCatalog[] = {
    {2, 2660.0, 4.0, 160.0, 135.0, 93.7},
    {4, 3067.0, 8.0, 250.0, 113.0, 42.3},
    {12, 3067.0, 16.0, 500.0, 222.0, 58.4},
};

struct VmTypeRow {
  double mips, ram_gb, storage_gb, bw_mbps;
};
constexpr VmTypeRow kVmCatalog[] = {
    {500.0, 0.5, 40.0, 125.0},
    {1000.0, 1.0, 60.0, 250.0},
    {1500.0, 2.0, 80.0, 375.0},
    {2000.0, 3.0, 100.0, 500.0},
};

}  // namespace

void ServerSpec::validate() const {
  if (!(pw_max > pw_idle) || pw_idle < 0.0)
    throw std::invalid_argument("server " + std::to_string(id) + ": need pw_max > pw_idle >= 0");
  if ((capacity <= 0.0).any())
    throw std::invalid_argument("server " + std::to_string(id) + ": capacities must be positive");
}

ServerSpec make_server_spec(int id, ServerModel model, double link_mbps) {
  const auto& row = kServerCatalog[static_cast<std::size_t>(model)];
  ServerSpec spec;
  spec.id = id;
  spec.pe_count = row.pe;
  spec.mips_per_pe = row.mips;
  spec.ram_gb = row.ram_gb;
  spec.storage_gb = row.storage_gb;
  spec.pw_max = row.pw_max;
  spec.pw_min = row.pw_idle;
  spec.pw_idle = row.pw_idle;
  spec.capacity = ResourceVector(row.pe * row.mips, row.ram_gb, link_mbps);
  spec.validate();
  return spec;
}

const char* to_string(VmType t) {
  switch (t) {
    case VmType::small: return "small";
    case VmType::medium: return "medium";
    case VmType::large: return "large";
    case VmType::xlarge: return "xlarge";
  }
  return "?";
}

VmType vm_type_from_string(const std::string& s) {
  if (s == "small") return VmType::small;
  if (s == "medium") return VmType::medium;
  if (s == "large") return VmType::large;
  if (s == "xlarge") return VmType::xlarge;
  throw std::invalid_argument("unknown vm type '" + s + "'");
}

ResourceVector vm_type_allocation(VmType t) {
  const auto& row = kVmCatalog[static_cast<std::size_t>(t)];
  return {row.mips, row.ram_gb, row.bw_mbps};
}

double vm_type_storage(VmType t) { return kVmCatalog[static_cast<std::size_t>(t)].storage_gb; }

ResourceVector default_reference_capacity() { return vm_type_allocation(VmType::xlarge); }

ResourceVector ServerState::committed(const std::string& exclude_vm) const {
  ResourceVector total = ResourceVector::Zero();
  for (const auto& [vm, fp] : footprint)
    if (vm != exclude_vm) total += fp;
  return total;
}

double server_power(const ServerSpec& spec, double ru) {
  if (ru < 0.0 || ru > 1.0)
    throw std::invalid_argument("cpu utilization " + std::to_string(ru) + " outside [0, 1]");
  return (spec.pw_max - spec.pw_min) * ru + spec.pw_idle;
}

double datacenter_power(std::span<const ServerState> states) {
  double total = 0.0;
  for (const ServerState& s : states)
    if (s.active()) total += s.power_w;
  return total;
}

double server_temperature(const ServerSpec& spec, double power_w, double t_in_c) {
  if (power_w < spec.pw_idle - 1e-12 || power_w > spec.pw_max + 1e-12)
    throw std::invalid_argument("power " + std::to_string(power_w) +
                                " W outside the server envelope [" + std::to_string(spec.pw_idle) +
                                ", " + std::to_string(spec.pw_max) + "]");
  const double fraction = (power_w - spec.pw_idle) / (spec.pw_max - spec.pw_idle);
  return kInverseThermalSlope * fraction + t_in_c;
}

HealthStatus server_status(double temperature_c, double t_thr_c) {
  return temperature_c < t_thr_c ? HealthStatus::Safe : HealthStatus::Unsafe;
}

UtilizationReport datacenter_utilization(std::span<const ServerState> states,
                                         const std::map<std::string, ResourceVector>& demands) {
  UtilizationReport report;
  int active = 0;
  for (const ServerState& s : states) {
    if (!s.active()) continue;
    ++active;
    ResourceVector hosted_demand = ResourceVector::Zero();
    for (const std::string& vm : s.hosted) {
      auto it = demands.find(vm);
      if (it == demands.end())
        throw std::runtime_error("utilization: no demand recorded for hosted vm '" + vm + "'");
      hosted_demand += it->second;
    }
    report.per_resource_ratio_sum += hosted_demand / s.spec.capacity;
  }
  report.any_active = active > 0;
  if (active > 0)
    report.overall_pct =
        report.per_resource_ratio_sum.sum() / (kNumResources * static_cast<double>(active)) * 100.0;
  return report;
}

bool can_place(const ServerState& server, const ResourceVector& demand,
               const ResourceVector& pending, const std::string& exclude_vm) {
  const ResourceVector total = server.committed(exclude_vm) + pending + demand;
  return fits_within(total, server.spec.capacity, kFeasibilityTol);
}

std::optional<int> select_energy_efficient_server(std::span<const ServerState> fleet,
                                                  const ResourceVector& demand,
                                                  std::span<const ResourceVector> pending,
                                                  const std::string& exclude_vm,
                                                  int exclude_server) {
  std::optional<int> best_index;
  double best_delta = 0.0;
  bool best_active = false;

  for (std::size_t i = 0; i < fleet.size(); ++i) {
    const ServerState& server = fleet[i];
    if (static_cast<int>(i) == exclude_server) continue;
    if (server.status != HealthStatus::Safe) continue;
    const ResourceVector pend =
        i < pending.size() ? pending[i] : ResourceVector(ResourceVector::Zero());
    if (!can_place(server, demand, pend, exclude_vm)) continue;

    // Marginal watts for hosting this demand: the dynamic slope times the
    // CPU share, plus the idle floor if the server has to wake up.
    const double delta_ru = demand[0] / server.spec.capacity[0];
    double delta = (server.spec.pw_max - server.spec.pw_min) * delta_ru;
    if (!server.active()) delta += server.spec.pw_idle;

    const bool better =
        !best_index.has_value() || delta < best_delta - kFeasibilityTol ||
        (std::abs(delta - best_delta) <= kFeasibilityTol &&
         ((server.active() && !best_active) ||
          (server.active() == best_active && server.spec.id < fleet[static_cast<std::size_t>(*best_index)].spec.id)));
    if (better) {
      best_index = static_cast<int>(i);
      best_delta = delta;
      best_active = server.active();
    }
  }
  return best_index;
}

Datacenter::Datacenter(std::vector<ServerSpec> fleet, std::vector<VmSpec> vms) {
  servers_.reserve(fleet.size());
  for (ServerSpec& spec : fleet) {
    spec.validate();
    ServerState state;
    state.spec = std::move(spec);
    servers_.push_back(std::move(state));
  }
  for (VmSpec& vm : vms) {
    if (vms_.count(vm.id)) throw std::invalid_argument("duplicate vm id '" + vm.id + "'");
    vms_.emplace(vm.id, std::move(vm));
  }
}

const VmSpec& Datacenter::vm(const std::string& vm_id) const {
  auto it = vms_.find(vm_id);
  if (it == vms_.end()) throw std::runtime_error("unknown vm '" + vm_id + "'");
  return it->second;
}

int Datacenter::host_of(const std::string& vm_id) const {
  auto it = host_of_.find(vm_id);
  if (it == host_of_.end()) throw std::runtime_error("vm '" + vm_id + "' is not hosted");
  return it->second;
}

void Datacenter::place(const std::string& vm_id, int server, const ResourceVector& footprint) {
  vm(vm_id);  // existence check
  if (is_hosted(vm_id)) throw std::runtime_error("vm '" + vm_id + "' is already hosted");
  ServerState& dest = servers_.at(static_cast<std::size_t>(server));
  if (!can_place(dest, footprint))
    throw std::runtime_error("placing '" + vm_id + "' would violate capacity on server " +
                             std::to_string(dest.spec.id));
  dest.hosted.push_back(vm_id);
  dest.footprint[vm_id] = footprint;
  host_of_[vm_id] = server;
}

MigrationEvent Datacenter::apply_migration(const std::string& vm_id, int dest, int interval,
                                           const std::string& reason,
                                           std::optional<ResourceVector> new_footprint) {
  const int source = host_of(vm_id);
  if (source == dest)
    throw std::runtime_error("self-migration of '" + vm_id + "' rejected");
  ServerState& src = servers_.at(static_cast<std::size_t>(source));
  ServerState& dst = servers_.at(static_cast<std::size_t>(dest));
  const ResourceVector footprint = new_footprint.value_or(src.footprint.at(vm_id));
  if (!can_place(dst, footprint))
    throw std::runtime_error("migrating '" + vm_id + "' would violate capacity on server " +
                             std::to_string(dst.spec.id));

  src.hosted.erase(std::find(src.hosted.begin(), src.hosted.end(), vm_id));
  src.footprint.erase(vm_id);
  dst.hosted.push_back(vm_id);
  dst.footprint[vm_id] = footprint;
  host_of_[vm_id] = dest;

  MigrationEvent event;
  event.interval = interval;
  event.vm_id = vm_id;
  event.source = src.spec.id;
  event.dest = dst.spec.id;
  event.reason = reason;
  return event;
}

void Datacenter::resize_footprint(const std::string& vm_id, const ResourceVector& footprint) {
  ServerState& server = servers_.at(static_cast<std::size_t>(host_of(vm_id)));
  if (!can_place(server, footprint, ResourceVector::Zero(), vm_id))
    throw std::runtime_error("resizing '" + vm_id + "' would violate capacity on server " +
                             std::to_string(server.spec.id));
  server.footprint[vm_id] = footprint;
}

double Datacenter::worst_capacity_overshoot() const {
  double worst = -std::numeric_limits<double>::infinity();
  for (const ServerState& s : servers_)
    worst = std::max(worst, (s.committed() - s.spec.capacity).maxCoeff());
  return servers_.empty() ? 0.0 : worst;
}

std::vector<ServerSpec> build_default_fleet(int n_vms, double vm_server_ratio, double link_mbps) {
  if (n_vms < 1) throw std::invalid_argument("fleet needs at least one VM");
  if (vm_server_ratio <= 0.0) throw std::invalid_argument("vm_server_ratio must be positive");
  const int n_servers = std::max(1, static_cast<int>(std::ceil(n_vms / vm_server_ratio)));
  std::vector<ServerSpec> fleet;
  fleet.reserve(static_cast<std::size_t>(n_servers));
  for (int i = 0; i < n_servers; ++i)
    fleet.push_back(make_server_spec(i, static_cast<ServerModel>(i % 3), link_mbps));
  return fleet;
}

std::vector<ServerSpec> load_fleet_inventory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open fleet inventory '" + path + "'");
  nlohmann::json j;
  in >> j;

  std::vector<ServerSpec> fleet;
  for (const auto& row : j.at("servers")) {
    ServerSpec spec;
    spec.id = row.at("id").get<int>();
    spec.pe_count = row.at("pe_count").get<int>();
    spec.mips_per_pe = row.at("mips_per_pe").get<double>();
    spec.ram_gb = row.at("ram_gb").get<double>();
    spec.storage_gb = row.value("storage_gb", 0.0);
    spec.pw_max = row.at("pw_max").get<double>();
    spec.pw_idle = row.at("pw_idle").get<double>();
    spec.pw_min = row.value("pw_min", spec.pw_idle);
    const double link = row.value("link_mbps", 1000.0);
    spec.capacity = ResourceVector(spec.pe_count * spec.mips_per_pe, spec.ram_gb, link);
    spec.validate();
    fleet.push_back(std::move(spec));
  }
  if (fleet.empty()) throw std::runtime_error("fleet inventory '" + path + "' lists no servers");
  return fleet;
}

}  // namespace ftsim
