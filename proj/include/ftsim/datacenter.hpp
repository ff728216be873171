#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ftsim/types.hpp"

namespace ftsim {

/// Static server description: capacity plus power envelope.
/// capacity = (pe_count*mips_per_pe MIPS, ram GB, link Mbit/s).
struct ServerSpec {
  int id = 0;
  int pe_count = 0;
  double mips_per_pe = 0.0;
  double ram_gb = 0.0;
  double storage_gb = 0.0;
  double pw_max = 0.0;
  double pw_min = 0.0;   // equal to pw_idle in the stock catalog; both kept,
  double pw_idle = 0.0;  // the power model uses both symbols
  ResourceVector capacity = ResourceVector::Zero();

  void validate() const;
};

/// Stock fleet models (catalog rows; bandwidth defaults to a 1 Gbit/s link).
enum class ServerModel { s1 = 0, s2 = 1, s3 = 2 };
ServerSpec make_server_spec(int id, ServerModel model, double link_mbps = 1000.0);

enum class VmType { small = 0, medium = 1, large = 2, xlarge = 3 };
const char* to_string(VmType t);
VmType vm_type_from_string(const std::string& s);

/// allocated = (MIPS, GB, Mbit/s) per the instance catalog.
struct VmSpec {
  std::string id;
  VmType type = VmType::small;
  ResourceVector allocated = ResourceVector::Zero();
  double storage_gb = 0.0;
  int owner_user = -1;
  int havn_id = -1;
};

/// Per-type instance sizing; the stock catalog can be overridden from an
/// inventory file.
struct VmTypeSpec {
  double mips = 0.0;
  double ram_gb = 0.0;
  double storage_gb = 0.0;
  double bw_mbps = 0.0;
};

struct VmCatalog {
  std::array<VmTypeSpec, 4> types{};

  static VmCatalog defaults();
  ResourceVector allocation(VmType t) const;
  double storage(VmType t) const { return types[static_cast<std::size_t>(t)].storage_gb; }
};

ResourceVector vm_type_allocation(VmType t);
double vm_type_storage(VmType t);

/// Usage fractions in traces are fractions of this per-resource reference
/// (the largest instance type), so a fraction and an allocation compare
/// directly: demand_abs = fraction * reference.
ResourceVector default_reference_capacity();

/// Set of VMs dedicated to one user, spread across servers.
struct Havn {
  int id = -1;
  int user_id = -1;
  std::vector<std::string> vm_ids;
};

enum class HealthStatus { Safe, Unsafe };

struct MigrationEvent {
  int interval = 0;
  std::string vm_id;
  int source = -1;
  int dest = -1;
  double downtime_min = 0.21;
  /// proactive_sbox | proactive_direct | reactive
  std::string reason;
};

/// Dynamic per-server state. `footprint` is what a hosted VM holds against the
/// placement constraint: its allocation, or its reservation after a Safe-Box
/// move.
struct ServerState {
  ServerSpec spec;
  std::vector<std::string> hosted;  // insertion order, deterministic
  std::map<std::string, ResourceVector> footprint;
  double cpu_util = 0.0;
  double power_w = 0.0;
  double temperature_c = 20.0;
  HealthStatus status = HealthStatus::Safe;

  bool active() const { return !hosted.empty(); }
  ResourceVector committed(const std::string& exclude_vm = {}) const;
};

/// Electrical draw at a given CPU utilization: (max-min)*ru + idle.
double server_power(const ServerSpec& spec, double ru);

/// Fleet total; inactive servers are powered off and contribute nothing.
double datacenter_power(std::span<const ServerState> states);

/// CPU temperature from power draw against a 20 degC inlet; the fraction of
/// the dynamic envelope is scaled by 1/0.130.
double server_temperature(const ServerSpec& spec, double power_w, double t_in_c = 20.0);

/// Safe strictly below the threshold.
HealthStatus server_status(double temperature_c, double t_thr_c);

struct UtilizationReport {
  ResourceVector per_resource_ratio_sum = ResourceVector::Zero();  // sum over servers of demand/capacity
  double overall_pct = 0.0;
  bool any_active = false;
};

/// Datacenter utilization: per resource, the sum over active servers of
/// (hosted demand / capacity); overall, that total averaged over the resource
/// count and active-server count, as a percent.
UtilizationReport datacenter_utilization(std::span<const ServerState> states,
                                         const std::map<std::string, ResourceVector>& demands);

/// Placement constraint: committed + pending + demand <= capacity, every
/// resource. `exclude_vm` drops that VM's own footprint (re-sizing in place).
bool can_place(const ServerState& server, const ResourceVector& demand,
               const ResourceVector& pending = ResourceVector::Zero(),
               const std::string& exclude_vm = {});

/// Feasible server (placement constraint holds, thermally Safe) whose
/// placement costs the least additional datacenter power. Active servers win
/// ties against waking an idle one; remaining ties go to the lowest id.
/// `pending` holds not-yet-materialized reservations per server index;
/// `exclude_server` bars one fleet index (an overloaded source).
std::optional<int> select_energy_efficient_server(std::span<const ServerState> fleet,
                                                  const ResourceVector& demand,
                                                  std::span<const ResourceVector> pending = {},
                                                  const std::string& exclude_vm = {},
                                                  int exclude_server = -1);

/// Owns the fleet and the VM -> server mapping; mutations go through place /
/// apply_migration so the placement constraint can be enforced.
class Datacenter {
 public:
  Datacenter() = default;
  Datacenter(std::vector<ServerSpec> fleet, std::vector<VmSpec> vms);

  const std::vector<ServerState>& servers() const { return servers_; }
  std::vector<ServerState>& servers() { return servers_; }
  const std::map<std::string, VmSpec>& vms() const { return vms_; }
  const VmSpec& vm(const std::string& vm_id) const;

  bool is_hosted(const std::string& vm_id) const { return host_of_.count(vm_id) > 0; }
  int host_of(const std::string& vm_id) const;

  /// Initial deployment of an unhosted VM.
  void place(const std::string& vm_id, int server, const ResourceVector& footprint);

  /// Moves a hosted VM; throws (state unchanged) if the move is infeasible or
  /// source == dest.
  MigrationEvent apply_migration(const std::string& vm_id, int dest, int interval,
                                 const std::string& reason,
                                 std::optional<ResourceVector> new_footprint = std::nullopt);

  /// Re-sizes a VM's slot on its current server (a reservation landing where
  /// the VM already lives). Not a migration.
  void resize_footprint(const std::string& vm_id, const ResourceVector& footprint);

  /// Largest committed-over-capacity overshoot across servers and resources;
  /// <= 0 when the placement constraint holds everywhere.
  double worst_capacity_overshoot() const;

 private:
  std::vector<ServerState> servers_;
  std::map<std::string, VmSpec> vms_;
  std::map<std::string, int> host_of_;
};

/// Fleet builder: cycles the stock models to reach ceil(n_vms / ratio) servers.
std::vector<ServerSpec> build_default_fleet(int n_vms, double vm_server_ratio = 2.0,
                                            double link_mbps = 1000.0);

/// Inventory file IO: {"servers": [...], "vm_types": {...}} mirroring the
/// stock catalog; omitted fields fall back to defaults.
std::vector<ServerSpec> load_fleet_inventory(const std::string& path);

}  // namespace ftsim
