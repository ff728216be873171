#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ftsim/datacenter.hpp"
#include "ftsim/types.hpp"

namespace ftsim {

/// One failure-prone VM's predicted next-interval demand, as a capacity fraction.
struct DemandPoint {
  std::string vm_id;
  ResourceVector predicted = ResourceVector::Zero();
};

struct Clustering {
  int k = 0;
  std::map<std::string, int> assignments;
  std::vector<ResourceVector> centroids;
  double inertia = 0.0;                // sum of squared distances to assigned centroid
  std::vector<double> inertia_trace;   // per Lloyd iteration, non-increasing
};

/// Lloyd iteration over the 3-d demand points with distance-weighted seeding;
/// stops when assignments stabilize or after max_iterations. An emptied
/// cluster is reseeded to the point farthest from its old centroid.
Clustering kmeans(std::span<const DemandPoint> points, int k, std::uint64_t seed,
                  int max_iterations = 100);

/// Best inertia across `restarts` seeded runs.
Clustering kmeans_best(std::span<const DemandPoint> points, int k, std::uint64_t seed,
                       int restarts = 10, int max_iterations = 100);

/// Elbow rule: sweep k = 1..min(k_max, #points) and pick the k with the
/// largest second difference of the inertia curve. Two or fewer points (or a
/// degenerate all-identical set) collapse to k = 1.
int choose_k_elbow(std::span<const DemandPoint> points, int k_max, std::uint64_t seed);

/// Column per member VM, row per resource, entries = predicted demand.
Matrix build_decision_matrix(std::span<const DemandPoint> members);

/// Per-cluster reservation vector: the row-wise maxima of a decision matrix.
struct SafeBox {
  int cluster = 0;
  ResourceVector reserve = ResourceVector::Zero();
  int member_count = 0;
};

SafeBox derive_safe_box(const Matrix& decision_matrix, int cluster = 0);

/// Planned reservation for one failure-prone VM, sized by its cluster's box.
struct SafeBoxPlacement {
  std::string vm_id;
  int cluster = -1;
  int server = -1;          // fleet index; -1 when nothing could take it
  bool placed = false;
  ResourceVector reserve_abs = ResourceVector::Zero();   // absolute units
  ResourceVector footprint = ResourceVector::Zero();     // max(reserve, allocation)
};

/// Sizes one reservation per member VM from its cluster's Safe-Box and routes
/// each through energy-efficient server selection, accounting for the
/// reservations already planned this pass. `extra_pending` (per fleet index)
/// injects demand the caller already expects on a server, e.g. predicted load
/// beyond its bookings, so reservations avoid servers about to overload.
/// Unplaceable reservations come back with placed = false.
std::vector<SafeBoxPlacement> allocate_safe_boxes(const Clustering& clustering,
                                                  std::span<const SafeBox> boxes,
                                                  std::span<const DemandPoint> points,
                                                  const Datacenter& dc,
                                                  const ResourceVector& reference_capacity,
                                                  std::span<const ResourceVector> extra_pending = {});

struct DeploymentOutcome {
  std::vector<MigrationEvent> migrations;
  std::vector<std::string> placement_failures;  // planned but unplaceable at apply time
  int noop_count = 0;                           // reservation landed on the current host
};

/// Applies the plan: each failure-prone VM moves into its reservation (0.21 min
/// downtime per move); a reservation on the VM's own server only re-sizes its
/// slot. A plan whose feasibility evaporated is replanned once, then recorded
/// as a placement failure.
DeploymentOutcome deploy_replicas(std::span<const SafeBoxPlacement> placements, Datacenter& dc,
                                  int interval);

}  // namespace ftsim
