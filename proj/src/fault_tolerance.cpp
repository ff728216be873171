#include "ftsim/fault_tolerance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace ftsim {

namespace {

double squared_distance(const ResourceVector& a, const ResourceVector& b) {
  return (a - b).square().sum();
}

int nearest_centroid(const ResourceVector& p, const std::vector<ResourceVector>& centroids) {
  int best = 0;
  double best_d = squared_distance(p, centroids[0]);
  for (int c = 1; c < static_cast<int>(centroids.size()); ++c) {
    const double d = squared_distance(p, centroids[static_cast<std::size_t>(c)]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

// Distance-weighted (k-means++ style) initial centroids. Each step draws a
// few weighted candidates and keeps the one that shrinks the potential most.
std::vector<ResourceVector> seed_centroids(std::span<const DemandPoint> points, int k,
                                           std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<ResourceVector> centroids;
  centroids.reserve(static_cast<std::size_t>(k));
  centroids.push_back(
      points[static_cast<std::size_t>(unit(rng) * static_cast<double>(points.size())) %
             points.size()]
          .predicted);

  std::vector<double> d2(points.size());
  while (static_cast<int>(centroids.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const ResourceVector& c : centroids)
        best = std::min(best, squared_distance(points[i].predicted, c));
      d2[i] = best;
      total += best;
    }

    auto draw_weighted = [&]() -> std::size_t {
      if (total <= 0.0)
        return static_cast<std::size_t>(unit(rng) * static_cast<double>(points.size())) %
               points.size();
      double target = unit(rng) * total;
      std::size_t pick = 0;
      for (; pick + 1 < points.size(); ++pick) {
        target -= d2[pick];
        if (target <= 0.0) break;
      }
      return pick;
    };

    const int candidates = 3;
    std::size_t best_pick = draw_weighted();
    double best_potential = std::numeric_limits<double>::infinity();
    for (int attempt = 0; attempt < candidates; ++attempt) {
      const std::size_t pick = attempt == 0 ? best_pick : draw_weighted();
      double potential = 0.0;
      for (std::size_t i = 0; i < points.size(); ++i)
        potential += std::min(d2[i], squared_distance(points[i].predicted, points[pick].predicted));
      if (potential < best_potential) {
        best_potential = potential;
        best_pick = pick;
      }
    }
    centroids.push_back(points[best_pick].predicted);
  }
  return centroids;
}

}  // namespace

Clustering kmeans(std::span<const DemandPoint> points, int k, std::uint64_t seed,
                  int max_iterations) {
  const int n = static_cast<int>(points.size());
  if (k < 1 || k > n)
    throw std::invalid_argument("kmeans: k = " + std::to_string(k) + " outside [1, " +
                                std::to_string(n) + "]");

  std::mt19937_64 rng(seed);
  std::vector<ResourceVector> centroids = seed_centroids(points, k, rng);
  std::vector<int> assignment(static_cast<std::size_t>(n), -1);

  Clustering result;
  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      const int c = nearest_centroid(points[static_cast<std::size_t>(i)].predicted, centroids);
      if (c != assignment[static_cast<std::size_t>(i)]) {
        assignment[static_cast<std::size_t>(i)] = c;
        changed = true;
      }
    }

    std::vector<ResourceVector> sums(static_cast<std::size_t>(k), ResourceVector::Zero());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (int i = 0; i < n; ++i) {
      sums[static_cast<std::size_t>(assignment[static_cast<std::size_t>(i)])] +=
          points[static_cast<std::size_t>(i)].predicted;
      ++counts[static_cast<std::size_t>(assignment[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centroids[static_cast<std::size_t>(c)] =
            sums[static_cast<std::size_t>(c)] / counts[static_cast<std::size_t>(c)];
      } else {
        // Reseed an emptied cluster to the point farthest from its old centroid.
        int farthest = 0;
        double far_d = -1.0;
        for (int i = 0; i < n; ++i) {
          const double d = squared_distance(points[static_cast<std::size_t>(i)].predicted,
                                            centroids[static_cast<std::size_t>(c)]);
          if (d > far_d) {
            far_d = d;
            farthest = i;
          }
        }
        centroids[static_cast<std::size_t>(c)] = points[static_cast<std::size_t>(farthest)].predicted;
        changed = true;
      }
    }

    double inertia = 0.0;
    for (int i = 0; i < n; ++i)
      inertia += squared_distance(
          points[static_cast<std::size_t>(i)].predicted,
          centroids[static_cast<std::size_t>(assignment[static_cast<std::size_t>(i)])]);
    result.inertia_trace.push_back(inertia);

    if (!changed) break;
  }

  // Final tight assignment against the converged centroids.
  result.k = k;
  result.centroids = std::move(centroids);
  result.inertia = 0.0;
  for (int i = 0; i < n; ++i) {
    const int c = nearest_centroid(points[static_cast<std::size_t>(i)].predicted, result.centroids);
    result.assignments[points[static_cast<std::size_t>(i)].vm_id] = c;
    result.inertia += squared_distance(points[static_cast<std::size_t>(i)].predicted,
                                       result.centroids[static_cast<std::size_t>(c)]);
  }
  return result;
}

Clustering kmeans_best(std::span<const DemandPoint> points, int k, std::uint64_t seed, int restarts,
                       int max_iterations) {
  if (restarts < 1) throw std::invalid_argument("kmeans_best: restarts must be >= 1");
  Clustering best;
  bool have = false;
  for (int r = 0; r < restarts; ++r) {
    Clustering candidate = kmeans(points, k, mix_seed(seed, static_cast<std::uint64_t>(r)),
                                  max_iterations);
    if (!have || candidate.inertia < best.inertia) {
      best = std::move(candidate);
      have = true;
    }
  }
  return best;
}

int choose_k_elbow(std::span<const DemandPoint> points, int k_max, std::uint64_t seed) {
  if (points.empty()) throw std::invalid_argument("choose_k_elbow: no points");
  if (k_max < 1) throw std::invalid_argument("choose_k_elbow: k_max must be >= 1");
  if (points.size() <= 2) return 1;

  const int upper = std::min<int>(k_max, static_cast<int>(points.size()));
  std::vector<double> inertia(static_cast<std::size_t>(upper) + 1, 0.0);
  for (int k = 1; k <= upper; ++k)
    inertia[static_cast<std::size_t>(k)] =
        kmeans_best(points, k, mix_seed(seed, static_cast<std::uint64_t>(k))).inertia;

  if (inertia[1] <= 1e-12) return 1;  // every point coincides
  if (upper == 1) return 1;
  if (upper == 2) return inertia[2] < inertia[1] ? 2 : 1;

  int best_k = 2;
  double best_curvature = -std::numeric_limits<double>::infinity();
  for (int k = 2; k <= upper - 1; ++k) {
    const double curvature = inertia[static_cast<std::size_t>(k) - 1] -
                             2.0 * inertia[static_cast<std::size_t>(k)] +
                             inertia[static_cast<std::size_t>(k) + 1];
    if (curvature > best_curvature) {
      best_curvature = curvature;
      best_k = k;
    }
  }
  return best_k;
}

Matrix build_decision_matrix(std::span<const DemandPoint> members) {
  if (members.empty()) throw std::invalid_argument("decision matrix of an empty cluster");
  Matrix m(kNumResources, static_cast<Eigen::Index>(members.size()));
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (int r = 0; r < kNumResources; ++r)
      m(r, j) = members[static_cast<std::size_t>(j)].predicted[r];
  return m;
}

SafeBox derive_safe_box(const Matrix& decision_matrix, int cluster) {
  if (decision_matrix.size() == 0) throw std::invalid_argument("safe box from an empty matrix");
  SafeBox box;
  box.cluster = cluster;
  box.member_count = static_cast<int>(decision_matrix.cols());
  const Vector row_max = decision_matrix.rowwise().maxCoeff();
  for (int r = 0; r < kNumResources && r < row_max.size(); ++r) box.reserve[r] = row_max[r];
  return box;
}

std::vector<SafeBoxPlacement> allocate_safe_boxes(const Clustering& clustering,
                                                  std::span<const SafeBox> boxes,
                                                  std::span<const DemandPoint> points,
                                                  const Datacenter& dc,
                                                  const ResourceVector& reference_capacity,
                                                  std::span<const ResourceVector> extra_pending) {
  std::vector<ResourceVector> pending(dc.servers().size(), ResourceVector::Zero());
  for (std::size_t i = 0; i < pending.size() && i < extra_pending.size(); ++i)
    pending[i] = extra_pending[i];
  std::vector<SafeBoxPlacement> plan;
  plan.reserve(points.size());

  // Cluster-major, members in point order: deterministic and matches the
  // box-per-member mapping.
  for (const SafeBox& box : boxes) {
    for (const DemandPoint& point : points) {
      auto assigned = clustering.assignments.find(point.vm_id);
      if (assigned == clustering.assignments.end() || assigned->second != box.cluster) continue;

      SafeBoxPlacement placement;
      placement.vm_id = point.vm_id;
      placement.cluster = box.cluster;
      placement.reserve_abs = box.reserve * reference_capacity;
      placement.footprint = placement.reserve_abs.max(dc.vm(point.vm_id).allocated);

      const auto choice = select_energy_efficient_server(dc.servers(), placement.footprint,
                                                         pending, point.vm_id);
      if (choice.has_value()) {
        placement.server = *choice;
        placement.placed = true;
        const auto s = static_cast<std::size_t>(*choice);
        ResourceVector delta = placement.footprint;
        // A reservation on the VM's own host swaps its current slot rather
        // than stacking on top of it.
        if (dc.is_hosted(point.vm_id) && dc.host_of(point.vm_id) == *choice)
          delta -= dc.servers()[s].footprint.at(point.vm_id);
        pending[s] += delta;
      }
      plan.push_back(std::move(placement));
    }
  }
  return plan;
}

DeploymentOutcome deploy_replicas(std::span<const SafeBoxPlacement> placements, Datacenter& dc,
                                  int interval) {
  DeploymentOutcome outcome;
  for (const SafeBoxPlacement& placement : placements) {
    if (!placement.placed) {
      outcome.placement_failures.push_back(placement.vm_id);
      continue;
    }
    const int current = dc.host_of(placement.vm_id);
    if (current == placement.server) {
      dc.resize_footprint(placement.vm_id, placement.footprint);
      ++outcome.noop_count;
      continue;
    }

    int dest = placement.server;
    const ServerState& target = dc.servers()[static_cast<std::size_t>(dest)];
    if (!can_place(target, placement.footprint, ResourceVector::Zero(), placement.vm_id)) {
      // Plan went stale; replan once against the live fleet.
      const auto retry = select_energy_efficient_server(dc.servers(), placement.footprint, {},
                                                        placement.vm_id);
      if (!retry.has_value()) {
        outcome.placement_failures.push_back(placement.vm_id);
        continue;
      }
      dest = *retry;
    }
    if (dest == current) {
      dc.resize_footprint(placement.vm_id, placement.footprint);
      ++outcome.noop_count;
      continue;
    }
    outcome.migrations.push_back(dc.apply_migration(placement.vm_id, dest, interval,
                                                    "proactive_sbox", placement.footprint));
  }
  return outcome;
}

}  // namespace ftsim
