#include <doctest.h>

#include "ftsim/outage.hpp"

using namespace ftsim;

namespace {

// A zero-weight genome predicts zero in model space; through a constant
// series' degenerate min-max record the de-normalized prediction is exactly
// the constant. That pins classification inputs without training anything.
NetworkGenome zero_genome(int input_sets = 2) {
  NetworkLayout layout;
  layout.input_sets = input_sets;
  layout.hidden_sets = 2;
  layout.hidden_layers = 1;
  NetworkGenome genome;
  genome.layout = layout;
  genome.weights = Vector::Zero(layout.total_weights());
  return genome;
}

VmSeries constant_series(const std::string& id, const ResourceVector& level, int n = 4) {
  VmSeries series;
  series.vm_id = id;
  series.values.assign(static_cast<std::size_t>(n), level);
  return series;
}

VmSpec make_vm(const std::string& id, VmType type, int havn) {
  VmSpec vm;
  vm.id = id;
  vm.type = type;
  vm.allocated = vm_type_allocation(type);
  vm.storage_gb = vm_type_storage(type);
  vm.owner_user = havn;
  vm.havn_id = havn;
  return vm;
}

struct Setup {
  Datacenter dc;
  std::vector<Havn> havns;
  std::map<std::string, VmSeries> history;
  std::map<std::string, ResourceVector> observed;
};

Setup two_vm_setup(const ResourceVector& level_a, const ResourceVector& level_b,
                   VmType type_a = VmType::large, VmType type_b = VmType::large) {
  Setup s{Datacenter({make_server_spec(0, ServerModel::s3)},
                     {make_vm("a", type_a, 0), make_vm("b", type_b, 0)}),
          {}, {}, {}};
  s.dc.place("a", 0, vm_type_allocation(type_a));
  s.dc.place("b", 0, vm_type_allocation(type_b));
  s.havns.push_back({0, 0, {"a", "b"}});
  s.history.emplace("a", constant_series("a", level_a));
  s.history.emplace("b", constant_series("b", level_b));
  const ResourceVector ref = default_reference_capacity();
  s.observed["a"] = level_a * ref;
  s.observed["b"] = level_b * ref;
  return s;
}

}  // namespace

TEST_CASE("a single contended resource marks the vm failure prone") {
  // large allocation fractions against the reference: (0.75, 2/3, 0.75)
  Setup s = two_vm_setup(ResourceVector(0.8, 0.5, 0.5), ResourceVector(0.2, 0.2, 0.2));
  const auto cls = classify_vms(s.havns, s.history, zero_genome(), s.dc,
                                default_reference_capacity(), 0);
  CHECK(cls.failure_prone.count("a") == 1);  // cpu 0.8 > 0.75, other resources fine
  CHECK(cls.normal.count("b") == 1);
  CHECK(cls.predictions.at("a").denormalized[0] == doctest::Approx(0.8));
}

TEST_CASE("prediction equal to the allocation boundary stays normal") {
  const ResourceVector exactly_large(0.75, 2.0 / 3.0, 0.75);
  Setup s = two_vm_setup(exactly_large, ResourceVector(0.1, 0.1, 0.1));
  const auto cls = classify_vms(s.havns, s.history, zero_genome(), s.dc,
                                default_reference_capacity(), 0);
  CHECK(cls.failure_prone.empty());
  CHECK(cls.normal.count("a") == 1);
}

TEST_CASE("short history defaults to normal with a flag") {
  Setup s = two_vm_setup(ResourceVector(0.9, 0.9, 0.9), ResourceVector(0.1, 0.1, 0.1));
  s.history.at("a").values.resize(1);  // below the window length of 2
  const auto cls = classify_vms(s.havns, s.history, zero_genome(), s.dc,
                                default_reference_capacity(), 0);
  CHECK(cls.normal.count("a") == 1);
  CHECK(cls.insufficient_history.count("a") == 1);
  CHECK(cls.predictions.count("a") == 0);
}

TEST_CASE("classification partitions every havn member") {
  Setup s = two_vm_setup(ResourceVector(0.9, 0.2, 0.2), ResourceVector(0.3, 0.3, 0.3));
  auto cls = classify_vms(s.havns, s.history, zero_genome(), s.dc, default_reference_capacity(), 0);
  for (const Havn& havn : s.havns)
    for (const std::string& vm : havn.vm_ids)
      CHECK(cls.failure_prone.count(vm) + cls.normal.count(vm) == 1);
  assess_servers(s.dc, cls, s.observed, default_reference_capacity(), 26.0);
  for (const Havn& havn : s.havns)
    for (const std::string& vm : havn.vm_ids)
      CHECK(cls.failure_prone.count(vm) + cls.normal.count(vm) == 1);
}

TEST_CASE("server sweep rescues vms on servers with headroom") {
  // S3 capacity (36804, 16, 1000); two larges predicting 0.8/0.5/0.5 demand
  // absolute (1600+1000 cpu, 2.4+1.5 mem, 400+250 bw) leave plenty of room.
  Setup s = two_vm_setup(ResourceVector(0.8, 0.5, 0.5), ResourceVector(0.5, 0.5, 0.5));
  auto cls = classify_vms(s.havns, s.history, zero_genome(), s.dc, default_reference_capacity(), 0);
  REQUIRE(cls.failure_prone.count("a") == 1);
  const auto risks = assess_servers(s.dc, cls, s.observed, default_reference_capacity(), 26.0);
  REQUIRE(risks.size() == 1);
  CHECK_FALSE(risks[0].overloaded);
  CHECK(cls.failure_prone.empty());
  CHECK(cls.normal.count("a") == 1);
}

TEST_CASE("aggregate demand above capacity keeps the server overloaded") {
  // Shrink the fleet to one S1 (5320 MIPS, 4 GB, 1000 Mbit): two larges
  // predicting 0.9 of reference need 5.4 GB of memory, over capacity.
  Setup s{Datacenter({make_server_spec(0, ServerModel::s1)},
                     {make_vm("a", VmType::large, 0), make_vm("b", VmType::large, 0)}),
          {}, {}, {}};
  s.dc.place("a", 0, vm_type_allocation(VmType::large));
  s.dc.place("b", 0, vm_type_allocation(VmType::large));
  s.havns.push_back({0, 0, {"a", "b"}});
  s.history.emplace("a", constant_series("a", ResourceVector(0.9, 0.9, 0.9)));
  s.history.emplace("b", constant_series("b", ResourceVector(0.9, 0.9, 0.9)));
  const ResourceVector ref = default_reference_capacity();
  s.observed["a"] = ResourceVector(0.9, 0.9, 0.9) * ref;
  s.observed["b"] = s.observed["a"];

  auto cls = classify_vms(s.havns, s.history, zero_genome(), s.dc, ref, 0);
  REQUIRE(cls.failure_prone.size() == 2);
  const auto risks = assess_servers(s.dc, cls, s.observed, ref, 26.0);
  CHECK(risks[0].overloaded);
  CHECK_FALSE(risks[0].thermal_unsafe);
  CHECK(cls.failure_prone.size() == 2);
}

TEST_CASE("a hot server is overloaded even with demand headroom") {
  Setup s = two_vm_setup(ResourceVector(0.2, 0.2, 0.2), ResourceVector(0.2, 0.2, 0.2));
  s.dc.servers()[0].temperature_c = 27.0;
  auto cls = classify_vms(s.havns, s.history, zero_genome(), s.dc, default_reference_capacity(), 0);
  const auto risks = assess_servers(s.dc, cls, s.observed, default_reference_capacity(), 26.0);
  CHECK(risks[0].thermal_unsafe);
  CHECK(risks[0].overloaded);
}

TEST_CASE("raising every prediction weakly grows the failure-prone set") {
  for (double low : {0.1, 0.3, 0.5}) {
    Setup base = two_vm_setup(ResourceVector(low, low, low), ResourceVector(low + 0.1, low, low),
                              VmType::medium, VmType::small);
    auto cls_low = classify_vms(base.havns, base.history, zero_genome(), base.dc,
                                default_reference_capacity(), 0);

    const double high = low + 0.3;
    Setup raised = two_vm_setup(ResourceVector(high, high, high),
                                ResourceVector(high + 0.1, high, high), VmType::medium,
                                VmType::small);
    auto cls_high = classify_vms(raised.havns, raised.history, zero_genome(), raised.dc,
                                 default_reference_capacity(), 0);
    for (const std::string& vm : cls_low.failure_prone) CHECK(cls_high.failure_prone.count(vm) == 1);
  }
}

TEST_CASE("run_interval composes classification and server risks") {
  Setup s = two_vm_setup(ResourceVector(0.8, 0.5, 0.5), ResourceVector(0.2, 0.2, 0.2));
  const auto assessment = run_interval(s.havns, s.history, zero_genome(), s.dc, s.observed,
                                       default_reference_capacity(), 26.0, 7);
  CHECK(assessment.classification.interval == 7);
  CHECK(assessment.risks.size() == s.dc.servers().size());
}
