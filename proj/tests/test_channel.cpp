#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "uavnoma/channel.hpp"

using namespace uavnoma;

namespace {
const ChannelConfig kCfg;  // defaults are the reference parameters
}

TEST_CASE("path-loss constant and wavelength") {
  CHECK(kCfg.wavelength_m() == doctest::Approx(1.0 / 3.0));
  CHECK(kCfg.c0() == doctest::Approx(7.036e-4).epsilon(1e-3));
}

TEST_CASE("received power at 1 km with unit fading") {
  const double p = received_power({0.0, 0.0}, {0.0, 0.0, 1000.0}, 1.0, true, kCfg);
  // c0 * 1 W * 1e-6
  CHECK(p == doctest::Approx(7.036e-10).epsilon(5e-3));
  CHECK(received_power({0.0, 0.0}, {0.0, 0.0, 1000.0}, 1.0, false, kCfg) == 0.0);
  CHECK(received_power({0.0, 0.0}, {0.0, 0.0, 1000.0}, 2.0, true, kCfg) ==
        doctest::Approx(2.0 * p));
}

TEST_CASE("path loss saturates at the reference distance") {
  const double at_d0 =
      received_power({0.0, 0.0}, {0.0, 0.0, 1.0}, 1.0, true, kCfg);
  const double inside =
      received_power({0.0, 0.0}, {0.0, 0.0, 0.1}, 1.0, true, kCfg);
  CHECK(inside == doctest::Approx(at_d0));
  CHECK(at_d0 == doctest::Approx(kCfg.c0() * kCfg.tx_power_w));
}

TEST_CASE("SNIR threshold is inclusive") {
  CHECK(threshold_snir(10.0, kCfg) == 10.0);                 // exactly 10 dB
  CHECK(threshold_snir(10.0 * (1 - 1e-12), kCfg) == 0.0);
  CHECK(threshold_snir(25.0, kCfg) == 25.0);
}

TEST_CASE("top2 SNIR with three transmitters") {
  // Powers 4, 2, 1 in units of the noise floor.
  const double n0 = kCfg.noise_floor_w;
  const Top2Snir t =
      top2_snir({0, 1, 2}, {4.0 * n0, 2.0 * n0, 1.0 * n0}, n0);
  REQUIRE(t.has1);
  REQUIRE(t.has2);
  CHECK(t.id1 == 0);
  CHECK(t.id2 == 1);
  CHECK(t.snir1 == doctest::Approx(4.0 / (1.0 + 3.0)));  // = 1.0
  CHECK(t.snir2 == doctest::Approx(2.0 / (1.0 + 1.0)));  // = 1.0
}

TEST_CASE("top2 SNIR with a single transmitter") {
  const double n0 = kCfg.noise_floor_w;
  const Top2Snir t = top2_snir({7}, {50.0 * n0}, n0);
  CHECK(t.has1);
  CHECK_FALSE(t.has2);
  CHECK(t.id1 == 7);
  CHECK(t.snir1 == doctest::Approx(50.0));
}

TEST_CASE("top2 SNIR power tie goes to the lower device id") {
  const double n0 = kCfg.noise_floor_w;
  const Top2Snir t = top2_snir({3, 1, 2}, {n0, n0, n0}, n0);
  CHECK(t.id1 == 3);  // first seen keeps the top slot on exact ties
  CHECK(t.id2 == 1);
  const Top2Snir u = top2_snir({1, 2, 3}, {n0, n0, n0}, n0);
  CHECK(u.id1 == 1);
  CHECK(u.id2 == 2);
}

TEST_CASE("subslot rate gating") {
  const std::vector<int> owner = {0, 1};
  ChannelConfig cfg = kCfg;
  cfg.snir_threshold = db_to_linear(10.0);

  Top2Snir t;
  t.has1 = t.has2 = true;
  t.id1 = 0;
  t.id2 = 1;
  t.snir1 = 100.0;
  t.snir2 = 20.0;

  // Both above threshold but second owned elsewhere: only signal 1 counts.
  CHECK(subslot_rate(0, t, owner, cfg) ==
        doctest::Approx(std::log2(101.0)));
  // At UAV 1 the top signal is foreign, so nothing decodes (SIC gate).
  CHECK(subslot_rate(1, t, owner, cfg) == 0.0);

  // Same owner for both: both rates add.
  const std::vector<int> owner0 = {0, 0};
  CHECK(subslot_rate(0, t, owner0, cfg) ==
        doctest::Approx(std::log2(101.0) + std::log2(21.0)));

  // First below threshold kills the second even if the second is above.
  t.snir1 = 5.0;
  CHECK(subslot_rate(0, t, owner0, cfg) == 0.0);
}

TEST_CASE("p = 0 yields an all-zero slot") {
  Rng rng(5);
  DeviceSet d;
  d.positions = {{0.0, 0.0}, {10.0, 0.0}};
  const std::vector<Point3> uavs = {{5.0, 0.0, 800.0}};
  const Association a = associate(d, uavs);
  const SlotOutcome out = simulate_slot(d, uavs, a, 0.0, kCfg, rng);
  CHECK(out.capacity_sum == 0.0);
  CHECK(out.decode1_count[0] == 0);
  CHECK(out.stats[0].p_above_1 == 0.0);
  CHECK(out.stats[0].mean_1 == 0.0);
}

TEST_CASE("simulate_slot rejects invalid access probability") {
  Rng rng(5);
  DeviceSet d;
  d.positions = {{0.0, 0.0}};
  const std::vector<Point3> uavs = {{0.0, 0.0, 800.0}};
  const Association a = associate(d, uavs);
  CHECK_THROWS_AS(simulate_slot(d, uavs, a, -0.1, kCfg, rng), ConfigError);
  CHECK_THROWS_AS(simulate_slot(d, uavs, a, 1.1, kCfg, rng), ConfigError);
}

TEST_CASE("deterministic single device: exact slot capacity") {
  // One device at 1 km, unit fading, p = 1: every sub-slot decodes the same
  // SNIR = c0 * 1 W * 1e-6 / n0.
  DeviceSet d;
  d.positions = {{0.0, 0.0}};
  const std::vector<Point3> uavs = {{0.0, 0.0, 1000.0}};
  const Association a = associate(d, uavs);
  Rng rng(9);
  const std::vector<double> fading = {1.0};
  const SlotOutcome out =
      simulate_slot_with_fading(d, uavs, a, 1.0, fading, kCfg, rng);
  const double snir = kCfg.c0() * kCfg.tx_power_w * 1e-6 / kCfg.noise_floor_w;
  CHECK(snir == doctest::Approx(70.36).epsilon(1e-3));
  CHECK(out.decode1_count[0] == kCfg.subslots_per_slot);
  CHECK(out.stats[0].p_above_1 == 1.0);
  CHECK(out.stats[0].mean_1 == doctest::Approx(snir));
  CHECK(out.stats[0].var_1 == doctest::Approx(0.0));
  CHECK(out.capacity_sum ==
        doctest::Approx(kCfg.subslots_per_slot * std::log2(1.0 + snir)));
}

TEST_CASE("stats frequencies equal decode counts over L") {
  Rng rng(31);
  const DeviceSet d = deploy_devices(60, {1500.0, 500.0}, rng);
  const std::vector<Point3> uavs = {{375.0, 250.0, 700.0},
                                    {1125.0, 250.0, 900.0}};
  const Association a = associate(d, uavs);
  const SlotOutcome out = simulate_slot(d, uavs, a, 0.02, kCfg, rng);
  for (size_t k = 0; k < uavs.size(); ++k) {
    CHECK(out.stats[k].p_above_1 ==
          doctest::Approx(static_cast<double>(out.decode1_count[k]) /
                          kCfg.subslots_per_slot));
    CHECK(out.stats[k].p_above_2 ==
          doctest::Approx(static_cast<double>(out.decode2_count[k]) /
                          kCfg.subslots_per_slot));
    CHECK(out.decode2_count[k] <= out.decode1_count[k]);
  }
}

TEST_CASE("throughput peaks near p = 1/N for interference-limited access") {
  // With symmetric devices the per-sub-slot success mass follows the Aloha
  // curve; compare p = 1/N against a much larger and much smaller p.
  Rng rng(2024);
  const int n = 40;
  const DeviceSet d = deploy_devices(n, {600.0, 600.0}, rng);
  const std::vector<Point3> uavs = {{300.0, 300.0, 800.0}};
  const Association a = associate(d, uavs);
  ChannelConfig cfg = kCfg;
  cfg.subslots_per_slot = 4000;

  auto run = [&](double p, uint64_t seed) {
    double total = 0.0;
    const int reps = 12;
    for (int r = 0; r < reps; ++r) {
      Rng slot_rng(Rng::derive_seed(seed, r, 0));
      total += simulate_slot(d, uavs, a, p, cfg, slot_rng).capacity_sum;
    }
    return total / reps;
  };

  const double at_opt = run(1.0 / n, 111);
  const double at_high = run(0.5, 222);
  const double at_low = run(0.001, 333);
  CHECK(at_opt > at_high);
  CHECK(at_opt > at_low);
}
