// Copyright 2026 The convsched Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <random>

#include "gtest/gtest.h"

#include "convsched/census.hpp"
#include "convsched/colocation.hpp"
#include "test_support.hpp"

namespace convsched {
namespace {

using testing::make_profile;
using testing::pick;

struct Flagship : ::testing::Test {
    std::vector<KernelProfile> ps = testing::bundled_profiles();
    DeviceSpec k40 = testing::bundled_device();
    const KernelProfile& precomp3 = pick(ps, "incep1_3x3", Algorithm::PRECOMP_GEMM);
    const KernelProfile& tiling5 = pick(ps, "incep1_5x5", Algorithm::FFT_TILING);
};

TEST_F(Flagship, ContinuousHeadroom) {
    const double expect = std::min({0.08 / 0.38, 0.61 / 0.75, 0.62 / 0.25, 0.81 / 0.06});
    auto plan = intra_sm_allocate(precomp3, tiling5, k40, Granularity::continuous);
    ASSERT_TRUE(plan);
    EXPECT_EQ(plan->mode, CoRunMode::intra);
    EXPECT_EQ(plan->share[0], 1.0);
    EXPECT_NEAR(plan->share[1], expect, 1e-12);
    EXPECT_NEAR(plan->share[1], 0.2105, 1e-4);
}

TEST_F(Flagship, QuantizedIsInfeasible) {
    // One FFT_TILING block needs 0.38 of the register file; PRECOMP's three
    // resident blocks leave 0.08.
    EXPECT_EQ(quantized_corunner_blocks(precomp3, tiling5, k40), 0);
    EXPECT_FALSE(intra_sm_allocate(precomp3, tiling5, k40, Granularity::quantized));
    EXPECT_FALSE(intra_sm_allocate(tiling5, precomp3, k40, Granularity::quantized));
}

TEST_F(Flagship, SimulatedMakespan) {
    auto a = precomp3;
    auto b = tiling5;
    auto plan = *intra_sm_allocate(a, b, k40, Granularity::continuous);
    const auto out = simulate_plan(a, b, plan, k40);
    const double beta = 0.08 / 0.38;
    // Hand piecewise: b does beta * 10 / 8 work by t = 10, then runs solo.
    const double expect = 10.0 + 8.0 * (1.0 - beta * 10.0 / 8.0);
    EXPECT_NEAR(out.makespan_ms, expect, 1e-12);
    EXPECT_NEAR(out.makespan_ms, 15.90, 0.01);
    EXPECT_DOUBLE_EQ(out.finish_time_ms[0], 10.0);
    ASSERT_EQ(out.segments.size(), 2u);
    EXPECT_EQ(out.segments[0].contention, 1.0);
    EXPECT_EQ(out.segments[0].binding, Binding::occupancy);
    EXPECT_NEAR(out.segments[0].rate[1] * 10.0, 0.263, 1e-3);
    EXPECT_EQ(out.segments[1].rate[0], 0.0);
}

TEST(IntraSmAllocate, NullKernelsShareFully) {
    DeviceSpec d;
    d.max_blocks_per_sm = 16;
    auto z = make_profile("z", Algorithm::GEMM, 0, 0, 0, 0, 0, 0, 1);
    for (auto g : {Granularity::continuous, Granularity::quantized}) {
        auto plan = intra_sm_allocate(z, z, d, g);
        ASSERT_TRUE(plan);
        EXPECT_EQ(plan->share[1], 1.0);
    }
}

TEST(IntraSmAllocate, FeasibilityIsSymmetric) {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> pick_frac(0, 10);
    DeviceSpec d;
    d.num_sms = 15;
    d.max_blocks_per_sm = 16;
    int feasible = 0;
    for (int trial = 0; trial < 5000; ++trial) {
        // Coarse grid so saturated resources (1.0) and zeros show up often.
        auto f = [&] { return pick_frac(rng) / 10.0; };
        auto a = make_profile("a", Algorithm::GEMM, f(), f(), f(), f(), f(), f(), 1);
        auto b = make_profile("b", Algorithm::FFT, f(), f(), f(), f(), f(), f(), 1);
        for (auto g : {Granularity::continuous, Granularity::quantized}) {
            const bool ab = intra_sm_allocate(a, b, d, g).has_value();
            const bool ba = intra_sm_allocate(b, a, d, g).has_value();
            EXPECT_EQ(ab, ba);
            feasible += ab;
        }
    }
    EXPECT_GT(feasible, 0);
}

TEST(IntraSmAllocate, SaturatedResourceBlocksCoRunner) {
    DeviceSpec d;
    d.max_blocks_per_sm = 16;
    auto full = make_profile("a", Algorithm::GEMM, 1.0, 0.1, 0.1, 0.1, 0.5, 0.1, 1);
    auto other = make_profile("b", Algorithm::FFT, 0.5, 0.1, 0.1, 0.1, 0.5, 0.1, 1);
    EXPECT_FALSE(intra_sm_allocate(full, other, d, Granularity::continuous));
    EXPECT_FALSE(intra_sm_allocate(other, full, d, Granularity::continuous));
}

TEST(InterSmPartition, EqualKernels) {
    DeviceSpec d;
    d.num_sms = 15;
    auto a = make_profile("a", Algorithm::GEMM, 0.5, 0.5, 0.5, 0.5, 0.5, 0.1, 10);
    auto b = make_profile("b", Algorithm::GEMM, 0.5, 0.5, 0.5, 0.5, 0.5, 0.1, 10);
    double brute = 1e300;
    for (int na = 1; na < 15; ++na) brute = std::min(brute, std::max(150.0 / na, 150.0 / (15 - na)));
    const auto r = inter_sm_partition(a, b, d);
    EXPECT_EQ(r.plan.sms[0], 8);
    EXPECT_EQ(r.plan.sms[1], 7);
    EXPECT_NEAR(r.outcome.makespan_ms, brute, 1e-12);
    EXPECT_NEAR(r.outcome.makespan_ms, 150.0 / 7.0, 1e-12);
    EXPECT_GT(r.outcome.makespan_ms, 20.0);  // worse than running serially
}

TEST(InterSmPartition, UnequalKernels) {
    DeviceSpec d;
    d.num_sms = 15;
    auto a = make_profile("a", Algorithm::GEMM, 0.5, 0.5, 0.5, 0.5, 0.5, 0.1, 10);
    auto b = make_profile("b", Algorithm::GEMM, 0.5, 0.5, 0.5, 0.5, 0.5, 0.1, 2);
    double brute = 1e300;
    int best = 0;
    for (int na = 1; na < 15; ++na) {
        const double m = std::max(150.0 / na, 30.0 / (15 - na));
        if (m < brute) brute = m, best = na;
    }
    const auto r = inter_sm_partition(a, b, d);
    EXPECT_EQ(r.plan.sms[0], best);
    EXPECT_EQ(r.plan.sms[0], 12);
    EXPECT_NEAR(r.outcome.makespan_ms, brute, 1e-12);
    // And with the longer kernel second the split mirrors.
    const auto m = inter_sm_partition(b, a, d);
    EXPECT_EQ(m.plan.sms[1], 12);
}

TEST(InterSmPartition, TwoSmsForced) {
    DeviceSpec d;
    d.num_sms = 2;
    auto a = make_profile("a", Algorithm::GEMM, 0.5, 0.5, 0.5, 0.5, 0.5, 0.1, 3);
    const auto r = inter_sm_partition(a, a, d);
    EXPECT_EQ(r.plan.sms[0], 1);
    EXPECT_EQ(r.plan.sms[1], 1);
    d.num_sms = 1;
    EXPECT_THROW(inter_sm_partition(a, a, d), ValidationError);
}

TEST(CorunSimulate, SoloIdentity) {
    DeviceSpec d;
    auto a = make_profile("a", Algorithm::GEMM, 0.5, 0.5, 0.5, 0.5, 0.9, 0.7, 7.3);
    const std::array<CoRunKernel, 1> ks{CoRunKernel{&a, 1.0}};
    for (auto mode : {CoRunMode::intra, CoRunMode::inter}) {
        const auto out = corun_simulate(ks, mode, d);
        EXPECT_EQ(out.finish_time_ms[0], 7.3);
        EXPECT_EQ(out.makespan_ms, 7.3);
    }
}

TEST(CorunSimulate, ComplementaryPairFullOverlap) {
    DeviceSpec d;
    auto a = make_profile("a", Algorithm::GEMM, 0.4, 0.4, 0.4, 0.4, 0.5, 0.3, 10);
    auto b = make_profile("b", Algorithm::FFT, 0.4, 0.4, 0.4, 0.4, 0.5, 0.3, 10);
    const std::array<CoRunKernel, 2> ks{CoRunKernel{&a, 1.0}, CoRunKernel{&b, 1.0}};
    const auto out = corun_simulate(ks, CoRunMode::intra, d);
    EXPECT_DOUBLE_EQ(out.finish_time_ms[0], 10.0);
    EXPECT_DOUBLE_EQ(out.finish_time_ms[1], 10.0);
    EXPECT_DOUBLE_EQ(out.makespan_ms, 10.0);
    ASSERT_EQ(out.segments.size(), 1u);
}

TEST(CorunSimulate, ComputeContention) {
    DeviceSpec d;
    // ALU sum 1.6 -> f = 1/1.6, both finish at 16 ms.
    auto a = make_profile("a", Algorithm::GEMM, 0.4, 0.4, 0.4, 0.4, 0.8, 0.1, 10);
    const std::array<CoRunKernel, 2> ks{CoRunKernel{&a, 1.0}, CoRunKernel{&a, 1.0}};
    const auto out = corun_simulate(ks, CoRunMode::intra, d);
    EXPECT_NEAR(out.makespan_ms, 16.0, 1e-12);
    EXPECT_EQ(out.segments[0].binding, Binding::compute);
    EXPECT_NEAR(out.segments[0].contention, 1 / 1.6, 1e-15);
}

TEST(CorunSimulate, RejectsInfeasibleAllocation) {
    DeviceSpec d;
    d.max_blocks_per_sm = 16;
    auto a = make_profile("a", Algorithm::GEMM, 0.7, 0.4, 0.4, 0.44, 0.5, 0.1, 10);
    const std::array<CoRunKernel, 2> ks{CoRunKernel{&a, 1.0}, CoRunKernel{&a, 1.0}};
    EXPECT_THROW(corun_simulate(ks, CoRunMode::intra, d), ValidationError);
    EXPECT_THROW(corun_simulate(ks, CoRunMode::inter, d), ValidationError);
    const std::array<CoRunKernel, 3> three{CoRunKernel{&a, 0.1}, CoRunKernel{&a, 0.1}, CoRunKernel{&a, 0.1}};
    EXPECT_THROW(corun_simulate(three, CoRunMode::intra, d), ValidationError);
    const std::array<CoRunKernel, 1> zero{CoRunKernel{&a, 0.0}};
    EXPECT_THROW(corun_simulate(zero, CoRunMode::intra, d), ValidationError);
    const std::array<CoRunKernel, 2> half{CoRunKernel{&a, 1.0}, CoRunKernel{&a, 0.5}};
    // 0.5 of a 7-block kernel is not a whole number of blocks.
    EXPECT_THROW(corun_simulate(half, CoRunMode::intra, d, 1.0, Granularity::quantized), ValidationError);
}

TEST(CorunSimulate, OverlapDominance) {
    std::mt19937_64 rng(5);
    DeviceSpec d;
    d.max_blocks_per_sm = 16;
    int checked = 0;
    for (int trial = 0; trial < 3000; ++trial) {
        auto a = testing::random_profile(rng, "a", Algorithm::GEMM);
        auto b = testing::random_profile(rng, "b", Algorithm::FFT);
        auto plan = intra_sm_allocate(a, b, d, Granularity::continuous);
        if (!plan) continue;
        const auto out = simulate_plan(a, b, *plan, d);
        bool uncontended = true;
        for (const auto& s : out.segments) uncontended = uncontended && s.contention == 1.0;
        if (!uncontended) continue;
        ++checked;
        EXPECT_LT(out.makespan_ms, a.solo_runtime_ms + b.solo_runtime_ms);
        const double beta = plan->share[1];
        const double ta = a.solo_runtime_ms;
        const double tb = b.solo_runtime_ms;
        const double expect = beta * ta < tb ? ta + tb - beta * ta : std::max(ta, tb / beta);
        EXPECT_NEAR(out.makespan_ms, expect, 1e-9 * expect);
    }
    EXPECT_GT(checked, 100);
}

TEST(PairCensus, InceptionFlagshipPair) {
    const ProfileDb db(testing::bundled_profiles());
    const auto g = testing::bundled_graph("inception1");
    const auto entries = pair_census(db, g, testing::bundled_device());
    ASSERT_EQ(entries.size(), 1u);
    EXPECT_EQ(entries[0].op_a, "incep1_3x3");
    EXPECT_EQ(entries[0].op_b, "incep1_5x5");
    EXPECT_DOUBLE_EQ(entries[0].serial_ms, 18.0);
    bool flagship = false;
    for (const auto& c : entries[0].candidates) {
        EXPECT_LT(c.makespan_ms, entries[0].serial_ms);
        EXPECT_GT(c.speedup, 1.0);
        flagship = flagship || (c.algorithm_a == Algorithm::PRECOMP_GEMM && c.algorithm_b == Algorithm::FFT_TILING);
    }
    EXPECT_TRUE(flagship);
    for (std::size_t i = 1; i < entries[0].candidates.size(); ++i) {
        EXPECT_GE(entries[0].candidates[i - 1].speedup, entries[0].candidates[i].speedup);
    }
}

TEST(PairCensus, NoPairsOnChainsOrSingletons) {
    const ProfileDb db(testing::bundled_profiles());
    EXPECT_TRUE(pair_census(db, testing::bundled_graph("alexnet_linear"), testing::bundled_device()).empty());
    EXPECT_TRUE(pair_census(db, testing::bundled_graph("incep3_5x5_single"), testing::bundled_device()).empty());
}

TEST(PairCensus, MissingProfilesIsAnError) {
    const ProfileDb db(testing::bundled_profiles());
    NetworkGraph g("g", {Op{"nope", OpKind::conv, 0, "", 0.0}}, {});
    EXPECT_THROW(pair_census(db, g, testing::bundled_device()), ValidationError);
}

}  // namespace
}  // namespace convsched
