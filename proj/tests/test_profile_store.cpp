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

#include <random>
#include <sstream>

#include "gtest/gtest.h"

#include "convsched/profile_store.hpp"
#include "test_support.hpp"

namespace convsched {
namespace {

const std::string kHeader =
    "op_id,algorithm,kernel_name,reg_frac,shm_frac,thread_frac,block_frac,alu_util,mem_stall_frac,dram_util,"
    "workspace_bytes,solo_runtime_ms\n";

std::vector<KernelProfile> parse(const std::string& text) {
    std::istringstream in(text);
    return load_profiles(in, "t.csv");
}

TEST(LoadProfiles, BundledFlagshipRow) {
    auto ps = parse(kHeader + "incep1_3x3,PRECOMP_GEMM,implicit_convolve_sgemm,0.92,0.39,0.38,0.19,0.70,0.0047,,0,10\n");
    ASSERT_EQ(ps.size(), 1u);
    const auto& p = ps[0];
    EXPECT_EQ(p.op_id, "incep1_3x3");
    EXPECT_EQ(p.algorithm, Algorithm::PRECOMP_GEMM);
    EXPECT_EQ(p.kernel_name, "implicit_convolve_sgemm");
    EXPECT_DOUBLE_EQ(p.reg_frac, 0.92);
    EXPECT_DOUBLE_EQ(p.shm_frac, 0.39);
    EXPECT_DOUBLE_EQ(p.thread_frac, 0.38);
    EXPECT_DOUBLE_EQ(p.block_frac, 0.19);
    EXPECT_DOUBLE_EQ(p.alu_util, 0.70);
    EXPECT_DOUBLE_EQ(p.mem_stall_frac, 0.0047);
    // Empty dram cell falls back to the stall fraction.
    EXPECT_DOUBLE_EQ(p.dram_util, 0.0047);
}

TEST(LoadProfiles, HeaderOnlyIsEmpty) { EXPECT_TRUE(parse(kHeader).empty()); }

TEST(LoadProfiles, OutOfRangeNamesRowAndField) {
    try {
        parse(kHeader + "x,GEMM,k,1.2,0.1,0.1,0.1,0.1,0.1,,0,1\n");
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
        EXPECT_NE(msg.find("reg_frac"), std::string::npos) << msg;
    }
}

TEST(LoadProfiles, DramColumnMayBeAbsent) {
    auto ps = parse(
        "op_id,algorithm,kernel_name,reg_frac,shm_frac,thread_frac,block_frac,alu_util,mem_stall_frac,"
        "workspace_bytes,solo_runtime_ms\n"
        "x,FFT,k,0.1,0.2,0.3,0.4,0.5,0.152,7,2.5\n");
    ASSERT_EQ(ps.size(), 1u);
    EXPECT_DOUBLE_EQ(ps[0].dram_util, 0.152);
    EXPECT_EQ(ps[0].workspace_bytes, 7u);
}

TEST(LoadProfiles, ExplicitDramOverridesDefault) {
    auto ps = parse(kHeader + "x,FFT,k,0.1,0.2,0.3,0.4,0.5,0.1,0.45,0,1\n");
    EXPECT_DOUBLE_EQ(ps[0].dram_util, 0.45);
}

TEST(LoadProfiles, PercentUnitFlag) {
    auto ps = parse("# units=percent\n" + kHeader +
                    "incep1_3x3,PRECOMP_GEMM,implicit_convolve_sgemm,92,39,38,19,70,0.47,,0,10\n");
    EXPECT_DOUBLE_EQ(ps[0].reg_frac, 0.92);
    EXPECT_DOUBLE_EQ(ps[0].mem_stall_frac, 0.0047);
    // Without the flag the same magnitudes are rejected, never rescaled.
    EXPECT_THROW(parse(kHeader + "incep1_3x3,PRECOMP_GEMM,k,92,39,38,19,70,0.47,,0,10\n"), ValidationError);
}

TEST(LoadProfiles, Errors) {
    EXPECT_THROW(parse("op_id,algorithm\nx,GEMM\n"), ValidationError);               // missing columns
    EXPECT_THROW(parse(kHeader + "x,GEMM,k,0.1,0.1,0.1,0.1,0.1,0.1,,0,0\n"), ValidationError);  // runtime 0
    EXPECT_THROW(parse(kHeader + "x,GEMM,k,0.1,0.1,0.1,0.1,0.1,0.1,,0,-3\n"), ValidationError);
    EXPECT_THROW(parse(kHeader + "x,GEMM,k,0.1,0.1,0.1,0.1,0.1,0.1,,0,1\n"
                                 "x,GEMM,k2,0.1,0.1,0.1,0.1,0.1,0.1,,0,2\n"),
                 ValidationError);  // duplicate (op, alg)
    EXPECT_THROW(parse(kHeader + "x,SOMETHING,k,0.1,0.1,0.1,0.1,0.1,0.1,,0,1\n"), ValidationError);
    EXPECT_THROW(parse(kHeader + "x,GEMM,k,0.1,0.1,0.1,0.1,0.1,0.1,,1.5e9,1\n"), ValidationError);  // bytes only
    EXPECT_THROW(parse(kHeader + "x,GEMM,k,0.1,0.1\n"), ValidationError);
    EXPECT_THROW(parse(""), ValidationError);
}

TEST(LoadProfiles, BundledFileLoads) {
    const auto ps = testing::bundled_profiles();
    EXPECT_EQ(ps.size(), 10u);
    const ProfileDb db(ps);
    EXPECT_EQ(db.menu("incep3_5x5").entries.size(), 6u);
    EXPECT_EQ(db.menu("incep1_3x3").entries.size(), 2u);
}

TEST(LoadProfiles, RoundTripIsFieldIdentical) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<KernelProfile> ps;
        for (int i = 0; i < 8; ++i) {
            auto p = testing::random_profile(rng, "op" + std::to_string(i), kAlgorithmNames[i % 8].first);
            p.kernel_name = i % 3 == 0 ? "name, with \"comma\"" : "plain_kernel";
            p.workspace_bytes = rng() >> 20;
            ps.push_back(p);
        }
        std::ostringstream out;
        serialize_profiles(out, ps);
        std::istringstream in(out.str());
        EXPECT_EQ(load_profiles(in), ps);
    }
}

TEST(ProfileDb, RejectsDuplicatesAndRange) {
    auto p = testing::make_profile("x", Algorithm::FFT, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 1.0);
    EXPECT_THROW(ProfileDb({p, p}), ValidationError);
    p.alu_util = -0.1;
    EXPECT_THROW(ProfileDb({p}), ValidationError);
}

TEST(LoadDevice, ValidAndDegenerate) {
    std::istringstream k40(R"({"num_sms": 15, "max_blocks_per_sm": 16, "global_mem_bytes": 12000000000})");
    const auto d = load_device(k40);
    EXPECT_EQ(d.num_sms, 15);
    EXPECT_EQ(d.max_blocks_per_sm, 16);
    EXPECT_EQ(d.global_mem_bytes, 12000000000u);
    EXPECT_EQ(DeviceSpec::reg_capacity, 1.0);
    EXPECT_EQ(DeviceSpec::shm_capacity, 1.0);
    EXPECT_EQ(DeviceSpec::thread_capacity, 1.0);

    std::istringstream tiny(R"({"num_sms": 1, "max_blocks_per_sm": 1, "global_mem_bytes": 1})");
    EXPECT_EQ(load_device(tiny).global_mem_bytes, 1u);

    std::istringstream sci(R"({"num_sms": 15, "max_blocks_per_sm": 16, "global_mem_bytes": 12e9})");
    EXPECT_EQ(load_device(sci).global_mem_bytes, 12000000000u);
}

TEST(LoadDevice, Errors) {
    for (const char* text : {
             R"({"num_sms": 0, "max_blocks_per_sm": 16, "global_mem_bytes": 1})",
             R"({"num_sms": 15, "max_blocks_per_sm": -1, "global_mem_bytes": 1})",
             R"({"num_sms": 15, "max_blocks_per_sm": 16})",
             R"({"num_sms": 15.5, "max_blocks_per_sm": 16, "global_mem_bytes": 1})",
             R"([1, 2])",
             R"({not json)",
         }) {
        std::istringstream in(text);
        EXPECT_THROW(load_device(in), ValidationError) << text;
    }
}

AlgorithmMenu bundled_menu() { return ProfileDb(testing::bundled_profiles()).menu("incep3_5x5"); }

TEST(CompareAlgorithms, FftVsWinogradNonfused) {
    const auto c = compare_algorithms(bundled_menu(), Algorithm::FFT, Algorithm::WINOGRAD_NONFUSED);
    EXPECT_EQ(c.faster, Side::first);
    EXPECT_NEAR(c.runtime_delta_frac, 10.0 / 46.0, 1e-15);
    EXPECT_NEAR(c.runtime_delta_frac, 0.217, 0.001);
    EXPECT_EQ(c.larger_workspace, Side::first);
    EXPECT_EQ(c.workspace_delta_bytes, 1509000000u);
    EXPECT_NEAR(c.workspace_delta_frac, 0.686, 0.001);
}

TEST(CompareAlgorithms, IdentityIsZero) {
    const auto c = compare_algorithms(bundled_menu(), Algorithm::GEMM, Algorithm::GEMM);
    EXPECT_EQ(c.faster, Side::tie);
    EXPECT_EQ(c.larger_workspace, Side::tie);
    EXPECT_EQ(c.runtime_delta_frac, 0.0);
    EXPECT_EQ(c.workspace_delta_bytes, 0u);
    EXPECT_EQ(c.workspace_delta_frac, 0.0);
}

TEST(CompareAlgorithms, GemmVsImplicitGemm) {
    // By hand: (59 - 58) / 59 = 0.016949..., 48 KB - 0 = 48000 bytes.
    const auto c = compare_algorithms(bundled_menu(), Algorithm::GEMM, Algorithm::IMPLICIT_GEMM);
    EXPECT_EQ(c.faster, Side::first);
    EXPECT_NEAR(c.runtime_delta_frac, 0.0169, 1e-4);
    EXPECT_EQ(c.larger_workspace, Side::second);
    EXPECT_EQ(c.workspace_delta_bytes, 48000u);
    EXPECT_DOUBLE_EQ(c.workspace_delta_frac, 1.0);
}

TEST(CompareAlgorithms, SymmetricMagnitudesFlippedFlags) {
    const auto menu = bundled_menu();
    for (const auto& x : menu.entries) {
        for (const auto& y : menu.entries) {
            const auto ab = compare_algorithms(menu, x.algorithm, y.algorithm);
            const auto ba = compare_algorithms(menu, y.algorithm, x.algorithm);
            EXPECT_EQ(ab.runtime_delta_frac, ba.runtime_delta_frac);
            EXPECT_EQ(ab.workspace_delta_bytes, ba.workspace_delta_bytes);
            EXPECT_EQ(ab.workspace_delta_frac, ba.workspace_delta_frac);
            auto flip = [](Side s) { return s == Side::first ? Side::second : s == Side::second ? Side::first : s; };
            EXPECT_EQ(ab.faster, flip(ba.faster));
            EXPECT_EQ(ab.larger_workspace, flip(ba.larger_workspace));
        }
    }
}

TEST(CompareAlgorithms, AbsentAlgorithm) {
    EXPECT_THROW(compare_algorithms(bundled_menu(), Algorithm::FFT, Algorithm::DIRECT), ValidationError);
}

}  // namespace
}  // namespace convsched
