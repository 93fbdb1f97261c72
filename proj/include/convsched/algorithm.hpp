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

#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "convsched/error.hpp"

namespace convsched {

// Forward-convolution algorithms offered by cuDNN.
enum class Algorithm {
    GEMM,
    IMPLICIT_GEMM,
    PRECOMP_GEMM,
    WINOGRAD,
    WINOGRAD_NONFUSED,
    DIRECT,
    FFT,
    FFT_TILING,
};

inline constexpr std::array<std::pair<Algorithm, std::string_view>, 8> kAlgorithmNames{{
    {Algorithm::GEMM, "GEMM"},
    {Algorithm::IMPLICIT_GEMM, "IMPLICIT_GEMM"},
    {Algorithm::PRECOMP_GEMM, "PRECOMP_GEMM"},
    {Algorithm::WINOGRAD, "WINOGRAD"},
    {Algorithm::WINOGRAD_NONFUSED, "WINOGRAD_NONFUSED"},
    {Algorithm::DIRECT, "DIRECT"},
    {Algorithm::FFT, "FFT"},
    {Algorithm::FFT_TILING, "FFT_TILING"},
}};

constexpr std::string_view to_string(Algorithm a) {
    for (const auto& [alg, name] : kAlgorithmNames) {
        if (alg == a) return name;
    }
    return "UNKNOWN";
}

inline std::optional<Algorithm> parse_algorithm(std::string_view name) {
    for (const auto& [alg, n] : kAlgorithmNames) {
        if (n == name) return alg;
    }
    return std::nullopt;
}

inline Algorithm algorithm_from_string(std::string_view name) {
    if (auto a = parse_algorithm(name)) return *a;
    throw ValidationError("unknown algorithm '" + std::string(name) + "'");
}

// Tie-break order used by every scheduler: lexicographic on the name.
inline bool algorithm_name_less(Algorithm a, Algorithm b) {
    return to_string(a) < to_string(b);
}

}  // namespace convsched
