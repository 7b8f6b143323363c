// SPDX-License-Identifier: Apache-2.0
//
// rsmimo: spectral-efficiency simulation of rate-splitting in TDD massive MIMO
// Copyright (C) 2026 the rsmimo authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace rsmimo {

using Complex = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

/// Invalid user-facing parameters (config files, call arguments).
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Numerical failure that must be surfaced, never silently repaired.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// dB / dBm conversions. All internal arithmetic is in linear milliwatt
// units; conversion happens once at the config boundary.
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double dbm_to_mw(double dbm) { return db_to_linear(dbm); }

constexpr double kPi = 3.14159265358979323846;
inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }

inline double log2_1p(double x) { return std::log1p(x) / std::log(2.0); }

/// splitmix64 step; used to derive independent per-setup seeds.
inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Seed for setup `index` under a campaign master seed.
inline std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index) {
    return splitmix64(master_seed + 0x9E3779B97F4A7C15ull * (index + 1));
}

using Rng = std::mt19937_64;

/// Standard complex Gaussian vector, CN(0, I).
inline CVec standard_complex_gaussian(int m, Rng& rng) {
    std::normal_distribution<double> n01(0.0, 1.0);
    CVec z(m);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int i = 0; i < m; ++i)
        z(i) = Complex(n01(rng) * inv_sqrt2, n01(rng) * inv_sqrt2);
    return z;
}

/// tr(A*B) for square matrices of equal size, without forming the product.
inline Complex trace_of_product(const CMat& a, const CMat& b) {
    return (a.transpose().cwiseProduct(b)).sum();
}

}  // namespace rsmimo
