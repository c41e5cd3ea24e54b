/*
 * Copyright 2026 The mumimo-sched Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mumimo {

using Complex = std::complex<double>;

/// Every stochastic operation takes one of these explicitly; nothing in the
/// library owns hidden global random state.
using RandomStream = std::mt19937_64;

/// Invalid parameters or configuration (bad K, AR(1) coefficient >= 1, ...).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A theorem's hypothesis does not hold for the supplied parameters.
class HypothesisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Fixed-width accumulator would overflow.
class OverflowError : public std::overflow_error {
public:
    using std::overflow_error::overflow_error;
};

/// Not enough data to produce an estimate.
class InsufficientDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLn2 = 0.69314718055994530942;

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a(std::string_view text) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Seed for replication `replication` of sweep point `axis_value`:
///   mix64(mix64(mix64(master) ^ fnv1a(axis_value)) + replication)
/// The axis value is hashed in its textual form so the rule does not depend
/// on how a number happens to be typed.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view axis_value,
                                    std::uint64_t replication) noexcept
{
    return mix64(mix64(mix64(master) ^ fnv1a(axis_value)) + replication);
}

/// Independent sub-stream `tag` of a run seed (channel, beams, arrivals, ...).
inline RandomStream substream(std::uint64_t seed, std::uint64_t tag)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(mix64(tag))};
    return RandomStream(seq);
}

} // namespace mumimo
