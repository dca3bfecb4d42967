#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace lla {

using Engine = std::mt19937_64;

// Independent stream keyed by (seed, keys...). Streams are derived through
// std::seed_seq, so the result depends only on the key tuple and never on
// which worker thread asks for it.
Engine make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

// Uniform draw on the open interval (0, 1) from 53 random bits.
double uniform_open(Engine& rng);

double standard_normal(Engine& rng);

}  // namespace lla
