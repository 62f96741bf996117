#pragma once

#include <cstdint>

#include <boost/random/chi_squared_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>

namespace coint {

/// SplitMix64 finalizer; used to turn (master, index) pairs into stream seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed of replication `index` within `stream` under `master`. Independent of
/// the order in which replications are executed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, std::uint64_t stream = 0);

/// Per-replication random stream. Not shared between threads.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double normal() { return normal_(engine_); }

    double chi_squared(double dof) {
        boost::random::chi_squared_distribution<double> chi(dof);
        return chi(engine_);
    }

private:
    boost::random::mt19937_64 engine_;
    boost::random::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace coint
