#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

#include "spcl/core.hpp"

namespace spcl {

/// Samples tagged with a difficulty round 1..5. Each sample belongs to
/// exactly one round split.
template <class Sample>
struct StratifiedDataset {
    std::vector<Sample> samples;
    std::uint64_t seed = 0;

    std::size_t size() const noexcept { return samples.size(); }

    std::vector<std::size_t> split(int round) const {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < samples.size(); ++i)
            if (samples[i].round == round) idx.push_back(i);
        return idx;
    }

    std::map<int, std::size_t> counts() const {
        std::map<int, std::size_t> c;
        for (const auto& s : samples) ++c[s.round];
        return c;
    }

    std::vector<int> rounds() const {
        std::vector<int> r;
        r.reserve(samples.size());
        for (const auto& s : samples) r.push_back(s.round);
        return r;
    }

    bool operator==(const StratifiedDataset&) const = default;
};

}  // namespace spcl
