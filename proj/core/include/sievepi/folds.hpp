#pragma once

#include <cstdint>
#include <vector>

namespace sievepi {

/// Deterministic k-fold partition. Indices are shuffled with the
/// platform-stable generator in rng.hpp, then dealt round-robin, so fold
/// sizes differ by at most one and assignments reproduce from the seed.
struct FoldPlan {
    int k = 0;
    std::vector<int> assignments;  // per-row fold index in [0, k)
    std::uint64_t seed = 0;

    std::vector<int> train_indices(int fold) const;
    std::vector<int> test_indices(int fold) const;
};

/// Requires 2 <= k <= n; throws ConfigError otherwise.
FoldPlan make_folds(int n, int k, std::uint64_t seed);

}  // namespace sievepi
