#include "sievepi/folds.hpp"

#include <numeric>

#include "sievepi/errors.hpp"
#include "sievepi/rng.hpp"

namespace sievepi {

std::vector<int> FoldPlan::train_indices(int fold) const {
    std::vector<int> idx;
    idx.reserve(assignments.size());
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] != fold) idx.push_back(static_cast<int>(i));
    return idx;
}

std::vector<int> FoldPlan::test_indices(int fold) const {
    std::vector<int> idx;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] == fold) idx.push_back(static_cast<int>(i));
    return idx;
}

FoldPlan make_folds(int n, int k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("fold count must be at least 2, got " + std::to_string(k));
    if (k > n)
        throw ConfigError("fold count " + std::to_string(k) + " exceeds sample size " +
                          std::to_string(n));
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);

    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.assignments.assign(n, 0);
    for (int i = 0; i < n; ++i) plan.assignments[order[i]] = i % k;
    return plan;
}

}  // namespace sievepi
