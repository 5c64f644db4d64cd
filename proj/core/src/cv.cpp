#include "sievepi/cv.hpp"

#include <stdexcept>

#include "sievepi/errors.hpp"

namespace sievepi {

double cv_risk(const Fitter& fitter, const Loss& loss, const Sample& s, const FoldPlan& plan) {
    double total = 0.0;
    for (int fold = 0; fold < plan.k; ++fold) {
        const Sample train = s.subset(plan.train_indices(fold));
        const Sample test = s.subset(plan.test_indices(fold));
        FittedFunctionPtr fit;
        try {
            fit = fitter(train);
        } catch (const std::exception& e) {
            throw NumericError("fitter failed on fold " + std::to_string(fold) + ": " + e.what());
        }
        total += empirical_risk(*fit, loss, test);
    }
    return total / static_cast<double>(plan.k);
}

}  // namespace sievepi
