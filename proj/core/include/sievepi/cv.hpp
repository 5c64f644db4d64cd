#pragma once

#include <functional>

#include "sievepi/folds.hpp"
#include "sievepi/loss.hpp"

namespace sievepi {

/// A training procedure: fits on any subsample and returns an evaluable fit.
using Fitter = std::function<FittedFunctionPtr(const Sample&)>;

/// Average over folds of the held-out empirical risk (average of per-fold
/// mean risks, not pooled over observations). A fitter failure on a fold is
/// rethrown with the fold index attached.
double cv_risk(const Fitter& fitter, const Loss& loss, const Sample& s, const FoldPlan& plan);

}  // namespace sievepi
