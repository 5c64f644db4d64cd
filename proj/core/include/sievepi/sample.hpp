#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

namespace sievepi {

/// Immutable tabular dataset of observations V_i = (X_i, Z_i), with an
/// optional binary treatment column A_i for treatment-arm problems.
struct Sample {
    Eigen::MatrixXd x;               // n x d covariates
    Eigen::VectorXd z;               // n outcomes
    std::optional<Eigen::VectorXi> a;  // n treatment indicators in {0,1}

    Eigen::Index n() const { return x.rows(); }
    Eigen::Index d() const { return x.cols(); }
    bool has_treatment() const { return a.has_value(); }

    /// Rows of this sample indexed by `idx` (used by CV fold splits).
    Sample subset(const std::vector<int>& idx) const;

    void validate() const;  // throws DataError on invariant violation
};

/// Reads a CSV with header columns x1..xd, z and optional a.
/// Locale-independent parsing; throws DataError with a line number on
/// malformed input.
Sample read_sample_csv(const std::string& path);

void write_sample_csv(const Sample& s, const std::string& path);

}  // namespace sievepi
