#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "maxscore/common.hpp"

namespace maxscore {

// One cross-section: binary outcomes y and an n-by-K covariate matrix.
// Row order is observation identity everywhere downstream.
struct Sample {
    Eigen::MatrixXd x;
    std::vector<int> y;

    Sample(Eigen::MatrixXd x_, std::vector<int> y_);

    int n() const { return static_cast<int>(x.rows()); }
    int k() const { return static_cast<int>(x.cols()); }
};

// Candidate coefficient vector.
struct ParamPoint {
    Eigen::VectorXd b;

    explicit ParamPoint(Eigen::VectorXd b_);

    int k() const { return static_cast<int>(b.size()); }
};

// Conditional outcome probabilities p_i = P(y_i = 1 | covariates).
struct CondProbs {
    Eigen::VectorXd p;

    explicit CondProbs(Eigen::VectorXd p_);

    int n() const { return static_cast<int>(p.size()); }
};

// Ternary signs s_i of the products x_i . b; zero only when the computed
// dot product is exactly 0.0.
struct SignPattern {
    std::vector<std::int8_t> s;

    int n() const { return static_cast<int>(s.size()); }
    // Indicators 1{x_i . b >= 0} and 1{x_i . b <= 0}.
    std::vector<int> r_upper() const;
    std::vector<int> r_lower() const;
};

SignPattern sign_pattern(const Eigen::MatrixXd& x, const ParamPoint& b);

// CSV with a header row naming one `y` column and covariate columns x1..xK
// (any column order). '.' decimal separator; errors name the offending line.
Sample load_sample(const std::string& path);

// Covariates-only variant: requires x1..xK, ignores a y column if present.
Eigen::MatrixXd load_covariates(const std::string& path);

// Single `p` column.
CondProbs load_cond_probs(const std::string& path);

} // namespace maxscore
