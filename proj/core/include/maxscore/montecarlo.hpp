#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "maxscore/common.hpp"
#include "maxscore/inference.hpp"
#include "maxscore/sample.hpp"
#include "maxscore/teststat.hpp"

namespace maxscore {

// Error designs: unit-variance logistic, uniform on [-sqrt(3), sqrt(3)],
// Student t rescaled to unit variance, and a heteroskedastic logistic with
// scale 0.25 (1 + 2 z^2 + z^4), z = x1 + x2.
enum class Design { logistic = 1, uniform = 2, student_t = 3, hetero = 4 };

struct DgpSpec {
    Design design = Design::logistic;
    double theta0 = 1.0;
    int n = 100;
    std::uint64_t seed = 0;
    int df = 3; // student_t only

    void validate() const;
    Eigen::VectorXd beta() const; // (1, theta0)
};

// Covariates: x1 standard normal, x2 normal with mean 1, independent.
Eigen::MatrixXd gen_x(int n, std::uint64_t seed);

// One error vector; draws depend only on (spec, x, seed).
Eigen::VectorXd gen_u(const DgpSpec& spec, const Eigen::MatrixXd& x, std::uint64_t seed);

// p_i = P(x_i . beta + u_i >= 0 | x) in closed form.
CondProbs true_cond_probs(const DgpSpec& spec, const Eigen::MatrixXd& x);

struct McConfig {
    std::vector<double> thetas; // ascending; used on both sign branches
    int reps = 500;
    double alpha = 0.10;
    double epsilon = kDefaultEpsilon;
    int rad_draws = 500;     // critical-value simulation budget
    int lrt_mc_draws = 20000; // LRT calibration budget past the exact range
    int lrt_exact_limit = 20;

    void validate() const;
};

McConfig default_mc_config(double theta0);

struct McRow {
    int sign_branch;
    double theta;
    double nonrej_proposed;
    double nonrej_lrt;
    int fsid_member;
};

// Population diagnostics for the row's sign-pattern cell.
struct McRowDiag {
    double q_quantile;
    double q_total;
    double c_gamma_090;
    double bound_cor1;
    double bound_cor2;
};

struct McResult {
    DgpSpec dgp;
    int reps;
    double alpha;
    std::vector<McRow> rows;      // +1 branch block, then -1, theta ascending
    std::vector<McRowDiag> diag;  // aligned with rows

    std::string to_csv() const;
};

// Draws x once, then evaluates the moment test and the infeasible
// randomized likelihood-ratio benchmark at every (branch, theta) over
// `reps` outcome replications. One simulated sign matrix is shared by the
// whole grid; replication r derives its errors from seed xor r.
McResult run_experiment(const DgpSpec& spec, const McConfig& config, int threads = 1);

} // namespace maxscore
