#pragma once

#include <Eigen/Dense>
#include <vector>

#include "maxscore/common.hpp"
#include "maxscore/instruments.hpp"
#include "maxscore/sample.hpp"
#include "maxscore/teststat.hpp"

namespace maxscore {

// Candidate line b = (s, theta) with the first coefficient normalized to
// s in {-1, +1}.
struct ThetaGrid {
    int sign_branch = 1;
    std::vector<double> thetas;

    ThetaGrid() = default;
    ThetaGrid(int s, std::vector<double> t);

    ParamPoint point(std::size_t i) const;
};

ThetaGrid make_grid(int sign_branch, double lo, double hi, int points);

// Population analogue of the sample moment under probabilities p.
double population_moment(const CondProbs& p, const Eigen::MatrixXd& x, const ParamPoint& b,
                         const Eigen::VectorXd& v, Side side);

// Every aggregated population moment nonnegative on both sides.
bool in_identified_set(const CondProbs& p, const Eigen::MatrixXd& x, const ParamPoint& b,
                       const InstrumentSets& inst);

// Membership over a K = 2 grid; instruments built from x.
std::vector<int> identified_set_2d(const CondProbs& p, const Eigen::MatrixXd& x,
                                   const ThetaGrid& grid);

// Largest violation of the aggregated population inequalities.
struct ViolationQ {
    double q_upper;
    double q_lower;
    double q_total;
};

ViolationQ violation_q(const CondProbs& p, const Eigen::MatrixXd& x, const ParamPoint& b,
                       const InstrumentSets& inst);

// Violation size at which rejection probability at least gamma is
// guaranteed, given the simulated critical value.
double power_threshold(int n, double q_quantile, double epsilon, double gamma);

struct PowerBounds {
    double cor1; // best per-direction exponential bound
    double cor2; // bound driven by the overall violation q_total
};

PowerBounds power_lower_bound(const CondProbs& p, const Eigen::MatrixXd& x, const ParamPoint& b,
                              const InstrumentSets& inst, double q_quantile, double epsilon);

struct PowerReport {
    double q_upper;
    double q_lower;
    double q_total;
    double c_gamma;
    double bound_cor1;
    double bound_cor2;
};

PowerReport power_report(const CondProbs& p, const Eigen::MatrixXd& x, const ParamPoint& b,
                         const InstrumentSets& inst, double q_quantile, double epsilon,
                         double gamma);

struct InversionPoint {
    int sign_branch;
    double theta;
    double t_stat;
    double q;
    bool reject;
    int cell_id; // grid points sharing a sign pattern share a cell
};

struct InversionResult {
    std::vector<InversionPoint> points;
    int n_cells;
};

// Tests every grid point at level config.alpha. With shared_draws the one
// simulated sign matrix is reused across the grid, so decisions are
// constant within each sign-pattern cell; otherwise each point gets its
// own substream. K = 2 only.
InversionResult invert_test(const Sample& sample, const ThetaGrid& grid, const TestConfig& config,
                            bool shared_draws = true, int threads = 1);

} // namespace maxscore
