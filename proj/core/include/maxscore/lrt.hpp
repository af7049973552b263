#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "maxscore/common.hpp"
#include "maxscore/sample.hpp"

namespace maxscore {

enum class LrtMode { randomized, nonrandomized };

// Simple-vs-simple benchmark: null probabilities p_null against alternative
// p_alt. Indices with p_null_i = p_alt_i contribute exactly zero to the
// log likelihood ratio and are skipped throughout.
struct LrtSpec {
    CondProbs p_null;
    CondProbs p_alt;
    double alpha = 0.10;
    LrtMode mode = LrtMode::nonrandomized;
    int exact_limit = 20; // max contributing indices for exact calibration
    int mc_draws = 20000; // calibration/power budget beyond that
    std::uint64_t seed = 0;

    LrtSpec(CondProbs null_, CondProbs alt_);
};

// Null probabilities maximizing rejection against p_alt among those
// compatible with candidate b: pinned to 1/2 where the candidate-side
// constraint binds against the alternative, p_alt elsewhere.
CondProbs least_favorable(const CondProbs& p_alt, const Eigen::MatrixXd& x, const ParamPoint& b);

// Log likelihood ratio log [ p_alt(y) / p_null(y) ]. -inf marks outcomes
// impossible under the alternative (never rejected); +inf outcomes
// impossible only under the null (always rejected).
double lr_statistic(const std::vector<int>& y, const LrtSpec& spec);

struct Calibration {
    double k;  // rejection threshold on the log scale
    double xi; // boundary randomization; 0 in nonrandomized mode
    int n_contributing;
    bool exact; // exact distribution vs Monte Carlo calibration
};

// Smallest k with P(lr > k | p_null) <= alpha; randomized mode adds the
// boundary weight xi so the size is exactly alpha.
Calibration calibrate(const LrtSpec& spec);

struct LrtDecision {
    double lambda;
    bool reject;
    bool boundary; // decision came from the randomized boundary draw
};

LrtDecision lrt_reject(const std::vector<int>& y, const LrtSpec& spec, const Calibration& cal,
                       std::uint64_t aux_seed);

// Rejection probability when outcomes follow p_true (exact when the
// contributing count permits, Monte Carlo otherwise).
double lrt_power(const CondProbs& p_true, const LrtSpec& spec, const Calibration& cal);

namespace lrtdetail {

struct Atom {
    double value;
    double prob;
};

// Distribution of sum_i [y_i ? l1_i : l0_i] with independent y_i ~
// Bernoulli(prob_i); atoms within merge_tol collapse onto the run minimum.
std::vector<Atom> lr_distribution(const std::vector<double>& l1, const std::vector<double>& l0,
                                  const std::vector<double>& probs, double merge_tol);

inline bool values_equal(double a, double b) { return a == b || std::abs(a - b) <= 1e-12; }
inline bool value_greater(double a, double b) { return a > b && !values_equal(a, b); }

} // namespace lrtdetail

} // namespace maxscore
