#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "maxscore/common.hpp"
#include "maxscore/instruments.hpp"
#include "maxscore/sample.hpp"

namespace maxscore {

inline constexpr double kDefaultEpsilon = std::numeric_limits<double>::epsilon();

struct TestConfig {
    double alpha = 0.10;
    double epsilon = kDefaultEpsilon; // denominator floor, stands in for +/-inf
    int n_draws = 500;
    std::uint64_t seed = 0;
};

void validate(const TestConfig& config);

// One aggregated moment: the observation subset where the candidate-side
// indicator and the instrument half-space indicator are both on.
struct MomentCell {
    std::vector<std::uint64_t> mask;
    int count;
    Side side;
    int v_index; // into InstrumentSets.v_upper / v_lower
};

struct MomentDiag {
    Side side;
    int v_index;
    double m_hat;
    double sigma_hat;
    double studentized;
};

// All moment cells for a fixed (x, b, instrument) triple. Sign vectors are
// packed as words with bit i set when the i-th sign is -1, so one popcount
// per cell evaluates a moment for outcomes and simulated signs alike.
struct CellSet {
    int n = 0;
    int words = 0;
    std::vector<MomentCell> cells;

    // max{0, sup studentized violation}; *argmax gets the attaining cell
    // index, or -1 when the outer max binds at zero.
    double statistic(std::span<const std::uint64_t> neg_bits, double eps,
                     int* argmax = nullptr) const;
    std::vector<MomentDiag> diagnostics(std::span<const std::uint64_t> neg_bits, double eps) const;
};

CellSet build_cells(const Eigen::MatrixXd& x, const ParamPoint& b, const InstrumentSets& inst);

// Half-space indicator bits of the instrument directions, reusable across
// candidates that share x.
struct DirectionBits {
    std::vector<std::uint64_t> neg; // x_i . v < 0
    std::vector<std::uint64_t> pos; // x_i . v > 0
};
std::vector<DirectionBits> direction_bits(const Eigen::MatrixXd& x,
                                          const std::vector<Eigen::VectorXd>& dirs);
CellSet build_cells(const Eigen::MatrixXd& x, const ParamPoint& b,
                    const std::vector<DirectionBits>& upper_bits,
                    const std::vector<DirectionBits>& lower_bits);

// bit i set when y_i = 0, i.e. 2 y_i - 1 = -1.
std::vector<std::uint64_t> outcome_neg_bits(const std::vector<int>& y);

// The map from a cell moment m and indicator frequency mass to the
// studentized violation sqrt(n) (-m) / max{eps, sqrt(max(0, mass - m^2))}.
// Nonincreasing in m for fixed mass; every statistic evaluation routes
// through here.
double studentized_value(double m, double mass, double n, double eps);

double moment(const Sample& sample, const ParamPoint& b, const Eigen::VectorXd& v, Side side);
double sigma(const Sample& sample, const ParamPoint& b, const Eigen::VectorXd& v, Side side);

struct TStat {
    double t;
    int argmax_cell; // -1 when no positive violation
    std::vector<MomentDiag> diagnostics;
};

TStat t_statistic(const Sample& sample, const ParamPoint& b, const InstrumentSets& inst,
                  double epsilon);

struct QuantileResult {
    double q;
    std::vector<double> draws; // ascending
};

// Smallest support value with distribution function >= 1 - alpha; the
// ceil((1-alpha) B)-th order statistic. Sorts in place.
double quantile_from_values(std::vector<double>& values, double alpha);

// B simulated-sign statistics; draw r depends only on (seed, r).
QuantileResult simulate_quantile(const Eigen::MatrixXd& x, const ParamPoint& b,
                                 const InstrumentSets& inst, const TestConfig& config,
                                 int threads = 1);

// Same statistic over caller-supplied packed sign draws.
QuantileResult quantile_for_sign_draws(const Eigen::MatrixXd& x, const ParamPoint& b,
                                       const InstrumentSets& inst,
                                       std::span<const std::vector<std::uint64_t>> sign_draws,
                                       double alpha, double epsilon);

// Full 2^n enumeration of sign vectors; refuses n > 20.
double exact_quantile(const Eigen::MatrixXd& x, const ParamPoint& b, const InstrumentSets& inst,
                      double alpha, double epsilon);

struct TestOutcome {
    double t_stat;
    double q;
    bool reject;
    std::optional<Side> argmax_side;
    std::optional<Eigen::VectorXd> argmax_v;
    std::vector<MomentDiag> diagnostics;
};

TestOutcome run_test(const Sample& sample, const ParamPoint& b, const InstrumentSets& inst,
                     const TestConfig& config, int threads = 1);

} // namespace maxscore
