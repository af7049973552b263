#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "maxscore/common.hpp"
#include "maxscore/sample.hpp"

namespace maxscore {

// Per-observation covariate ratios z_i = x_i1 / x_i2 and their order
// statistics. x_i2 = 0 maps to +/-inf by the sign of x_i1, and to 0 when
// x_i1 = 0 as well.
struct RatioStats {
    std::vector<double> z;      // row order
    std::vector<double> sorted; // ascending, infinities participate
};

RatioStats ratio_stats(const Eigen::MatrixXd& x);

// Direction sets used to aggregate the two families of conditional moment
// inequalities. One direction per strict half-space pattern of the rows.
struct InstrumentSets {
    std::vector<Eigen::VectorXd> v_upper;
    std::vector<Eigen::VectorXd> v_lower;

    int k() const {
        if (!v_upper.empty()) return static_cast<int>(v_upper.front().size());
        if (!v_lower.empty()) return static_cast<int>(v_lower.front().size());
        return 0;
    }
};

// K = 2 exact construction: one direction (+1, t) per open interval cut by
// the negated ratio order statistics, one (-1, t) per interval cut by the
// ratios themselves. Zero-length intervals from duplicate ratios are
// skipped. The same set serves both inequality families.
InstrumentSets build_instruments_2d(const Eigen::MatrixXd& x);

// One strict inequality a . v > 0 (positive = true) or a . v < 0.
struct HalfSpace {
    Eigen::VectorXd a;
    bool positive;
};

struct FeasibleResult {
    bool feasible;
    double margin;       // optimal t of the max-margin program
    Eigen::VectorXd witness;
};

// Maximizes t subject to sign_j (a_j . v) >= t and |v_k| <= 1 with a dense
// simplex (Bland's rule). Feasible when the margin exceeds 1e-9.
FeasibleResult strict_feasible(const std::vector<HalfSpace>& constraints, int k);

// All full-dimensional sign cells of the central hyperplane arrangement
// {v : x_i . v = 0}, each with an interior witness. Incremental insertion
// in row order; output deterministic. Intended for small n*K.
struct CellEnumeration {
    std::vector<Eigen::VectorXd> witnesses;
    std::vector<std::vector<std::int8_t>> patterns; // strict signs per witness
};

CellEnumeration enumerate_cells(const Eigen::MatrixXd& x);

// Instrument sets from arrangement cell witnesses (any K >= 2).
InstrumentSets build_instruments_cells(const Eigen::MatrixXd& x);

// Dimension dispatch: the exact interval construction when K = 2, cell
// witnesses otherwise.
InstrumentSets build_instruments(const Eigen::MatrixXd& x);

// Max number of distinct half-space patterns of n points in general
// position in R^K: 2 * sum_{j<K} binom(n-1, j). Throws on overflow.
std::uint64_t cover_bound(int n, int k);

} // namespace maxscore
