#include "maxscore/teststat.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "maxscore/parallel.hpp"
#include "maxscore/rng.hpp"

namespace maxscore {

void validate(const TestConfig& config) {
    if (!(config.alpha > 0.0 && config.alpha < 1.0))
        throw ValidationError("test config: alpha must be in (0,1)");
    if (!(config.epsilon > 0.0)) throw ValidationError("test config: epsilon must be positive");
    if (config.n_draws < 1) throw ValidationError("test config: n_draws >= 1 required");
}

namespace {

inline int popcount_and(const std::uint64_t* a, const std::uint64_t* b, int words) {
    int c = 0;
    for (int w = 0; w < words; ++w) c += std::popcount(a[w] & b[w]);
    return c;
}

// Studentized violation of one cell. signed_sum is the +/-1 sum over the
// cell in the upper-side orientation; the lower side flips it.
inline double studentized(double signed_sum, int count, int n, Side side, double eps) {
    const double nn = static_cast<double>(n);
    const double m = (side == Side::upper ? signed_sum : -signed_sum) / nn;
    return studentized_value(m, static_cast<double>(count) / nn, nn, eps);
}

} // namespace

double studentized_value(double m, double mass, double n, double eps) {
    const double var = mass - m * m;
    const double sd = std::sqrt(var > 0.0 ? var : 0.0);
    return std::sqrt(n) * (-m) / std::max(sd, eps);
}

double CellSet::statistic(std::span<const std::uint64_t> neg_bits, double eps, int* argmax) const {
    double best = 0.0;
    int best_cell = -1;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        const MomentCell& cell = cells[c];
        const int neg = popcount_and(cell.mask.data(), neg_bits.data(), words);
        const double signed_sum = static_cast<double>(cell.count - 2 * neg);
        const double val = studentized(signed_sum, cell.count, n, cell.side, eps);
        if (val > best) {
            best = val;
            best_cell = static_cast<int>(c);
        }
    }
    if (argmax) *argmax = best_cell;
    return best;
}

std::vector<MomentDiag> CellSet::diagnostics(std::span<const std::uint64_t> neg_bits,
                                             double eps) const {
    std::vector<MomentDiag> out;
    out.reserve(cells.size());
    const double nn = static_cast<double>(n);
    for (const MomentCell& cell : cells) {
        const int neg = popcount_and(cell.mask.data(), neg_bits.data(), words);
        const double signed_sum = static_cast<double>(cell.count - 2 * neg);
        const double m = (cell.side == Side::upper ? signed_sum : -signed_sum) / nn;
        const double mass = static_cast<double>(cell.count) / nn;
        const double var = mass - m * m;
        const double sd = std::sqrt(var > 0.0 ? var : 0.0);
        out.push_back({cell.side, cell.v_index, m, sd, studentized_value(m, mass, nn, eps)});
    }
    return out;
}

std::vector<DirectionBits> direction_bits(const Eigen::MatrixXd& x,
                                          const std::vector<Eigen::VectorXd>& dirs) {
    const int n = static_cast<int>(x.rows());
    const int words = (n + 63) / 64;
    std::vector<DirectionBits> out(dirs.size());
    for (std::size_t d = 0; d < dirs.size(); ++d) {
        if (dirs[d].size() != x.cols())
            throw ValidationError("instruments: direction dimension mismatch");
        out[d].neg.assign(static_cast<std::size_t>(words), 0);
        out[d].pos.assign(static_cast<std::size_t>(words), 0);
        for (int i = 0; i < n; ++i) {
            const double dot = x.row(i).dot(dirs[d]);
            if (dot < 0.0) out[d].neg[static_cast<std::size_t>(i / 64)] |= 1ULL << (i % 64);
            if (dot > 0.0) out[d].pos[static_cast<std::size_t>(i / 64)] |= 1ULL << (i % 64);
        }
    }
    return out;
}

CellSet build_cells(const Eigen::MatrixXd& x, const ParamPoint& b,
                    const std::vector<DirectionBits>& upper_bits,
                    const std::vector<DirectionBits>& lower_bits) {
    if (x.cols() != b.b.size())
        throw ValidationError("test statistic: covariate and coefficient dimensions differ");
    CellSet cs;
    cs.n = static_cast<int>(x.rows());
    cs.words = (cs.n + 63) / 64;

    std::vector<std::uint64_t> ub(static_cast<std::size_t>(cs.words), 0);
    std::vector<std::uint64_t> lb(static_cast<std::size_t>(cs.words), 0);
    for (int i = 0; i < cs.n; ++i) {
        const double dot = x.row(i).dot(b.b);
        if (dot >= 0.0) ub[static_cast<std::size_t>(i / 64)] |= 1ULL << (i % 64);
        if (dot <= 0.0) lb[static_cast<std::size_t>(i / 64)] |= 1ULL << (i % 64);
    }

    cs.cells.reserve(upper_bits.size() + lower_bits.size());
    auto add_cells = [&](const std::vector<DirectionBits>& bits, Side side,
                         const std::vector<std::uint64_t>& b_mask) {
        for (std::size_t d = 0; d < bits.size(); ++d) {
            MomentCell cell;
            cell.mask.resize(static_cast<std::size_t>(cs.words));
            int count = 0;
            const auto& dir_mask = side == Side::upper ? bits[d].neg : bits[d].pos;
            for (int w = 0; w < cs.words; ++w) {
                cell.mask[static_cast<std::size_t>(w)] =
                    b_mask[static_cast<std::size_t>(w)] & dir_mask[static_cast<std::size_t>(w)];
                count += std::popcount(cell.mask[static_cast<std::size_t>(w)]);
            }
            cell.count = count;
            cell.side = side;
            cell.v_index = static_cast<int>(d);
            cs.cells.push_back(std::move(cell));
        }
    };
    add_cells(upper_bits, Side::upper, ub);
    add_cells(lower_bits, Side::lower, lb);
    return cs;
}

CellSet build_cells(const Eigen::MatrixXd& x, const ParamPoint& b, const InstrumentSets& inst) {
    return build_cells(x, b, direction_bits(x, inst.v_upper), direction_bits(x, inst.v_lower));
}

std::vector<std::uint64_t> outcome_neg_bits(const std::vector<int>& y) {
    const int n = static_cast<int>(y.size());
    std::vector<std::uint64_t> bits(static_cast<std::size_t>((n + 63) / 64), 0);
    for (int i = 0; i < n; ++i)
        if (y[static_cast<std::size_t>(i)] == 0) bits[static_cast<std::size_t>(i / 64)] |= 1ULL << (i % 64);
    return bits;
}

double moment(const Sample& sample, const ParamPoint& b, const Eigen::VectorXd& v, Side side) {
    if (v.size() != sample.x.cols())
        throw ValidationError("moment: direction dimension mismatch");
    if (sample.x.cols() != b.b.size())
        throw ValidationError("moment: covariate and coefficient dimensions differ");
    double sum = 0.0;
    for (int i = 0; i < sample.n(); ++i) {
        const double xb = sample.x.row(i).dot(b.b);
        const double xv = sample.x.row(i).dot(v);
        const double sign = 2.0 * sample.y[static_cast<std::size_t>(i)] - 1.0;
        if (side == Side::upper) {
            if (xb >= 0.0 && xv < 0.0) sum += sign;
        } else {
            if (xb <= 0.0 && xv > 0.0) sum -= sign;
        }
    }
    return sum / static_cast<double>(sample.n());
}

double sigma(const Sample& sample, const ParamPoint& b, const Eigen::VectorXd& v, Side side) {
    if (v.size() != sample.x.cols())
        throw ValidationError("sigma: direction dimension mismatch");
    int count = 0;
    for (int i = 0; i < sample.n(); ++i) {
        const double xb = sample.x.row(i).dot(b.b);
        const double xv = sample.x.row(i).dot(v);
        if (side == Side::upper ? (xb >= 0.0 && xv < 0.0) : (xb <= 0.0 && xv > 0.0)) ++count;
    }
    const double m = moment(sample, b, v, side);
    const double var = static_cast<double>(count) / static_cast<double>(sample.n()) - m * m;
    return std::sqrt(var > 0.0 ? var : 0.0);
}

TStat t_statistic(const Sample& sample, const ParamPoint& b, const InstrumentSets& inst,
                  double epsilon) {
    const CellSet cs = build_cells(sample.x, b, inst);
    const auto bits = outcome_neg_bits(sample.y);
    TStat out;
    out.t = cs.statistic(bits, epsilon, &out.argmax_cell);
    out.diagnostics = cs.diagnostics(bits, epsilon);
    return out;
}

double quantile_from_values(std::vector<double>& values, double alpha) {
    std::sort(values.begin(), values.end());
    const double bn = static_cast<double>(values.size());
    const std::size_t k = static_cast<std::size_t>(std::ceil((1.0 - alpha) * bn));
    return values[std::max<std::size_t>(k, 1) - 1];
}

QuantileResult simulate_quantile(const Eigen::MatrixXd& x, const ParamPoint& b,
                                 const InstrumentSets& inst, const TestConfig& config,
                                 int threads) {
    validate(config);
    const CellSet cs = build_cells(x, b, inst);
    QuantileResult res;
    res.draws.resize(static_cast<std::size_t>(config.n_draws));
    parallel_for(static_cast<std::size_t>(config.n_draws), threads, [&](std::size_t r) {
        auto eng = substream(config.seed, static_cast<std::uint64_t>(r));
        const auto bits = rademacher_words(eng, cs.n);
        res.draws[r] = cs.statistic(bits, config.epsilon);
    });
    res.q = quantile_from_values(res.draws, config.alpha);
    return res;
}

QuantileResult quantile_for_sign_draws(const Eigen::MatrixXd& x, const ParamPoint& b,
                                       const InstrumentSets& inst,
                                       std::span<const std::vector<std::uint64_t>> sign_draws,
                                       double alpha, double epsilon) {
    if (sign_draws.empty()) throw ValidationError("quantile: at least one sign draw required");
    const CellSet cs = build_cells(x, b, inst);
    QuantileResult res;
    res.draws.resize(sign_draws.size());
    for (std::size_t r = 0; r < sign_draws.size(); ++r)
        res.draws[r] = cs.statistic(sign_draws[r], epsilon);
    res.q = quantile_from_values(res.draws, alpha);
    return res;
}

double exact_quantile(const Eigen::MatrixXd& x, const ParamPoint& b, const InstrumentSets& inst,
                      double alpha, double epsilon) {
    const int n = static_cast<int>(x.rows());
    if (n > 20) throw ValidationError("exact quantile: n <= 20 required for full enumeration");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("exact quantile: alpha must be in (0,1)");
    const CellSet cs = build_cells(x, b, inst);
    const std::uint64_t total = 1ULL << n;
    std::vector<double> values(static_cast<std::size_t>(total));
    for (std::uint64_t m = 0; m < total; ++m) {
        const std::uint64_t word = m;
        values[static_cast<std::size_t>(m)] = cs.statistic(std::span(&word, 1), epsilon);
    }
    return quantile_from_values(values, alpha);
}

TestOutcome run_test(const Sample& sample, const ParamPoint& b, const InstrumentSets& inst,
                     const TestConfig& config, int threads) {
    validate(config);
    const TStat ts = t_statistic(sample, b, inst, config.epsilon);
    const QuantileResult qr = simulate_quantile(sample.x, b, inst, config, threads);
    TestOutcome out;
    out.t_stat = ts.t;
    out.q = qr.q;
    out.reject = ts.t > qr.q;
    out.diagnostics = ts.diagnostics;
    if (ts.argmax_cell >= 0) {
        const MomentDiag& d = ts.diagnostics[static_cast<std::size_t>(ts.argmax_cell)];
        out.argmax_side = d.side;
        out.argmax_v = d.side == Side::upper ? inst.v_upper[static_cast<std::size_t>(d.v_index)]
                                             : inst.v_lower[static_cast<std::size_t>(d.v_index)];
    }
    return out;
}

} // namespace maxscore
