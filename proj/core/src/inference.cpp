#include "maxscore/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>

#include "maxscore/parallel.hpp"
#include "maxscore/rng.hpp"

namespace maxscore {

ThetaGrid::ThetaGrid(int s, std::vector<double> t) : sign_branch(s), thetas(std::move(t)) {
    if (sign_branch != 1 && sign_branch != -1)
        throw ValidationError("theta grid: sign branch must be +1 or -1");
    if (thetas.empty()) throw ValidationError("theta grid: at least one point required");
    for (std::size_t i = 0; i + 1 < thetas.size(); ++i)
        if (!(thetas[i] < thetas[i + 1]))
            throw ValidationError("theta grid: values must be strictly increasing");
    for (double t_ : thetas)
        if (!std::isfinite(t_)) throw ValidationError("theta grid: values must be finite");
}

ParamPoint ThetaGrid::point(std::size_t i) const {
    Eigen::VectorXd b(2);
    b << static_cast<double>(sign_branch), thetas[i];
    return ParamPoint(std::move(b));
}

ThetaGrid make_grid(int sign_branch, double lo, double hi, int points) {
    if (points < 1) throw ValidationError("theta grid: at least one point required");
    if (points == 1) {
        if (lo != hi) throw ValidationError("theta grid: single point needs lo == hi");
        return ThetaGrid(sign_branch, {lo});
    }
    if (!(lo < hi)) throw ValidationError("theta grid: lo < hi required");
    std::vector<double> t(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i)
        t[static_cast<std::size_t>(i)] =
            lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    return ThetaGrid(sign_branch, std::move(t));
}

double population_moment(const CondProbs& p, const Eigen::MatrixXd& x, const ParamPoint& b,
                         const Eigen::VectorXd& v, Side side) {
    if (p.n() != x.rows()) throw ValidationError("population moment: p and x sizes differ");
    if (x.cols() != b.b.size() || x.cols() != v.size())
        throw ValidationError("population moment: dimension mismatch");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double xb = x.row(i).dot(b.b);
        const double xv = x.row(i).dot(v);
        if (side == Side::upper) {
            if (xb >= 0.0 && xv < 0.0) sum += 2.0 * p.p[i] - 1.0;
        } else {
            if (xb <= 0.0 && xv > 0.0) sum += 1.0 - 2.0 * p.p[i];
        }
    }
    return sum / static_cast<double>(x.rows());
}

bool in_identified_set(const CondProbs& p, const Eigen::MatrixXd& x, const ParamPoint& b,
                       const InstrumentSets& inst) {
    for (const auto& v : inst.v_upper)
        if (population_moment(p, x, b, v, Side::upper) < 0.0) return false;
    for (const auto& v : inst.v_lower)
        if (population_moment(p, x, b, v, Side::lower) < 0.0) return false;
    return true;
}

std::vector<int> identified_set_2d(const CondProbs& p, const Eigen::MatrixXd& x,
                                   const ThetaGrid& grid) {
    if (x.cols() != 2) throw ValidationError("identified set: requires exactly 2 covariates");
    const InstrumentSets inst = build_instruments_2d(x);
    std::vector<int> member(grid.thetas.size(), 0);
    for (std::size_t i = 0; i < grid.thetas.size(); ++i)
        member[i] = in_identified_set(p, x, grid.point(i), inst) ? 1 : 0;
    return member;
}

namespace {

double min_side_moment(const CondProbs& p, const Eigen::MatrixXd& x, const ParamPoint& b,
                       const std::vector<Eigen::VectorXd>& dirs, Side side) {
    double lo = 0.0;
    for (const auto& v : dirs) lo = std::min(lo, population_moment(p, x, b, v, side));
    return lo;
}

} // namespace

ViolationQ violation_q(const CondProbs& p, const Eigen::MatrixXd& x, const ParamPoint& b,
                       const InstrumentSets& inst) {
    ViolationQ out;
    out.q_upper = -min_side_moment(p, x, b, inst.v_upper, Side::upper);
    out.q_lower = -min_side_moment(p, x, b, inst.v_lower, Side::lower);
    out.q_total = std::max(out.q_upper, out.q_lower);
    return out;
}

double power_threshold(int n, double q_quantile, double epsilon, double gamma) {
    if (n < 1) throw ValidationError("power threshold: n >= 1 required");
    if (!(gamma > 0.0 && gamma < 1.0))
        throw ValidationError("power threshold: gamma must be in (0,1)");
    if (!(epsilon > 0.0)) throw ValidationError("power threshold: epsilon must be positive");
    const double nn = static_cast<double>(n);
    const double shrink = 1.0 / std::sqrt(1.0 + q_quantile * q_quantile / nn);
    return (q_quantile * std::max(epsilon, shrink) + std::sqrt(-2.0 * std::log1p(-gamma))) /
           std::sqrt(nn);
}

namespace {

double indicator_mass(const Eigen::MatrixXd& x, const ParamPoint& b, const Eigen::VectorXd& v,
                      Side side) {
    int count = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double xb = x.row(i).dot(b.b);
        const double xv = x.row(i).dot(v);
        if (side == Side::upper ? (xb >= 0.0 && xv < 0.0) : (xb <= 0.0 && xv > 0.0)) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(x.rows());
}

double exp_bound(double arg) {
    if (arg <= 0.0) return 0.0;
    return 1.0 - std::exp(-0.5 * arg * arg);
}

} // namespace

PowerBounds power_lower_bound(const CondProbs& p, const Eigen::MatrixXd& x, const ParamPoint& b,
                              const InstrumentSets& inst, double q_quantile, double epsilon) {
    const double nn = static_cast<double>(x.rows());
    const double root_n = std::sqrt(nn);
    const double shrink = 1.0 / std::sqrt(1.0 + q_quantile * q_quantile / nn);

    PowerBounds out{0.0, 0.0};
    auto scan = [&](const std::vector<Eigen::VectorXd>& dirs, Side side) {
        for (const auto& v : dirs) {
            const double mass = indicator_mass(x, b, v, side);
            if (mass <= 0.0) continue; // no observations, direction carries no signal
            const double zeta = -population_moment(p, x, b, v, side) / std::sqrt(mass);
            const double eps_tilde = epsilon / std::sqrt(mass);
            const double arg = root_n * zeta - q_quantile * std::max(eps_tilde, shrink);
            out.cor1 = std::max(out.cor1, exp_bound(arg));
        }
    };
    scan(inst.v_upper, Side::upper);
    scan(inst.v_lower, Side::lower);

    const ViolationQ q = violation_q(p, x, b, inst);
    const double arg2 = root_n * q.q_total - q_quantile * std::max(epsilon, shrink);
    out.cor2 = exp_bound(arg2);
    return out;
}

PowerReport power_report(const CondProbs& p, const Eigen::MatrixXd& x, const ParamPoint& b,
                         const InstrumentSets& inst, double q_quantile, double epsilon,
                         double gamma) {
    const ViolationQ q = violation_q(p, x, b, inst);
    const PowerBounds bounds = power_lower_bound(p, x, b, inst, q_quantile, epsilon);
    PowerReport report;
    report.q_upper = q.q_upper;
    report.q_lower = q.q_lower;
    report.q_total = q.q_total;
    report.c_gamma = power_threshold(static_cast<int>(x.rows()), q_quantile, epsilon, gamma);
    report.bound_cor1 = bounds.cor1;
    report.bound_cor2 = bounds.cor2;
    return report;
}

namespace {

std::vector<std::int8_t> pattern_key(const Eigen::MatrixXd& x, const Eigen::VectorXd& b) {
    std::vector<std::int8_t> key(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double d = x.row(i).dot(b);
        key[static_cast<std::size_t>(i)] = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
    }
    return key;
}

} // namespace

InversionResult invert_test(const Sample& sample, const ThetaGrid& grid, const TestConfig& config,
                            bool shared_draws, int threads) {
    validate(config);
    if (sample.k() != 2) throw ValidationError("invert test: requires exactly 2 covariates");
    const InstrumentSets inst = build_instruments_2d(sample.x);
    const auto up_bits = direction_bits(sample.x, inst.v_upper);
    const auto lo_bits = direction_bits(sample.x, inst.v_lower);
    const auto y_bits = outcome_neg_bits(sample.y);
    const std::size_t n_points = grid.thetas.size();

    // Grid points with one sign pattern of x . b share cells and, under
    // shared draws, one decision.
    std::map<std::vector<std::int8_t>, int> cell_of;
    std::vector<int> cell_id(n_points);
    std::vector<std::size_t> rep_point; // first grid index per cell
    for (std::size_t i = 0; i < n_points; ++i) {
        const auto key = pattern_key(sample.x, grid.point(i).b);
        auto [it, fresh] = cell_of.try_emplace(key, static_cast<int>(rep_point.size()));
        if (fresh) rep_point.push_back(i);
        cell_id[i] = it->second;
    }

    InversionResult res;
    res.n_cells = static_cast<int>(rep_point.size());
    res.points.resize(n_points);

    if (shared_draws) {
        std::vector<std::vector<std::uint64_t>> draws(static_cast<std::size_t>(config.n_draws));
        for (std::size_t r = 0; r < draws.size(); ++r) {
            auto eng = substream(config.seed, static_cast<std::uint64_t>(r));
            draws[r] = rademacher_words(eng, sample.n());
        }
        struct CellStat {
            double t;
            double q;
        };
        std::vector<CellStat> stats(rep_point.size());
        parallel_for(rep_point.size(), threads, [&](std::size_t c) {
            const CellSet cs = build_cells(sample.x, grid.point(rep_point[c]), up_bits, lo_bits);
            std::vector<double> values(draws.size());
            for (std::size_t r = 0; r < draws.size(); ++r)
                values[r] = cs.statistic(draws[r], config.epsilon);
            stats[c].q = quantile_from_values(values, config.alpha);
            stats[c].t = cs.statistic(y_bits, config.epsilon);
        });
        for (std::size_t i = 0; i < n_points; ++i) {
            const CellStat& st = stats[static_cast<std::size_t>(cell_id[i])];
            res.points[i] = {grid.sign_branch, grid.thetas[i], st.t, st.q, st.t > st.q, cell_id[i]};
        }
    } else {
        parallel_for(n_points, threads, [&](std::size_t i) {
            const CellSet cs = build_cells(sample.x, grid.point(i), up_bits, lo_bits);
            std::uint64_t st = config.seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(i) + 1);
            const std::uint64_t point_seed = splitmix64(st);
            std::vector<double> values(static_cast<std::size_t>(config.n_draws));
            for (std::size_t r = 0; r < values.size(); ++r) {
                auto eng = substream(point_seed, static_cast<std::uint64_t>(r));
                values[r] = cs.statistic(rademacher_words(eng, sample.n()), config.epsilon);
            }
            const double q = quantile_from_values(values, config.alpha);
            const double t = cs.statistic(y_bits, config.epsilon);
            res.points[i] = {grid.sign_branch, grid.thetas[i], t, q, t > q, cell_id[i]};
        });
    }
    return res;
}

} // namespace maxscore
