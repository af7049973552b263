#include "maxscore/montecarlo.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdio>
#include <map>

#include "maxscore/instruments.hpp"
#include "maxscore/lrt.hpp"
#include "maxscore/parallel.hpp"
#include "maxscore/rng.hpp"

namespace maxscore {

namespace {

const double kLogisticScale = std::sqrt(3.0) / std::acos(-1.0); // unit variance
const double kUniformHalfWidth = std::sqrt(3.0);                // unit variance

std::uint64_t derive_seed(std::uint64_t seed, int slot) {
    std::uint64_t state = seed;
    std::uint64_t v = 0;
    for (int i = 0; i <= slot; ++i) v = splitmix64(state);
    return v;
}

double logistic_draw(std::mt19937_64& eng) {
    const double p = open_unit_uniform(eng);
    return kLogisticScale * std::log(p / (1.0 - p));
}

double hetero_scale(double z) {
    const double z2 = z * z;
    return 0.25 * (1.0 + 2.0 * z2 + z2 * z2);
}

// Cheap deterministic uniform for LRT boundary tie-breaks, keyed by
// (replication, pattern) so the result is independent of thread count.
double tie_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::uint64_t state = seed ^ (a * 0x9e3779b97f4a7c15ULL);
    splitmix64(state);
    state ^= b * 0xc2b2ae3d27d4eb4fULL;
    return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

} // namespace

void DgpSpec::validate() const {
    if (n < 1) throw ValidationError("dgp: n >= 1 required");
    const int d = static_cast<int>(design);
    if (d < 1 || d > 4) throw ValidationError("dgp: design must be 1..4");
    if (design == Design::student_t && df <= 2)
        throw ValidationError("dgp: student t df must exceed 2");
    if (!std::isfinite(theta0)) throw ValidationError("dgp: theta0 must be finite");
}

Eigen::VectorXd DgpSpec::beta() const {
    Eigen::VectorXd b(2);
    b << 1.0, theta0;
    return b;
}

Eigen::MatrixXd gen_x(int n, std::uint64_t seed) {
    if (n < 1) throw ValidationError("gen x: n >= 1 required");
    auto eng = substream(seed, 0);
    std::normal_distribution<double> norm(0.0, 1.0);
    Eigen::MatrixXd x(n, 2);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = norm(eng);
        x(i, 1) = norm(eng) + 1.0;
    }
    return x;
}

Eigen::VectorXd gen_u(const DgpSpec& spec, const Eigen::MatrixXd& x, std::uint64_t seed) {
    spec.validate();
    auto eng = substream(seed, 0);
    const int n = static_cast<int>(x.rows());
    Eigen::VectorXd u(n);
    switch (spec.design) {
        case Design::logistic:
            for (int i = 0; i < n; ++i) u[i] = logistic_draw(eng);
            break;
        case Design::uniform:
            for (int i = 0; i < n; ++i)
                u[i] = kUniformHalfWidth * (2.0 * open_unit_uniform(eng) - 1.0);
            break;
        case Design::student_t: {
            std::normal_distribution<double> norm(0.0, 1.0);
            const double scale = std::sqrt((spec.df - 2.0) / spec.df);
            for (int i = 0; i < n; ++i) {
                const double z = norm(eng);
                double w = 0.0;
                for (int j = 0; j < spec.df; ++j) {
                    const double g = norm(eng);
                    w += g * g;
                }
                u[i] = scale * z / std::sqrt(w / spec.df);
            }
            break;
        }
        case Design::hetero:
            for (int i = 0; i < n; ++i)
                u[i] = hetero_scale(x(i, 0) + x(i, 1)) * logistic_draw(eng);
            break;
    }
    return u;
}

CondProbs true_cond_probs(const DgpSpec& spec, const Eigen::MatrixXd& x) {
    spec.validate();
    if (x.cols() != 2) throw ValidationError("true cond probs: requires 2 covariates");
    const Eigen::VectorXd xb = x * spec.beta();
    const int n = static_cast<int>(x.rows());
    Eigen::VectorXd p(n);
    switch (spec.design) {
        case Design::logistic:
            for (int i = 0; i < n; ++i) p[i] = 1.0 / (1.0 + std::exp(-xb[i] / kLogisticScale));
            break;
        case Design::uniform:
            for (int i = 0; i < n; ++i) {
                if (xb[i] <= -kUniformHalfWidth)
                    p[i] = 0.0;
                else if (xb[i] >= kUniformHalfWidth)
                    p[i] = 1.0;
                else
                    p[i] = (kUniformHalfWidth + xb[i]) / (2.0 * kUniformHalfWidth);
            }
            break;
        case Design::student_t: {
            const boost::math::students_t dist(static_cast<double>(spec.df));
            const double scale = std::sqrt((spec.df - 2.0) / spec.df);
            for (int i = 0; i < n; ++i) p[i] = boost::math::cdf(dist, xb[i] / scale);
            break;
        }
        case Design::hetero:
            for (int i = 0; i < n; ++i) {
                const double s = hetero_scale(x(i, 0) + x(i, 1));
                p[i] = 1.0 / (1.0 + std::exp(-xb[i] / (s * kLogisticScale)));
            }
            break;
    }
    return CondProbs(std::move(p));
}

void McConfig::validate() const {
    if (thetas.empty()) throw ValidationError("mc: at least one theta required");
    for (std::size_t i = 0; i + 1 < thetas.size(); ++i)
        if (!(thetas[i] < thetas[i + 1]))
            throw ValidationError("mc: thetas must be strictly increasing");
    if (reps < 1) throw ValidationError("mc: reps >= 1 required");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("mc: alpha must be in (0,1)");
    if (!(epsilon > 0.0)) throw ValidationError("mc: epsilon must be positive");
    if (rad_draws < 1) throw ValidationError("mc: rad_draws >= 1 required");
    if (lrt_mc_draws < 1) throw ValidationError("mc: lrt_mc_draws >= 1 required");
}

McConfig default_mc_config(double theta0) {
    McConfig c;
    c.thetas.resize(601);
    for (int i = 0; i < 601; ++i)
        c.thetas[static_cast<std::size_t>(i)] = theta0 - 3.0 + 6.0 * i / 600.0;
    return c;
}

namespace {

std::vector<std::int8_t> sign_key(const Eigen::MatrixXd& x, const Eigen::VectorXd& b) {
    std::vector<std::int8_t> key(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double d = x.row(i).dot(b);
        key[static_cast<std::size_t>(i)] = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
    }
    return key;
}

struct PatternEval {
    CellSet cells;
    double q;
    int fsid;
    LrtSpec lrt;
    Calibration cal;
    McRowDiag diag;

    PatternEval(CellSet cs, LrtSpec spec) : cells(std::move(cs)), lrt(std::move(spec)) {}
};

} // namespace

McResult run_experiment(const DgpSpec& spec, const McConfig& config, int threads) {
    spec.validate();
    config.validate();

    const Eigen::MatrixXd x = gen_x(spec.n, derive_seed(spec.seed, 0));
    const CondProbs p_true = true_cond_probs(spec, x);
    const InstrumentSets inst = build_instruments_2d(x);
    const auto up_bits = direction_bits(x, inst.v_upper);
    const auto lo_bits = direction_bits(x, inst.v_lower);
    const std::uint64_t u_base = derive_seed(spec.seed, 1);
    const std::uint64_t rad_seed = derive_seed(spec.seed, 2);
    const std::uint64_t lrt_base = derive_seed(spec.seed, 3);
    const std::uint64_t tie_seed = derive_seed(spec.seed, 4);

    // One simulated sign matrix for the whole grid.
    std::vector<std::vector<std::uint64_t>> rad(static_cast<std::size_t>(config.rad_draws));
    for (std::size_t r = 0; r < rad.size(); ++r) {
        auto eng = substream(rad_seed, static_cast<std::uint64_t>(r));
        rad[r] = rademacher_words(eng, spec.n);
    }

    // Grid points sharing a sign pattern of x . b share every per-point
    // quantity, so evaluate per pattern and fan out.
    const std::vector<int> branches{1, -1};
    std::vector<std::vector<int>> pattern_of(branches.size(),
                                             std::vector<int>(config.thetas.size()));
    std::vector<ParamPoint> rep_b;
    std::map<std::vector<std::int8_t>, int> seen;
    for (std::size_t bi = 0; bi < branches.size(); ++bi) {
        for (std::size_t ti = 0; ti < config.thetas.size(); ++ti) {
            Eigen::VectorXd b(2);
            b << static_cast<double>(branches[bi]), config.thetas[ti];
            auto [it, fresh] = seen.try_emplace(sign_key(x, b), static_cast<int>(rep_b.size()));
            if (fresh) rep_b.emplace_back(b);
            pattern_of[bi][ti] = it->second;
        }
    }

    std::vector<PatternEval> pats;
    pats.reserve(rep_b.size());
    for (std::size_t g = 0; g < rep_b.size(); ++g) {
        // Randomized benchmark: exact size alpha, so its power is an upper
        // bound for any valid test of the same null.
        LrtSpec lspec(least_favorable(p_true, x, rep_b[g]), p_true);
        lspec.alpha = config.alpha;
        lspec.mode = LrtMode::randomized;
        lspec.exact_limit = config.lrt_exact_limit;
        lspec.mc_draws = config.lrt_mc_draws;
        lspec.seed = derive_seed(lrt_base, static_cast<int>(g));
        pats.emplace_back(build_cells(x, rep_b[g], up_bits, lo_bits), std::move(lspec));
    }

    parallel_for(pats.size(), threads, [&](std::size_t g) {
        PatternEval& pe = pats[g];
        std::vector<double> values(rad.size());
        for (std::size_t r = 0; r < rad.size(); ++r)
            values[r] = pe.cells.statistic(rad[r], config.epsilon);
        pe.q = quantile_from_values(values, config.alpha);
        pe.fsid = in_identified_set(p_true, x, rep_b[g], inst) ? 1 : 0;
        pe.cal = calibrate(pe.lrt);
        const PowerReport pr =
            power_report(p_true, x, rep_b[g], inst, pe.q, config.epsilon, 0.9);
        pe.diag = {pe.q, pr.q_total, pr.c_gamma, pr.bound_cor1, pr.bound_cor2};
    });

    const Eigen::VectorXd xbeta = x * spec.beta();
    std::vector<std::vector<std::uint8_t>> rej_prop(
        static_cast<std::size_t>(config.reps), std::vector<std::uint8_t>(pats.size()));
    std::vector<std::vector<std::uint8_t>> rej_lrt = rej_prop;
    parallel_for(static_cast<std::size_t>(config.reps), threads, [&](std::size_t r) {
        const Eigen::VectorXd u = gen_u(spec, x, u_base ^ static_cast<std::uint64_t>(r));
        std::vector<int> y(static_cast<std::size_t>(spec.n));
        for (int i = 0; i < spec.n; ++i)
            y[static_cast<std::size_t>(i)] = xbeta[i] + u[i] >= 0.0 ? 1 : 0;
        const auto bits = outcome_neg_bits(y);
        for (std::size_t g = 0; g < pats.size(); ++g) {
            const PatternEval& pe = pats[g];
            rej_prop[r][g] = pe.cells.statistic(bits, config.epsilon) > pe.q ? 1 : 0;
            const double lambda = lr_statistic(y, pe.lrt);
            bool rej = lrtdetail::value_greater(lambda, pe.cal.k);
            if (!rej && pe.cal.xi > 0.0 && lrtdetail::values_equal(lambda, pe.cal.k))
                rej = tie_uniform(tie_seed, r, g) < pe.cal.xi;
            rej_lrt[r][g] = rej ? 1 : 0;
        }
    });

    std::vector<long> count_prop(pats.size(), 0), count_lrt(pats.size(), 0);
    for (std::size_t r = 0; r < rej_prop.size(); ++r) {
        for (std::size_t g = 0; g < pats.size(); ++g) {
            count_prop[g] += rej_prop[r][g];
            count_lrt[g] += rej_lrt[r][g];
        }
    }

    McResult res;
    res.dgp = spec;
    res.reps = config.reps;
    res.alpha = config.alpha;
    const double reps = static_cast<double>(config.reps);
    for (std::size_t bi = 0; bi < branches.size(); ++bi) {
        for (std::size_t ti = 0; ti < config.thetas.size(); ++ti) {
            const std::size_t g = static_cast<std::size_t>(pattern_of[bi][ti]);
            McRow row;
            row.sign_branch = branches[bi];
            row.theta = config.thetas[ti];
            row.nonrej_proposed = 1.0 - static_cast<double>(count_prop[g]) / reps;
            row.nonrej_lrt = 1.0 - static_cast<double>(count_lrt[g]) / reps;
            row.fsid_member = pats[g].fsid;
            res.rows.push_back(row);
            res.diag.push_back(pats[g].diag);
        }
    }
    return res;
}

std::string McResult::to_csv() const {
    std::string out = "# schema_version=1\ns,theta,nonrej_proposed,nonrej_lrt,fsid_member\n";
    char buf[128];
    for (const McRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%d\n", r.sign_branch, r.theta,
                      r.nonrej_proposed, r.nonrej_lrt, r.fsid_member);
        out += buf;
    }
    return out;
}

} // namespace maxscore
