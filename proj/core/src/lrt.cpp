#include "maxscore/lrt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "maxscore/rng.hpp"

namespace maxscore {

namespace {

constexpr double kMergeTol = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

// -inf dominates: an outcome impossible under the alternative keeps zero
// alternative likelihood no matter what other indices contribute.
inline double add_contrib(double acc, double term) {
    if (acc == -kInf || term == -kInf) return -kInf;
    return acc + term;
}

struct Contribs {
    std::vector<double> l1, l0;      // log p_alt/p_null per outcome branch
    std::vector<double> p_null, p_alt;
    std::vector<int> rows;
};

Contribs contributing(const LrtSpec& spec) {
    Contribs c;
    for (int i = 0; i < spec.p_null.n(); ++i) {
        const double pn = spec.p_null.p[i];
        const double pa = spec.p_alt.p[i];
        if (pn == pa) continue;
        c.l1.push_back(std::log(pa / pn));
        c.l0.push_back(std::log((1.0 - pa) / (1.0 - pn)));
        c.p_null.push_back(pn);
        c.p_alt.push_back(pa);
        c.rows.push_back(i);
    }
    return c;
}

} // namespace

LrtSpec::LrtSpec(CondProbs null_, CondProbs alt_)
    : p_null(std::move(null_)), p_alt(std::move(alt_)) {
    if (p_null.n() != p_alt.n())
        throw ValidationError("lrt spec: null and alternative lengths differ");
}

CondProbs least_favorable(const CondProbs& p_alt, const Eigen::MatrixXd& x, const ParamPoint& b) {
    if (p_alt.n() != x.rows()) throw ValidationError("least favorable: p and x sizes differ");
    if (x.cols() != b.b.size())
        throw ValidationError("least favorable: covariate and coefficient dimensions differ");
    Eigen::VectorXd bar = p_alt.p;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double xb = x.row(i).dot(b.b);
        const double dev = p_alt.p[i] - 0.5;
        if (xb * dev < 0.0 || (xb == 0.0 && dev < 0.0)) bar[i] = 0.5;
    }
    return CondProbs(std::move(bar));
}

double lr_statistic(const std::vector<int>& y, const LrtSpec& spec) {
    if (static_cast<int>(y.size()) != spec.p_null.n())
        throw ValidationError("lr statistic: y length mismatch");
    const Contribs c = contributing(spec);
    double acc = 0.0;
    for (std::size_t j = 0; j < c.rows.size(); ++j) {
        const int yi = y[static_cast<std::size_t>(c.rows[j])];
        acc = add_contrib(acc, yi == 1 ? c.l1[j] : c.l0[j]);
    }
    return acc;
}

namespace lrtdetail {

std::vector<Atom> lr_distribution(const std::vector<double>& l1, const std::vector<double>& l0,
                                  const std::vector<double>& probs, double merge_tol) {
    std::vector<Atom> atoms{{0.0, 1.0}};
    std::vector<Atom> shifted;
    for (std::size_t j = 0; j < probs.size(); ++j) {
        const double p = probs[j];
        shifted.clear();
        shifted.reserve(atoms.size() * 2);
        // Two shifted copies stay individually sorted; merge then collapse.
        std::size_t a = 0, b = 0;
        auto val1 = [&](std::size_t i) { return add_contrib(atoms[i].value, l1[j]); };
        auto val0 = [&](std::size_t i) { return add_contrib(atoms[i].value, l0[j]); };
        const bool keep1 = p > 0.0;
        const bool keep0 = p < 1.0;
        while ((keep1 && a < atoms.size()) || (keep0 && b < atoms.size())) {
            const bool take1 = keep1 && a < atoms.size() &&
                               (!keep0 || b >= atoms.size() || val1(a) <= val0(b));
            if (take1) {
                shifted.push_back({val1(a), atoms[a].prob * p});
                ++a;
            } else {
                shifted.push_back({val0(b), atoms[b].prob * (1.0 - p)});
                ++b;
            }
        }
        atoms.clear();
        for (const Atom& at : shifted) {
            if (!atoms.empty() && (atoms.back().value == at.value ||
                                   at.value - atoms.back().value <= merge_tol))
                atoms.back().prob += at.prob;
            else
                atoms.push_back(at);
        }
    }
    return atoms;
}

} // namespace lrtdetail

namespace {

using lrtdetail::Atom;
using lrtdetail::value_greater;
using lrtdetail::values_equal;

// Threshold scan shared by exact and Monte Carlo calibration: the smallest
// support value whose strict upper tail is <= alpha.
struct TailSplit {
    double k;
    double tail_above; // P(lr > k)
    double mass_at;    // P(lr = k)
};

TailSplit scan_threshold(const std::vector<Atom>& atoms, double alpha) {
    std::vector<double> suffix(atoms.size() + 1, 0.0);
    for (std::size_t j = atoms.size(); j-- > 0;) suffix[j] = suffix[j + 1] + atoms[j].prob;
    for (std::size_t j = 0; j < atoms.size(); ++j) {
        if (suffix[j + 1] <= alpha) return {atoms[j].value, suffix[j + 1], atoms[j].prob};
    }
    // alpha < smallest tail: reject nothing deterministically.
    return {atoms.back().value, 0.0, atoms.back().prob};
}

std::vector<Atom> empirical_atoms(std::vector<double> draws) {
    std::sort(draws.begin(), draws.end());
    std::vector<Atom> atoms;
    const double w = 1.0 / static_cast<double>(draws.size());
    for (double v : draws) {
        if (!atoms.empty() && values_equal(atoms.back().value, v))
            atoms.back().prob += w;
        else
            atoms.push_back({v, w});
    }
    return atoms;
}

std::vector<double> mc_lambda_draws(const Contribs& c, const std::vector<double>& probs,
                                    int n_draws, std::uint64_t seed, std::uint64_t stream_tag) {
    std::vector<double> draws(static_cast<std::size_t>(n_draws));
    for (int r = 0; r < n_draws; ++r) {
        auto eng = substream(seed ^ stream_tag, static_cast<std::uint64_t>(r));
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        double acc = 0.0;
        for (std::size_t j = 0; j < probs.size(); ++j)
            acc = add_contrib(acc, unif(eng) < probs[j] ? c.l1[j] : c.l0[j]);
        draws[static_cast<std::size_t>(r)] = acc;
    }
    return draws;
}

constexpr std::uint64_t kNullStream = 0x6c72746e756c6cULL;  // calibration draws
constexpr std::uint64_t kPowerStream = 0x6c7274706f77ULL;   // power draws

} // namespace

Calibration calibrate(const LrtSpec& spec) {
    if (!(spec.alpha > 0.0 && spec.alpha < 1.0))
        throw ValidationError("lrt: alpha must be in (0,1)");
    if (spec.mc_draws < 1) throw ValidationError("lrt: mc_draws >= 1 required");
    const Contribs c = contributing(spec);
    Calibration cal;
    cal.n_contributing = static_cast<int>(c.rows.size());
    cal.exact = cal.n_contributing <= spec.exact_limit;

    std::vector<Atom> atoms;
    if (cal.exact)
        atoms = lrtdetail::lr_distribution(c.l1, c.l0, c.p_null, kMergeTol);
    else
        atoms = empirical_atoms(mc_lambda_draws(c, c.p_null, spec.mc_draws, spec.seed, kNullStream));

    const TailSplit ts = scan_threshold(atoms, spec.alpha);
    cal.k = ts.k;
    cal.xi = 0.0;
    if (spec.mode == LrtMode::randomized && ts.mass_at > 0.0)
        cal.xi = (spec.alpha - ts.tail_above) / ts.mass_at;
    return cal;
}

LrtDecision lrt_reject(const std::vector<int>& y, const LrtSpec& spec, const Calibration& cal,
                       std::uint64_t aux_seed) {
    LrtDecision d;
    d.lambda = lr_statistic(y, spec);
    d.boundary = false;
    if (value_greater(d.lambda, cal.k)) {
        d.reject = true;
    } else if (spec.mode == LrtMode::randomized && values_equal(d.lambda, cal.k) && cal.xi > 0.0) {
        auto eng = substream(aux_seed, 0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        d.boundary = true;
        d.reject = unif(eng) < cal.xi;
    } else {
        d.reject = false;
    }
    return d;
}

double lrt_power(const CondProbs& p_true, const LrtSpec& spec, const Calibration& cal) {
    if (p_true.n() != spec.p_null.n()) throw ValidationError("lrt power: p length mismatch");
    const Contribs c = contributing(spec);
    std::vector<double> probs(c.rows.size());
    for (std::size_t j = 0; j < c.rows.size(); ++j)
        probs[j] = p_true.p[c.rows[static_cast<std::size_t>(j)]];

    double above = 0.0, at = 0.0;
    if (static_cast<int>(c.rows.size()) <= spec.exact_limit) {
        for (const Atom& atom : lrtdetail::lr_distribution(c.l1, c.l0, probs, kMergeTol)) {
            if (value_greater(atom.value, cal.k))
                above += atom.prob;
            else if (values_equal(atom.value, cal.k))
                at += atom.prob;
        }
    } else {
        const auto draws = mc_lambda_draws(c, probs, spec.mc_draws, spec.seed, kPowerStream);
        for (double v : draws) {
            if (value_greater(v, cal.k))
                above += 1.0;
            else if (values_equal(v, cal.k))
                at += 1.0;
        }
        above /= static_cast<double>(draws.size());
        at /= static_cast<double>(draws.size());
    }
    return above + (spec.mode == LrtMode::randomized ? cal.xi * at : 0.0);
}

} // namespace maxscore
