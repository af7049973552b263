#include "doctest.h"

#include <cmath>
#include <limits>
#include <vector>

#include "maxscore/lrt.hpp"

using namespace maxscore;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd mat(std::initializer_list<std::initializer_list<double>> rows) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& r : rows) {
        Eigen::Index j = 0;
        for (double v : r) m(i, j++) = v;
        ++i;
    }
    return m;
}

ParamPoint pp(double b1, double b2) {
    Eigen::VectorXd b(2);
    b << b1, b2;
    return ParamPoint(b);
}

CondProbs probs(std::initializer_list<double> vals) {
    Eigen::VectorXd p(static_cast<Eigen::Index>(vals.size()));
    Eigen::Index i = 0;
    for (double v : vals) p[i++] = v;
    return CondProbs(p);
}

} // namespace

TEST_CASE("least favorable pins misaligned probabilities to one half") {
    const Eigen::MatrixXd x = mat({{1.0, 1.0}, {-1.0, 1.0}});
    // aligned: kept as is
    const CondProbs ok = least_favorable(probs({0.7, 0.3}), x, pp(1.0, 0.0));
    CHECK(ok.p[0] == 0.7);
    CHECK(ok.p[1] == 0.3);
    // misaligned: pinned
    const CondProbs bad = least_favorable(probs({0.3, 0.7}), x, pp(1.0, 0.0));
    CHECK(bad.p[0] == 0.5);
    CHECK(bad.p[1] == 0.5);
}

TEST_CASE("least favorable on the boundary hyperplane pins only p below one half") {
    const Eigen::MatrixXd x = mat({{1.0, -1.0}});
    CHECK(least_favorable(probs({0.3}), x, pp(1.0, 1.0)).p[0] == 0.5);
    CHECK(least_favorable(probs({0.7}), x, pp(1.0, 1.0)).p[0] == 0.7);
    CHECK(least_favorable(probs({0.5}), x, pp(1.0, 1.0)).p[0] == 0.5);
}

TEST_CASE("single-observation log likelihood ratio") {
    LrtSpec spec(probs({0.5}), probs({0.8}));
    CHECK(lr_statistic({1}, spec) == doctest::Approx(std::log(1.6)).epsilon(1e-15));
    CHECK(lr_statistic({0}, spec) == doctest::Approx(std::log(0.4)).epsilon(1e-15));
    CHECK_THROWS_AS(lr_statistic({1, 0}, spec), ValidationError);
}

TEST_CASE("equal probabilities contribute exactly nothing") {
    LrtSpec spec(probs({0.5, 0.3}), probs({0.5, 0.3}));
    CHECK(lr_statistic({1, 1}, spec) == 0.0);
    CHECK(lr_statistic({0, 0}, spec) == 0.0);
}

TEST_CASE("minus infinity dominates plus infinity in the accumulation") {
    // y = (1,1): first index impossible under null (log ratio +inf), second
    // impossible under the alternative (log ratio -inf).
    LrtSpec spec(probs({0.0, 0.5}), probs({0.5, 0.0}));
    CHECK(lr_statistic({1, 1}, spec) == -kInf);
    CHECK(lr_statistic({1, 0}, spec) == kInf);
    CHECK(std::isfinite(lr_statistic({0, 0}, spec)));
}

TEST_CASE("two contributing observations calibrate to the top atom") {
    // null (1/2,1/2) against alternative (0.3,0.7): support
    // log 0.36 < log 0.84 < log 1.96 with probabilities 1/4, 1/2, 1/4
    LrtSpec spec(probs({0.5, 0.5}), probs({0.3, 0.7}));
    spec.alpha = 0.10;
    spec.mode = LrtMode::randomized;
    const Calibration cal = calibrate(spec);
    CHECK(cal.exact);
    CHECK(cal.n_contributing == 2);
    CHECK(cal.k == doctest::Approx(std::log(1.96)).epsilon(1e-13));
    CHECK(cal.xi == 0.4); // (0.10 - 0) / 0.25, both sides exact dyadics

    // nonrandomized mode zeroes the boundary weight and never rejects here
    spec.mode = LrtMode::nonrandomized;
    const Calibration cal0 = calibrate(spec);
    CHECK(cal0.k == cal.k);
    CHECK(cal0.xi == 0.0);

    // exact size: randomized alpha, nonrandomized zero
    spec.mode = LrtMode::randomized;
    CHECK(lrt_power(probs({0.5, 0.5}), spec, cal) == doctest::Approx(0.10).epsilon(1e-14));
    spec.mode = LrtMode::nonrandomized;
    CHECK(lrt_power(probs({0.5, 0.5}), spec, cal0) == 0.0);
}

TEST_CASE("power against the alternative exceeds size") {
    LrtSpec spec(probs({0.5, 0.5}), probs({0.3, 0.7}));
    spec.alpha = 0.10;
    spec.mode = LrtMode::randomized;
    const Calibration cal = calibrate(spec);
    // P(lambda = log 1.96 | alt) = 0.7 * 0.7 = 0.49, power = 0.49 xi
    CHECK(lrt_power(probs({0.3, 0.7}), spec, cal) == doctest::Approx(0.49 * 0.4).epsilon(1e-13));
}

TEST_CASE("single misaligned observation: threshold log 1.6, weight 0.2") {
    const Eigen::MatrixXd x = mat({{1.0, 1.0}});
    const CondProbs alt = probs({0.2});
    LrtSpec spec(least_favorable(alt, x, pp(1.0, 0.0)), alt);
    spec.alpha = 0.10;
    spec.mode = LrtMode::randomized;
    const Calibration cal = calibrate(spec);
    CHECK(cal.k == doctest::Approx(std::log(1.6)).epsilon(1e-13));
    CHECK(cal.xi == 0.2);
    CHECK(lrt_power(alt, spec, cal) == doctest::Approx(0.16).epsilon(1e-13));
    CHECK(lrt_power(probs({0.5}), spec, cal) == doctest::Approx(0.10).epsilon(1e-14));
}

TEST_CASE("impossible-under-alternative outcomes never reject") {
    const Eigen::MatrixXd x = mat({{1.0, 1.0}, {-1.0, 1.0}});
    const CondProbs alt = probs({0.0, 0.7});
    LrtSpec spec(least_favorable(alt, x, pp(1.0, 0.0)), alt);
    spec.alpha = 0.10;
    spec.mode = LrtMode::randomized;
    REQUIRE(spec.p_null.p[0] == 0.5);
    REQUIRE(spec.p_null.p[1] == 0.5);
    const Calibration cal = calibrate(spec);
    CHECK(cal.k == doctest::Approx(std::log(2.8)).epsilon(1e-13));
    CHECK(cal.xi == 0.4);
    // under the alternative the -inf branch has probability zero
    CHECK(lrt_power(alt, spec, cal) == doctest::Approx(0.28).epsilon(1e-13));
    CHECK(lrt_power(probs({0.5, 0.5}), spec, cal) == doctest::Approx(0.10).epsilon(1e-14));
}

TEST_CASE("degenerate spec: all candidates aligned, trivial test") {
    const Eigen::MatrixXd x = mat({{1.0, 1.0}, {-1.0, 1.0}});
    const CondProbs alt = probs({0.7, 0.3});
    LrtSpec spec(least_favorable(alt, x, pp(1.0, 0.0)), alt);
    spec.mode = LrtMode::randomized;
    const Calibration cal = calibrate(spec);
    CHECK(cal.n_contributing == 0);
    CHECK(cal.k == 0.0);
    CHECK(cal.xi == spec.alpha);
    // randomized power is exactly alpha everywhere, nonrandomized never fires
    CHECK(lrt_power(probs({0.9, 0.1}), spec, cal) == spec.alpha);
    CHECK(lrt_power(alt, spec, cal) == spec.alpha);
    spec.mode = LrtMode::nonrandomized;
    const Calibration cal0 = calibrate(spec);
    CHECK(lrt_power(probs({0.9, 0.1}), spec, cal0) == 0.0);
}

TEST_CASE("distribution atoms merge probability-independently") {
    // values must not depend on the Bernoulli probabilities so exact power
    // evaluations share the calibration support
    const std::vector<double> l1{std::log(0.6), std::log(1.4)};
    const std::vector<double> l0{std::log(1.4), std::log(0.6)};
    const auto null_atoms = lrtdetail::lr_distribution(l1, l0, {0.5, 0.5}, 1e-12);
    const auto alt_atoms = lrtdetail::lr_distribution(l1, l0, {0.3, 0.7}, 1e-12);
    REQUIRE(null_atoms.size() == 3);
    REQUIRE(alt_atoms.size() == 3);
    for (std::size_t j = 0; j < 3; ++j) CHECK(null_atoms[j].value == alt_atoms[j].value);
    CHECK(null_atoms[0].prob == 0.25);
    CHECK(null_atoms[1].prob == 0.5);
    CHECK(null_atoms[2].prob == 0.25);
    double total = 0.0;
    for (const auto& a : alt_atoms) total += a.prob;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("zero-probability branches are dropped from the support") {
    const auto atoms = lrtdetail::lr_distribution({kInf}, {std::log(0.5)}, {0.0}, 1e-12);
    REQUIRE(atoms.size() == 1);
    CHECK(atoms[0].value == std::log(0.5));
    CHECK(atoms[0].prob == 1.0);
}

TEST_CASE("monte carlo calibration approaches the exact one") {
    // 8 contributing observations, exact via DP vs forced Monte Carlo
    std::vector<double> alt_vals{0.1, 0.9, 0.2, 0.8, 0.3, 0.7, 0.35, 0.65};
    Eigen::VectorXd alt(8), null(8);
    for (int i = 0; i < 8; ++i) {
        alt[i] = alt_vals[static_cast<std::size_t>(i)];
        null[i] = 0.5;
    }
    LrtSpec spec{CondProbs(null), CondProbs(alt)};
    spec.alpha = 0.10;
    spec.mode = LrtMode::randomized;
    spec.seed = 99;

    spec.exact_limit = 20;
    const Calibration exact = calibrate(spec);
    CHECK(exact.exact);

    spec.exact_limit = 0;
    spec.mc_draws = 200000;
    const Calibration mc = calibrate(spec);
    CHECK_FALSE(mc.exact);

    // size under the null from both calibrations
    spec.exact_limit = 20;
    const double size_exact = lrt_power(CondProbs(null), spec, exact);
    const double size_mc = lrt_power(CondProbs(null), spec, mc);
    CHECK(size_exact == doctest::Approx(0.10).epsilon(1e-12));
    CHECK(size_mc == doctest::Approx(0.10).epsilon(0.05)); // 3 MC sigmas approx 0.2%
}

TEST_CASE("monte carlo calibration is seed-deterministic") {
    Eigen::VectorXd alt(25), null(25);
    for (int i = 0; i < 25; ++i) {
        alt[i] = (i % 2 == 0) ? 0.3 : 0.8;
        null[i] = 0.5;
    }
    LrtSpec spec{CondProbs(null), CondProbs(alt)};
    spec.mode = LrtMode::randomized;
    spec.seed = 31;
    spec.mc_draws = 5000;
    const Calibration a = calibrate(spec);
    const Calibration b = calibrate(spec);
    CHECK_FALSE(a.exact);
    CHECK(a.k == b.k);
    CHECK(a.xi == b.xi);
}

TEST_CASE("reject decision distinguishes strict exceedance from the boundary") {
    LrtSpec spec(probs({0.5, 0.5}), probs({0.3, 0.7}));
    spec.alpha = 0.10;
    spec.mode = LrtMode::nonrandomized;
    const Calibration cal = calibrate(spec);
    // lambda = log 1.96 equals k: nonrandomized never rejects
    const LrtDecision d = lrt_reject({0, 1}, spec, cal, 7);
    CHECK(d.lambda == doctest::Approx(std::log(1.96)).epsilon(1e-13));
    CHECK_FALSE(d.reject);
    CHECK_FALSE(d.boundary);

    spec.mode = LrtMode::randomized;
    const Calibration calr = calibrate(spec);
    int fired = 0;
    const int trials = 4000;
    for (int t = 0; t < trials; ++t) {
        const LrtDecision dr = lrt_reject({0, 1}, spec, calr, static_cast<std::uint64_t>(t));
        CHECK(dr.boundary);
        fired += dr.reject ? 1 : 0;
    }
    // boundary draws fire at rate xi = 0.4
    const double rate = static_cast<double>(fired) / trials;
    CHECK(rate > 0.35);
    CHECK(rate < 0.45);
}

TEST_CASE("spec validation") {
    CHECK_THROWS_AS(LrtSpec(probs({0.5}), probs({0.5, 0.5})), ValidationError);
    LrtSpec spec(probs({0.5}), probs({0.7}));
    spec.alpha = 0.0;
    CHECK_THROWS_AS(calibrate(spec), ValidationError);
    spec.alpha = 0.1;
    spec.mc_draws = 0;
    spec.exact_limit = 0;
    CHECK_THROWS_AS(calibrate(spec), ValidationError);
}
