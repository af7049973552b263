#include "cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "maxscore/inference.hpp"
#include "maxscore/instruments.hpp"
#include "maxscore/lrt.hpp"
#include "maxscore/montecarlo.hpp"
#include "maxscore/rng.hpp"
#include "maxscore/sample.hpp"
#include "maxscore/teststat.hpp"
#include "maxscore/version.hpp"

namespace maxscore {

namespace {

using json = nlohmann::ordered_json;

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

Eigen::VectorXd parse_vector(const std::string& text) {
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            vals.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ValidationError("cannot parse coefficient list '" + text + "'");
        }
    }
    if (vals.empty()) throw ValidationError("empty coefficient list");
    Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) v[static_cast<Eigen::Index>(i)] = vals[i];
    return v;
}

// Output target: file plus run manifest, or stdout.
class Sink {
public:
    explicit Sink(std::string path) : path_(std::move(path)) {}

    void deliver(const std::string& content, const std::string& subcommand, const json& flags,
                 double duration_s) const {
        if (path_.empty()) {
            std::cout << content;
            return;
        }
        write_file(path_, content);
        json manifest;
        manifest["schema_version"] = kSchemaVersion;
        manifest["artifact_version"] = kVersion;
        manifest["subcommand"] = subcommand;
        manifest["flags"] = flags;
        manifest["output"] = path_;
        manifest["duration_seconds"] = duration_s;
        write_file(path_ + ".manifest.json", manifest.dump(2) + "\n");
    }

private:
    static void write_file(const std::string& path, const std::string& content) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write '" + path + "'");
        out << content;
        if (!out) throw IoError("write failed for '" + path + "'");
    }

    std::string path_;
};

class Timer {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string side_or_none(const std::optional<Side>& s) {
    if (!s) return "none";
    return side_name(*s);
}

struct GridFlags {
    double lo = 0.0;
    double hi = 0.0;
    int points = 601;
    std::string branch = "both";

    std::vector<ThetaGrid> grids() const {
        std::vector<ThetaGrid> out;
        if (branch == "+1" || branch == "1" || branch == "both")
            out.push_back(make_grid(1, lo, hi, points));
        if (branch == "-1" || branch == "both") out.push_back(make_grid(-1, lo, hi, points));
        if (out.empty()) throw ValidationError("branch must be +1, -1, or both");
        return out;
    }
};

void add_grid_flags(CLI::App* cmd, GridFlags& g, bool require_range) {
    auto* lo = cmd->add_option("--grid-lo", g.lo, "grid lower endpoint");
    auto* hi = cmd->add_option("--grid-hi", g.hi, "grid upper endpoint");
    if (require_range) {
        lo->required();
        hi->required();
    }
    cmd->add_option("--grid-points", g.points, "number of grid points");
    cmd->add_option("--branch", g.branch, "sign branch: +1, -1, or both");
}

int dispatch(const std::vector<std::string>& args) {
    CLI::App app{"Finite-sample tests and confidence sets for semiparametric binary response"};
    app.require_subcommand(1);
    app.fallthrough();
    int threads = 0;
    app.add_option("--threads", threads, "worker threads (0 = hardware)");

    // ---- test ----
    auto* c_test = app.add_subcommand("test", "moment test at one candidate point");
    struct {
        std::string data, b, out;
        TestConfig cfg;
    } t;
    c_test->add_option("--data", t.data, "sample csv (y, x1..xK)")->required();
    c_test->add_option("--b", t.b, "candidate coefficients, comma separated")->required();
    c_test->add_option("--alpha", t.cfg.alpha, "test level");
    c_test->add_option("--eps", t.cfg.epsilon, "studentization floor");
    c_test->add_option("--draws", t.cfg.n_draws, "simulated sign draws");
    c_test->add_option("--seed", t.cfg.seed, "rng seed");
    c_test->add_option("--out", t.out, "output path (stdout if omitted)");
    c_test->callback([&] {
        Timer timer;
        const Sample sample = load_sample(t.data);
        const ParamPoint b(parse_vector(t.b));
        const TestOutcome outcome =
            run_test(sample, b, build_instruments(sample.x), t.cfg, threads);
        json out;
        out["schema_version"] = kSchemaVersion;
        out["t_stat"] = outcome.t_stat;
        out["q"] = outcome.q;
        out["reject"] = outcome.reject;
        out["argmax_side"] = side_or_none(outcome.argmax_side);
        if (outcome.argmax_v) {
            json v = json::array();
            for (Eigen::Index i = 0; i < outcome.argmax_v->size(); ++i)
                v.push_back((*outcome.argmax_v)[i]);
            out["argmax_v"] = v;
        } else {
            out["argmax_v"] = nullptr;
        }
        json flags{{"data", t.data},          {"b", t.b},
                   {"alpha", t.cfg.alpha},    {"eps", t.cfg.epsilon},
                   {"draws", t.cfg.n_draws},  {"seed", t.cfg.seed},
                   {"threads", threads}};
        Sink(t.out).deliver(out.dump(2) + "\n", "test", flags, timer.seconds());
    });

    // ---- invert ----
    auto* c_inv = app.add_subcommand("invert", "test inversion over a theta grid");
    struct {
        std::string data, out;
        GridFlags grid;
        TestConfig cfg;
        bool independent = false;
    } iv;
    c_inv->add_option("--data", iv.data, "sample csv (y, x1, x2)")->required();
    add_grid_flags(c_inv, iv.grid, true);
    c_inv->add_option("--alpha", iv.cfg.alpha, "test level");
    c_inv->add_option("--eps", iv.cfg.epsilon, "studentization floor");
    c_inv->add_option("--draws", iv.cfg.n_draws, "simulated sign draws");
    c_inv->add_option("--seed", iv.cfg.seed, "rng seed");
    c_inv->add_flag("--independent-draws", iv.independent,
                    "fresh sign draws per grid point instead of one shared matrix");
    c_inv->add_option("--out", iv.out, "output path (stdout if omitted)");
    c_inv->callback([&] {
        Timer timer;
        const Sample sample = load_sample(iv.data);
        std::string csv = "# schema_version=1\ns,theta,t_stat,q,reject\n";
        for (const ThetaGrid& grid : iv.grid.grids()) {
            const InversionResult res =
                invert_test(sample, grid, iv.cfg, !iv.independent, threads);
            for (const InversionPoint& pt : res.points) {
                csv += std::to_string(pt.sign_branch) + "," + fmt_double(pt.theta) + "," +
                       fmt_double(pt.t_stat) + "," + fmt_double(pt.q) + "," +
                       (pt.reject ? "1" : "0") + "\n";
            }
        }
        json flags{{"data", iv.data},
                   {"grid-lo", iv.grid.lo},
                   {"grid-hi", iv.grid.hi},
                   {"grid-points", iv.grid.points},
                   {"branch", iv.grid.branch},
                   {"alpha", iv.cfg.alpha},
                   {"eps", iv.cfg.epsilon},
                   {"draws", iv.cfg.n_draws},
                   {"seed", iv.cfg.seed},
                   {"independent-draws", iv.independent},
                   {"threads", threads}};
        Sink(iv.out).deliver(csv, "invert", flags, timer.seconds());
    });

    // ---- idset ----
    auto* c_id = app.add_subcommand("idset", "population identified set over a theta grid");
    struct {
        std::string data, p, out;
        GridFlags grid;
    } id;
    c_id->add_option("--data", id.data, "covariate csv (x1, x2)")->required();
    c_id->add_option("--p", id.p, "conditional probability csv (p column)")->required();
    add_grid_flags(c_id, id.grid, true);
    c_id->add_option("--out", id.out, "output path (stdout if omitted)");
    c_id->callback([&] {
        Timer timer;
        const Eigen::MatrixXd x = load_covariates(id.data);
        const CondProbs p = load_cond_probs(id.p);
        std::string csv = "# schema_version=1\ns,theta,member\n";
        for (const ThetaGrid& grid : id.grid.grids()) {
            const std::vector<int> member = identified_set_2d(p, x, grid);
            for (std::size_t i = 0; i < member.size(); ++i)
                csv += std::to_string(grid.sign_branch) + "," + fmt_double(grid.thetas[i]) + "," +
                       std::to_string(member[i]) + "\n";
        }
        json flags{{"data", id.data},         {"p", id.p},
                   {"grid-lo", id.grid.lo},   {"grid-hi", id.grid.hi},
                   {"grid-points", id.grid.points}, {"branch", id.grid.branch},
                   {"threads", threads}};
        Sink(id.out).deliver(csv, "idset", flags, timer.seconds());
    });

    // ---- power ----
    auto* c_pow = app.add_subcommand("power", "population power diagnostics at one point");
    struct {
        std::string data, p, b, out;
        TestConfig cfg;
        double gamma = 0.9;
    } pw;
    c_pow->add_option("--data", pw.data, "covariate csv (x1..xK)")->required();
    c_pow->add_option("--p", pw.p, "conditional probability csv (p column)")->required();
    c_pow->add_option("--b", pw.b, "candidate coefficients, comma separated")->required();
    c_pow->add_option("--alpha", pw.cfg.alpha, "test level");
    c_pow->add_option("--eps", pw.cfg.epsilon, "studentization floor");
    c_pow->add_option("--draws", pw.cfg.n_draws, "simulated sign draws");
    c_pow->add_option("--seed", pw.cfg.seed, "rng seed");
    c_pow->add_option("--gamma", pw.gamma, "target rejection probability");
    c_pow->add_option("--out", pw.out, "output path (stdout if omitted)");
    c_pow->callback([&] {
        Timer timer;
        const Eigen::MatrixXd x = load_covariates(pw.data);
        const CondProbs p = load_cond_probs(pw.p);
        const ParamPoint b(parse_vector(pw.b));
        if (p.n() != x.rows()) throw ValidationError("power: p and x row counts differ");
        const InstrumentSets inst = build_instruments(x);
        const QuantileResult qr = simulate_quantile(x, b, inst, pw.cfg, threads);
        const PowerReport report =
            power_report(p, x, b, inst, qr.q, pw.cfg.epsilon, pw.gamma);
        json out;
        out["schema_version"] = kSchemaVersion;
        out["q_quantile"] = qr.q;
        out["q_upper"] = report.q_upper;
        out["q_lower"] = report.q_lower;
        out["q_total"] = report.q_total;
        out["c_gamma"] = report.c_gamma;
        out["bound_cor1"] = report.bound_cor1;
        out["bound_cor2"] = report.bound_cor2;
        json flags{{"data", pw.data},        {"p", pw.p},
                   {"b", pw.b},              {"alpha", pw.cfg.alpha},
                   {"eps", pw.cfg.epsilon},  {"draws", pw.cfg.n_draws},
                   {"seed", pw.cfg.seed},    {"gamma", pw.gamma},
                   {"threads", threads}};
        Sink(pw.out).deliver(out.dump(2) + "\n", "power", flags, timer.seconds());
    });

    // ---- lrt ----
    auto* c_lrt = app.add_subcommand("lrt", "likelihood-ratio benchmark at one point");
    struct {
        std::string data, p_alt, b, mode = "nonrandomized", out;
        double alpha = 0.10;
        int exact_limit = 20;
        int cal_draws = 20000;
        std::uint64_t seed = 0;
    } lr;
    c_lrt->add_option("--data", lr.data, "sample csv (y, x1..xK)")->required();
    c_lrt->add_option("--p-alt", lr.p_alt, "alternative probability csv (p column)")->required();
    c_lrt->add_option("--b", lr.b, "candidate coefficients, comma separated")->required();
    c_lrt->add_option("--alpha", lr.alpha, "test level");
    c_lrt->add_option("--mode", lr.mode, "randomized or nonrandomized");
    c_lrt->add_option("--exact-limit", lr.exact_limit, "max contributing indices for exact calibration");
    c_lrt->add_option("--cal-draws", lr.cal_draws, "Monte Carlo calibration budget");
    c_lrt->add_option("--seed", lr.seed, "rng seed");
    c_lrt->add_option("--out", lr.out, "output path (stdout if omitted)");
    c_lrt->callback([&] {
        Timer timer;
        const Sample sample = load_sample(lr.data);
        const CondProbs p_alt = load_cond_probs(lr.p_alt);
        const ParamPoint b(parse_vector(lr.b));
        if (p_alt.n() != sample.n()) throw ValidationError("lrt: p and sample sizes differ");
        if (lr.mode != "randomized" && lr.mode != "nonrandomized")
            throw ValidationError("lrt: mode must be randomized or nonrandomized");
        LrtSpec spec(least_favorable(p_alt, sample.x, b), p_alt);
        spec.alpha = lr.alpha;
        spec.mode = lr.mode == "randomized" ? LrtMode::randomized : LrtMode::nonrandomized;
        spec.exact_limit = lr.exact_limit;
        spec.mc_draws = lr.cal_draws;
        spec.seed = lr.seed;
        const Calibration cal = calibrate(spec);
        const LrtDecision dec = lrt_reject(sample.y, spec, cal, lr.seed ^ 0x61757864ULL);
        json out;
        out["schema_version"] = kSchemaVersion;
        out["mode"] = lr.mode;
        out["k"] = cal.k;
        out["xi"] = cal.xi;
        out["n_contributing"] = cal.n_contributing;
        out["exact"] = cal.exact;
        out["lambda"] = dec.lambda;
        out["reject"] = dec.reject;
        out["size"] = lrt_power(spec.p_null, spec, cal);
        out["power"] = lrt_power(spec.p_alt, spec, cal);
        json flags{{"data", lr.data},   {"p-alt", lr.p_alt},
                   {"b", lr.b},         {"alpha", lr.alpha},
                   {"mode", lr.mode},   {"exact-limit", lr.exact_limit},
                   {"cal-draws", lr.cal_draws}, {"seed", lr.seed},
                   {"threads", threads}};
        Sink(lr.out).deliver(out.dump(2) + "\n", "lrt", flags, timer.seconds());
    });

    // ---- mc ----
    auto* c_mc = app.add_subcommand("mc", "Monte Carlo experiment over a theta grid");
    struct {
        int design = 1;
        double theta0 = 1.0;
        int n = 100;
        int reps = 500;
        double grid_lo = 0.0, grid_hi = 0.0;
        int grid_points = 601;
        double alpha = 0.10;
        double eps = kDefaultEpsilon;
        int draws = 500;
        std::uint64_t seed = 0;
        int df = 3;
        int lrt_draws = 20000;
        std::string out;
        bool lo_set = false, hi_set = false;
    } mc;
    c_mc->add_option("--design", mc.design, "error design 1..4")->required();
    c_mc->add_option("--theta0", mc.theta0, "true slope coefficient");
    c_mc->add_option("--n", mc.n, "sample size");
    c_mc->add_option("--reps", mc.reps, "outcome replications");
    auto* glo = c_mc->add_option("--grid-lo", mc.grid_lo, "grid lower endpoint (default theta0-3)");
    auto* ghi = c_mc->add_option("--grid-hi", mc.grid_hi, "grid upper endpoint (default theta0+3)");
    c_mc->add_option("--grid-points", mc.grid_points, "number of grid points");
    c_mc->add_option("--alpha", mc.alpha, "test level");
    c_mc->add_option("--eps", mc.eps, "studentization floor");
    c_mc->add_option("--draws", mc.draws, "simulated sign draws");
    c_mc->add_option("--seed", mc.seed, "rng seed");
    c_mc->add_option("--df", mc.df, "degrees of freedom for design 3");
    c_mc->add_option("--lrt-draws", mc.lrt_draws, "LRT calibration budget");
    c_mc->add_option("--out", mc.out, "output path (stdout if omitted)");
    c_mc->callback([&] {
        Timer timer;
        DgpSpec dgp;
        dgp.design = static_cast<Design>(mc.design);
        dgp.theta0 = mc.theta0;
        dgp.n = mc.n;
        dgp.seed = mc.seed;
        dgp.df = mc.df;
        const double lo = glo->count() ? mc.grid_lo : mc.theta0 - 3.0;
        const double hi = ghi->count() ? mc.grid_hi : mc.theta0 + 3.0;
        McConfig cfg;
        cfg.thetas = make_grid(1, lo, hi, mc.grid_points).thetas;
        cfg.reps = mc.reps;
        cfg.alpha = mc.alpha;
        cfg.epsilon = mc.eps;
        cfg.rad_draws = mc.draws;
        cfg.lrt_mc_draws = mc.lrt_draws;
        const McResult res = run_experiment(dgp, cfg, threads);
        json flags{{"design", mc.design},   {"theta0", mc.theta0},
                   {"n", mc.n},             {"reps", mc.reps},
                   {"grid-lo", lo},         {"grid-hi", hi},
                   {"grid-points", mc.grid_points}, {"alpha", mc.alpha},
                   {"eps", mc.eps},         {"draws", mc.draws},
                   {"seed", mc.seed},       {"df", mc.df},
                   {"lrt-draws", mc.lrt_draws}, {"threads", threads}};
        Sink(mc.out).deliver(res.to_csv(), "mc", flags, timer.seconds());
    });

    // ---- cells ----
    auto* c_cells = app.add_subcommand("cells", "sign cells of the covariate arrangement");
    struct {
        std::string data, out;
    } ce;
    c_cells->add_option("--data", ce.data, "covariate csv (x1..xK)")->required();
    c_cells->add_option("--out", ce.out, "output path (stdout if omitted)");
    c_cells->callback([&] {
        Timer timer;
        const Eigen::MatrixXd x = load_covariates(ce.data);
        const CellEnumeration enumd = enumerate_cells(x);
        std::string csv = "# schema_version=1\n# count=" + std::to_string(enumd.witnesses.size()) + "\ncell";
        for (int k = 1; k <= x.cols(); ++k) csv += ",v" + std::to_string(k);
        csv += "\n";
        for (std::size_t c = 0; c < enumd.witnesses.size(); ++c) {
            csv += std::to_string(c);
            for (Eigen::Index k = 0; k < enumd.witnesses[c].size(); ++k)
                csv += "," + fmt_double(enumd.witnesses[c][k]);
            csv += "\n";
        }
        json flags{{"data", ce.data}, {"threads", threads}};
        Sink(ce.out).deliver(csv, "cells", flags, timer.seconds());
    });

    // ---- instruments ----
    auto* c_inst = app.add_subcommand("instruments", "instrument directions for a covariate set");
    struct {
        std::string data, out;
    } in;
    c_inst->add_option("--data", in.data, "covariate csv (x1..xK)")->required();
    c_inst->add_option("--out", in.out, "output path (stdout if omitted)");
    c_inst->callback([&] {
        Timer timer;
        const Eigen::MatrixXd x = load_covariates(in.data);
        const InstrumentSets inst = build_instruments(x);
        std::string csv = "# schema_version=1\nside";
        for (int k = 1; k <= x.cols(); ++k) csv += ",v" + std::to_string(k);
        csv += "\n";
        auto emit = [&](const std::vector<Eigen::VectorXd>& dirs, const char* tag) {
            for (const auto& v : dirs) {
                csv += tag;
                for (Eigen::Index k = 0; k < v.size(); ++k) csv += "," + fmt_double(v[k]);
                csv += "\n";
            }
        };
        emit(inst.v_upper, "u");
        emit(inst.v_lower, "l");
        json flags{{"data", in.data}, {"threads", threads}};
        Sink(in.out).deliver(csv, "instruments", flags, timer.seconds());
    });

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::Success& e) {
        app.exit(e); // help/version request
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n" << app.help() << std::flush;
        return 1;
    }
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    try {
        return dispatch(args);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace maxscore
