#include "maxscore/instruments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace maxscore {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFeasTol = 1e-9;   // margin below this counts as empty
constexpr double kPivotTol = 1e-11; // reduced-cost / pivot-element cutoff

// Dense tableau simplex for max c.x s.t. A x <= rhs, x >= 0, rhs >= 0.
// Bland's rule throughout; the half-space rows make the start degenerate.
struct SimplexResult {
    double value;
    std::vector<double> x;
};

SimplexResult simplex_max(const std::vector<std::vector<double>>& a,
                          const std::vector<double>& rhs, const std::vector<double>& c) {
    const int m = static_cast<int>(a.size());
    const int nv = static_cast<int>(c.size());
    const int cols = nv + m + 1;
    std::vector<std::vector<double>> t(static_cast<std::size_t>(m + 1),
                                       std::vector<double>(static_cast<std::size_t>(cols), 0.0));
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < nv; ++j) t[i][j] = a[i][j];
        t[i][nv + i] = 1.0;
        t[i][cols - 1] = rhs[static_cast<std::size_t>(i)];
    }
    for (int j = 0; j < nv; ++j) t[m][j] = c[static_cast<std::size_t>(j)];

    std::vector<int> basis(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = nv + i;

    for (long iter = 0;; ++iter) {
        if (iter > 200000) throw std::logic_error("simplex: iteration cap hit");
        int enter = -1;
        for (int j = 0; j < nv + m; ++j) {
            if (t[m][j] > kPivotTol) {
                enter = j;
                break; // smallest index, Bland
            }
        }
        if (enter < 0) break;
        int leave = -1;
        double best_ratio = 0.0;
        for (int i = 0; i < m; ++i) {
            if (t[i][enter] > kPivotTol) {
                const double ratio = t[i][cols - 1] / t[i][enter];
                if (leave < 0 || ratio < best_ratio - 1e-15 ||
                    (std::abs(ratio - best_ratio) <= 1e-15 &&
                     basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
                    leave = i;
                    best_ratio = ratio;
                }
            }
        }
        if (leave < 0) throw std::logic_error("simplex: unbounded program");
        const double piv = t[leave][enter];
        for (int j = 0; j < cols; ++j) t[leave][j] /= piv;
        for (int i = 0; i <= m; ++i) {
            if (i == leave) continue;
            const double f = t[i][enter];
            if (f == 0.0) continue;
            for (int j = 0; j < cols; ++j) t[i][j] -= f * t[leave][j];
        }
        basis[static_cast<std::size_t>(leave)] = enter;
    }

    SimplexResult res;
    res.value = -t[m][cols - 1];
    res.x.assign(static_cast<std::size_t>(nv), 0.0);
    for (int i = 0; i < m; ++i)
        if (basis[static_cast<std::size_t>(i)] < nv)
            res.x[static_cast<std::size_t>(basis[static_cast<std::size_t>(i)])] = t[i][cols - 1];
    return res;
}

} // namespace

RatioStats ratio_stats(const Eigen::MatrixXd& x) {
    if (x.cols() != 2) throw ValidationError("ratio stats: requires exactly 2 covariate columns");
    if (x.rows() < 1) throw ValidationError("ratio stats: n >= 1 required");
    RatioStats rs;
    rs.z.resize(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double x1 = x(i, 0), x2 = x(i, 1);
        double z;
        if (x2 == 0.0)
            z = x1 > 0.0 ? kInf : (x1 < 0.0 ? -kInf : 0.0);
        else
            z = x1 / x2;
        rs.z[static_cast<std::size_t>(i)] = z;
    }
    rs.sorted = rs.z;
    std::sort(rs.sorted.begin(), rs.sorted.end());
    return rs;
}

namespace {

// Interior representative of the open interval (lo, hi); callers skip
// empty intervals beforehand.
double interval_rep(double lo, double hi) {
    if (lo == -kInf && hi == kInf) return 0.0;
    if (lo == -kInf) return hi - 1.0 - std::abs(hi);
    if (hi == kInf) return lo + 1.0 + std::abs(lo);
    return 0.5 * (lo + hi);
}

void append_interval_dirs(const std::vector<double>& endpoints, double lead,
                          std::vector<Eigen::VectorXd>& out) {
    std::vector<double> e = endpoints;
    e.insert(e.begin(), -kInf);
    e.push_back(kInf);
    for (std::size_t j = 0; j + 1 < e.size(); ++j) {
        if (!(e[j] < e[j + 1])) continue;
        Eigen::VectorXd v(2);
        v << lead, interval_rep(e[j], e[j + 1]);
        out.push_back(v);
    }
}

} // namespace

InstrumentSets build_instruments_2d(const Eigen::MatrixXd& x) {
    const RatioStats rs = ratio_stats(x);
    std::vector<double> upper_endpoints(rs.sorted.size());
    for (std::size_t i = 0; i < rs.sorted.size(); ++i)
        upper_endpoints[i] = -rs.sorted[rs.sorted.size() - 1 - i];
    std::vector<Eigen::VectorXd> dirs;
    append_interval_dirs(upper_endpoints, 1.0, dirs);
    append_interval_dirs(rs.sorted, -1.0, dirs);
    InstrumentSets inst;
    inst.v_upper = dirs;
    inst.v_lower = std::move(dirs);
    return inst;
}

FeasibleResult strict_feasible(const std::vector<HalfSpace>& constraints, int k) {
    if (k < 1) throw ValidationError("strict feasible: K >= 1 required");
    for (const auto& h : constraints)
        if (h.a.size() != k) throw ValidationError("strict feasible: constraint dimension mismatch");
    FeasibleResult res;
    if (constraints.empty()) {
        res.feasible = true;
        res.margin = kInf;
        res.witness = Eigen::VectorXd::Zero(k);
        return res;
    }

    // Variables (v+, v-, t) >= 0 with v = v+ - v-. Rows: sign_j (a_j . v) >= t
    // rewritten as -s a_j . v+ + s a_j . v- + t <= 0, plus v_k+ + v_k- <= 1.
    const int j_rows = static_cast<int>(constraints.size());
    const int m = j_rows + k;
    const int nv = 2 * k + 1;
    std::vector<std::vector<double>> a(static_cast<std::size_t>(m),
                                       std::vector<double>(static_cast<std::size_t>(nv), 0.0));
    std::vector<double> rhs(static_cast<std::size_t>(m), 0.0);
    for (int j = 0; j < j_rows; ++j) {
        const auto& h = constraints[static_cast<std::size_t>(j)];
        const double s = h.positive ? 1.0 : -1.0;
        for (int kk = 0; kk < k; ++kk) {
            a[j][kk] = -s * h.a[kk];
            a[j][k + kk] = s * h.a[kk];
        }
        a[j][2 * k] = 1.0;
    }
    for (int kk = 0; kk < k; ++kk) {
        a[j_rows + kk][kk] = 1.0;
        a[j_rows + kk][k + kk] = 1.0;
        rhs[static_cast<std::size_t>(j_rows + kk)] = 1.0;
    }
    std::vector<double> c(static_cast<std::size_t>(nv), 0.0);
    c[static_cast<std::size_t>(2 * k)] = 1.0;

    const SimplexResult lp = simplex_max(a, rhs, c);
    res.margin = lp.value;
    res.feasible = lp.value > kFeasTol;
    res.witness = Eigen::VectorXd(k);
    for (int kk = 0; kk < k; ++kk)
        res.witness[kk] = lp.x[static_cast<std::size_t>(kk)] - lp.x[static_cast<std::size_t>(k + kk)];
    return res;
}

CellEnumeration enumerate_cells(const Eigen::MatrixXd& x) {
    const int n = static_cast<int>(x.rows());
    const int k = static_cast<int>(x.cols());
    if (k < 2) throw ValidationError("enumerate cells: K >= 2 required");
    if (n < 1) throw ValidationError("enumerate cells: n >= 1 required");
    if (n > 25 || k > 4)
        throw ValidationError("enumerate cells: supported range is n <= 25, K <= 4");
    for (int i = 0; i < n; ++i)
        if (x.row(i).norm() == 0.0)
            throw ValidationError("enumerate cells: row " + std::to_string(i + 1) + " is the zero vector");

    // Cells are strict sign vectors over the rows processed so far; each
    // split candidate is checked with the max-margin program.
    std::vector<std::vector<std::int8_t>> cells;
    cells.push_back({});
    for (int i = 0; i < n; ++i) {
        std::vector<std::vector<std::int8_t>> next;
        for (const auto& cell : cells) {
            for (int s : {+1, -1}) {
                std::vector<HalfSpace> cons;
                cons.reserve(cell.size() + 1);
                for (std::size_t j = 0; j < cell.size(); ++j)
                    cons.push_back({x.row(static_cast<Eigen::Index>(j)).transpose(), cell[j] > 0});
                cons.push_back({x.row(i).transpose(), s > 0});
                if (strict_feasible(cons, k).feasible) {
                    auto grown = cell;
                    grown.push_back(static_cast<std::int8_t>(s));
                    next.push_back(std::move(grown));
                }
            }
        }
        cells = std::move(next);
    }

    CellEnumeration out;
    out.witnesses.reserve(cells.size());
    out.patterns.reserve(cells.size());
    for (auto& cell : cells) {
        std::vector<HalfSpace> cons;
        cons.reserve(cell.size());
        for (std::size_t j = 0; j < cell.size(); ++j)
            cons.push_back({x.row(static_cast<Eigen::Index>(j)).transpose(), cell[j] > 0});
        FeasibleResult fr = strict_feasible(cons, k);
        out.witnesses.push_back(std::move(fr.witness));
        out.patterns.push_back(std::move(cell));
    }
    return out;
}

InstrumentSets build_instruments_cells(const Eigen::MatrixXd& x) {
    CellEnumeration ce = enumerate_cells(x);
    InstrumentSets inst;
    inst.v_upper = ce.witnesses;
    inst.v_lower = std::move(ce.witnesses);
    return inst;
}

InstrumentSets build_instruments(const Eigen::MatrixXd& x) {
    return x.cols() == 2 ? build_instruments_2d(x) : build_instruments_cells(x);
}

namespace {

std::uint64_t checked_binom(std::uint64_t n, std::uint64_t r) {
    if (r > n) return 0;
    r = std::min(r, n - r);
    unsigned __int128 acc = 1;
    for (std::uint64_t j = 1; j <= r; ++j) {
        acc = acc * (n - r + j) / j;
        if (acc > std::numeric_limits<std::uint64_t>::max())
            throw ValidationError("cover bound: value exceeds 64-bit range");
    }
    return static_cast<std::uint64_t>(acc);
}

} // namespace

std::uint64_t cover_bound(int n, int k) {
    if (n < 1 || k < 1) throw ValidationError("cover bound: n >= 1 and K >= 1 required");
    unsigned __int128 sum = 0;
    for (int j = 0; j < k; ++j) {
        sum += checked_binom(static_cast<std::uint64_t>(n - 1), static_cast<std::uint64_t>(j));
        if (2 * sum > std::numeric_limits<std::uint64_t>::max())
            throw ValidationError("cover bound: value exceeds 64-bit range");
    }
    return static_cast<std::uint64_t>(2 * sum);
}

} // namespace maxscore
