#include "maxscore/sample.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

namespace maxscore {

Sample::Sample(Eigen::MatrixXd x_, std::vector<int> y_) : x(std::move(x_)), y(std::move(y_)) {
    if (x.rows() < 1) throw ValidationError("sample: n >= 1 required");
    if (x.cols() < 1) throw ValidationError("sample: K >= 1 required");
    if (static_cast<Eigen::Index>(y.size()) != x.rows())
        throw ValidationError("sample: y length must equal number of covariate rows");
    if (!x.allFinite()) throw ValidationError("sample: covariates must be finite");
    for (int v : y)
        if (v != 0 && v != 1) throw ValidationError("sample: y values must be 0 or 1");
}

ParamPoint::ParamPoint(Eigen::VectorXd b_) : b(std::move(b_)) {
    if (b.size() < 1) throw ValidationError("param point: K >= 1 required");
    if (!b.allFinite()) throw ValidationError("param point: coefficients must be finite");
}

CondProbs::CondProbs(Eigen::VectorXd p_) : p(std::move(p_)) {
    if (p.size() < 1) throw ValidationError("cond probs: n >= 1 required");
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (!(p[i] >= 0.0 && p[i] <= 1.0))
            throw ValidationError("cond probs: values must lie in [0,1]");
    }
}

std::vector<int> SignPattern::r_upper() const {
    std::vector<int> r(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) r[i] = s[i] >= 0 ? 1 : 0;
    return r;
}

std::vector<int> SignPattern::r_lower() const {
    std::vector<int> r(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) r[i] = s[i] <= 0 ? 1 : 0;
    return r;
}

SignPattern sign_pattern(const Eigen::MatrixXd& x, const ParamPoint& b) {
    if (x.cols() != b.b.size())
        throw ValidationError("sign pattern: covariate and coefficient dimensions differ");
    SignPattern out;
    out.s.resize(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double d = x.row(i).dot(b.b);
        out.s[static_cast<std::size_t>(i)] = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
    }
    return out;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_number(const std::string& field, int line_no) {
    const std::string t = trim(field);
    double value = 0.0;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw ValidationError("csv line " + std::to_string(line_no) + ": cannot parse number '" + t + "'");
    if (!std::isfinite(value))
        throw ValidationError("csv line " + std::to_string(line_no) + ": non-finite value");
    return value;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows; // parsed in header order
};

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    CsvTable t;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1) {
            if (line.rfind("\xef\xbb\xbf", 0) == 0) line.erase(0, 3);
            for (const auto& h : split_line(line)) t.header.push_back(trim(h));
            continue;
        }
        if (trim(line).empty()) continue;
        auto fields = split_line(line);
        if (fields.size() != t.header.size())
            throw ValidationError("csv line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(t.header.size()) + " fields, got " +
                                  std::to_string(fields.size()));
        std::vector<double> row(fields.size());
        for (std::size_t j = 0; j < fields.size(); ++j) row[j] = parse_number(fields[j], line_no);
        t.rows.push_back(std::move(row));
    }
    if (t.header.empty()) throw ValidationError("csv: missing header row");
    return t;
}

// Column indices of x1..xK in consecutive order; K inferred from the header.
std::vector<int> covariate_columns(const CsvTable& t) {
    std::vector<int> cols;
    for (int k = 1;; ++k) {
        const std::string name = "x" + std::to_string(k);
        auto it = std::find(t.header.begin(), t.header.end(), name);
        if (it == t.header.end()) break;
        cols.push_back(static_cast<int>(it - t.header.begin()));
    }
    if (cols.empty()) throw ValidationError("csv: no covariate columns x1..xK found");
    // Reject x-columns beyond the consecutive run (e.g. x1,x3 with no x2).
    for (const std::string& h : t.header) {
        if (h.size() < 2 || h[0] != 'x') continue;
        if (h.find_first_not_of("0123456789", 1) != std::string::npos) continue;
        if (h.size() > 10 || std::stoll(h.substr(1)) > static_cast<long long>(cols.size()))
            throw ValidationError("csv: covariate columns must be x1..xK without gaps; found '" + h + "'");
    }
    return cols;
}

Eigen::MatrixXd extract_x(const CsvTable& t) {
    const auto cols = covariate_columns(t);
    if (t.rows.empty()) throw ValidationError("csv: n >= 1 required");
    Eigen::MatrixXd x(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < t.rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                t.rows[i][static_cast<std::size_t>(cols[j])];
    return x;
}

} // namespace

Sample load_sample(const std::string& path) {
    const CsvTable t = read_csv(path);
    auto yit = std::find(t.header.begin(), t.header.end(), "y");
    if (yit == t.header.end()) throw ValidationError("csv: missing 'y' column");
    const std::size_t ycol = static_cast<std::size_t>(yit - t.header.begin());
    Eigen::MatrixXd x = extract_x(t);
    std::vector<int> y(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const double v = t.rows[i][ycol];
        if (v != 0.0 && v != 1.0)
            throw ValidationError("csv line " + std::to_string(i + 2) + ": y must be 0 or 1");
        y[i] = static_cast<int>(v);
    }
    return Sample(std::move(x), std::move(y));
}

Eigen::MatrixXd load_covariates(const std::string& path) {
    const CsvTable t = read_csv(path);
    Eigen::MatrixXd x = extract_x(t);
    if (!x.allFinite()) throw ValidationError("csv: covariates must be finite");
    return x;
}

CondProbs load_cond_probs(const std::string& path) {
    const CsvTable t = read_csv(path);
    auto pit = std::find(t.header.begin(), t.header.end(), "p");
    if (pit == t.header.end()) throw ValidationError("csv: missing 'p' column");
    const std::size_t pcol = static_cast<std::size_t>(pit - t.header.begin());
    if (t.rows.empty()) throw ValidationError("csv: n >= 1 required");
    Eigen::VectorXd p(static_cast<Eigen::Index>(t.rows.size()));
    for (std::size_t i = 0; i < t.rows.size(); ++i) p[static_cast<Eigen::Index>(i)] = t.rows[i][pcol];
    return CondProbs(std::move(p));
}

} // namespace maxscore
