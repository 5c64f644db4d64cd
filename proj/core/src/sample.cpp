#include "sievepi/sample.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "sievepi/errors.hpp"

namespace sievepi {

void Sample::validate() const {
    if (x.rows() < 1) throw DataError("sample must contain at least one row");
    if (x.cols() < 1) throw DataError("sample must contain at least one covariate");
    if (z.size() != x.rows()) throw DataError("outcome length does not match covariate rows");
    if (!x.allFinite() || !z.allFinite()) throw DataError("sample contains non-finite values");
    if (a) {
        if (a->size() != x.rows()) throw DataError("treatment length does not match covariate rows");
        for (Eigen::Index i = 0; i < a->size(); ++i) {
            const int v = (*a)[i];
            if (v != 0 && v != 1) throw DataError("treatment values must be 0 or 1");
        }
    }
}

Sample Sample::subset(const std::vector<int>& idx) const {
    Sample out;
    const auto m = static_cast<Eigen::Index>(idx.size());
    out.x.resize(m, x.cols());
    out.z.resize(m);
    if (a) out.a = Eigen::VectorXi(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        out.x.row(i) = x.row(idx[i]);
        out.z[i] = z[idx[i]];
        if (a) (*out.a)[i] = (*a)[idx[i]];
    }
    return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double(const std::string& tok, int line_no) {
    const char* begin = tok.data();
    const char* end = begin + tok.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (*(end - 1) == ' ' || *(end - 1) == '\t')) --end;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        throw DataError("malformed numeric field '" + tok + "' at line " + std::to_string(line_no));
    return value;
}

}  // namespace

Sample read_sample_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open data file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataError("empty data file: " + path);
    const auto header = split_csv_line(line);

    std::vector<int> x_cols;  // column position -> covariate index
    int z_col = -1, a_col = -1;
    for (std::size_t j = 0; j < header.size(); ++j) {
        const std::string& h = header[j];
        if (h == "z") {
            z_col = static_cast<int>(j);
        } else if (h == "a") {
            a_col = static_cast<int>(j);
        } else if (h.size() >= 2 && h[0] == 'x') {
            x_cols.push_back(static_cast<int>(j));
        } else {
            throw DataError("unrecognized column '" + h + "' in header (expected x1..xd, z, a)");
        }
    }
    if (z_col < 0) throw DataError("missing 'z' column in header");
    if (x_cols.empty()) throw DataError("missing covariate columns x1..xd in header");

    std::vector<std::vector<double>> x_rows;
    std::vector<double> z_vals;
    std::vector<int> a_vals;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw DataError("wrong field count at line " + std::to_string(line_no));
        std::vector<double> row(x_cols.size());
        for (std::size_t j = 0; j < x_cols.size(); ++j)
            row[j] = parse_double(fields[x_cols[j]], line_no);
        x_rows.push_back(std::move(row));
        z_vals.push_back(parse_double(fields[z_col], line_no));
        if (a_col >= 0) {
            const double av = parse_double(fields[a_col], line_no);
            if (av != 0.0 && av != 1.0)
                throw DataError("treatment value must be 0 or 1 at line " + std::to_string(line_no));
            a_vals.push_back(static_cast<int>(av));
        }
    }
    if (x_rows.empty()) throw DataError("data file has no rows: " + path);

    Sample s;
    const auto n = static_cast<Eigen::Index>(x_rows.size());
    const auto d = static_cast<Eigen::Index>(x_cols.size());
    s.x.resize(n, d);
    s.z.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) s.x(i, j) = x_rows[i][j];
        s.z[i] = z_vals[i];
    }
    if (a_col >= 0) {
        s.a = Eigen::VectorXi(n);
        for (Eigen::Index i = 0; i < n; ++i) (*s.a)[i] = a_vals[i];
    }
    s.validate();
    return s;
}

void write_sample_csv(const Sample& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open output file: " + path);
    out.precision(17);
    for (Eigen::Index j = 0; j < s.d(); ++j) out << "x" << (j + 1) << ",";
    out << "z";
    if (s.a) out << ",a";
    out << "\n";
    for (Eigen::Index i = 0; i < s.n(); ++i) {
        for (Eigen::Index j = 0; j < s.d(); ++j) out << s.x(i, j) << ",";
        out << s.z[i];
        if (s.a) out << "," << (*s.a)[i];
        out << "\n";
    }
}

}  // namespace sievepi
