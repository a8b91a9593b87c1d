#include "dualstate/matrix_io.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "dualstate/common.hpp"

namespace dualstate {

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << fmt_double(m(i, j));
        }
        out << '\n';
    }
}

Eigen::MatrixXd read_matrix_csv(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    bool header_allowed = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        std::vector<double> row;
        bool ok = true;
        std::size_t start = 0;
        for (;;) {
            const auto pos = line.find(',', start);
            const std::string_view f = std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start);
            double v = 0.0;
            const auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc() || p != f.data() + f.size()) ok = false;
            row.push_back(v);
            if (pos == std::string::npos) break;
            start = pos + 1;
        }
        if (!ok) {
            if (header_allowed && rows.empty()) {
                header_allowed = false;
                continue;
            }
            throw_data("matrix line " + std::to_string(lineno) + ": malformed number");
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw_data("matrix line " + std::to_string(lineno) + ": ragged row");
        rows.push_back(std::move(row));
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

}  // namespace dualstate
