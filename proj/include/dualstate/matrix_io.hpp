#pragma once

#include <iosfwd>

#include <Eigen/Dense>

namespace dualstate {

// Plain comma-separated rows in shortest round-trip form, no header.
void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m);
// Skips '#' lines and one leading non-numeric header row. Throws Data on ragged rows.
Eigen::MatrixXd read_matrix_csv(std::istream& in);

}  // namespace dualstate
