#include <doctest.h>

#include <sstream>

#include "dualstate/index_series.hpp"
#include "dualstate/matrix_io.hpp"
#include "support.hpp"

using namespace dualstate;

TEST_CASE("index csv round trip") {
    IndexSeries s{"sentiment", {}, {0.25, -1.5, 3.0}};
    const int m0 = Date{2009, 11, 1}.month_key();
    s.months = {m0, m0 + 1, m0 + 2};
    std::ostringstream out;
    write_index_csv(out, s);
    CHECK(out.str() == "month,value\n2009-11,0.25\n2009-12,-1.5\n2010-01,3\n");
    std::istringstream in("# note\n" + out.str());
    const auto back = read_index_csv(in, "sentiment");
    CHECK(back.months == s.months);
    CHECK(back.values == s.values);
    CHECK(back.at(m0 + 1) == -1.5);
    CHECK_FALSE(back.at(m0 + 3).has_value());
}

TEST_CASE("index csv errors") {
    std::istringstream gap("month,value\n2009-01,1\n2009-03,2\n");
    CHECK_THROWS_WITH_AS(read_index_csv(gap, "x"), doctest::Contains("line 3"), Error);
    std::istringstream bad("2009-01,abc\n");
    CHECK_THROWS_AS(read_index_csv(bad, "x"), Error);
    CHECK_THROWS_AS(read_index_file("/nonexistent/index.csv"), Error);
}

TEST_CASE("standardized index") {
    IndexSeries s{"x", {1, 2, 3, 4}, {1.0, 2.0, 3.0, 6.0}};
    const auto z = s.standardized();
    CHECK(testsupport::two_pass_mean(z.values) == doctest::Approx(0.0));
    CHECK(testsupport::two_pass_var(z.values) * 3.0 / 4.0 == doctest::Approx(1.0));
    IndexSeries flat{"f", {1, 2}, {5.0, 5.0}};
    CHECK(flat.standardized().values == std::vector<double>{0.0, 0.0});
}

TEST_CASE("property: matrix csv round trips exactly") {
    testsupport::Gen g(121);
    for (int rep = 0; rep < 20; ++rep) {
        Eigen::MatrixXd m = g.matrix(g.integer(1, 12), g.integer(1, 9)) * g.uniform(1e-6, 1e6);
        std::ostringstream out;
        out << "c0,c1\n";
        write_matrix_csv(out, m);
        std::istringstream in(out.str());
        CHECK(read_matrix_csv(in) == m);
    }
}

TEST_CASE("matrix csv rejects ragged and malformed rows") {
    std::istringstream ragged("1,2\n3\n");
    CHECK_THROWS_WITH_AS(read_matrix_csv(ragged), doctest::Contains("ragged"), Error);
    std::istringstream junk("1,2\nx,4\n");
    CHECK_THROWS_AS(read_matrix_csv(junk), Error);
    std::istringstream empty("");
    CHECK(read_matrix_csv(empty).size() == 0);
}
