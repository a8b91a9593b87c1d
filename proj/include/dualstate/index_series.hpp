#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dualstate/common.hpp"

namespace dualstate {

// One value per calendar month; months are Date::month_key() values, contiguous.
struct IndexSeries {
    std::string name;
    std::vector<int> months;
    std::vector<double> values;

    std::optional<double> at(int month_key) const;
    // Zero mean, unit population variance. Constant series are returned centred.
    IndexSeries standardized() const;
};

// Columns: month (YYYY-MM), value.
void write_index_csv(std::ostream& out, const IndexSeries& s);
IndexSeries read_index_csv(std::istream& in, const std::string& name);
IndexSeries read_index_file(const std::filesystem::path& path);

}  // namespace dualstate
