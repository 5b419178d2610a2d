#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "hardylab/capacity.hpp"
#include "hardylab/content.hpp"
#include "hardylab/fatness.hpp"
#include "hardylab/hardy.hpp"

namespace hardylab {

// Shortest round-trip decimal; "inf", "-inf", "nan" for non-finite values.
std::string format_double(double v);

// RFC 4180 quoting when needed.
std::string csv_field(std::string_view s);
std::string csv_row(const std::vector<std::string>& fields);

// Lower-case alphanumerics and '_' only, for file names.
std::string file_stem(std::string_view label);

std::string to_json(const CapacityResult& r);
std::string to_json(const FatnessProfile& f);
std::string to_json(const HardyReport& r);
std::string to_json(const WannebroTrace& t);
std::string to_json(const LevelSetReport& r);
std::string to_json(const ContentEstimate& e, const GridShape& shape);
std::string to_json(const DensityFloor& f);

std::string fatness_csv(const FatnessProfile& f);
std::string density_csv(const DensityFloor& f, const GridShape& shape);
std::string layer_csv(const WannebroTrace& t);

}  // namespace hardylab
