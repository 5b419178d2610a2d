#pragma once

#include <json.hpp>

#include "hardylab/capacity.hpp"
#include "hardylab/content.hpp"
#include "hardylab/fatness.hpp"
#include "hardylab/hardy.hpp"

namespace hardylab::detail {

using nlohmann::ordered_json;

// Non-finite values become strings so they survive a round trip.
ordered_json num(double v);

ordered_json json_of(const CapacityResult& r);
ordered_json json_of(const FatnessProfile& f);
ordered_json json_of(const HardyReport& r);
ordered_json json_of(const WannebroTrace& t);
ordered_json json_of(const LevelSetReport& r);
ordered_json json_of(const ContentEstimate& e, const GridShape& shape);
ordered_json json_of(const DensityFloor& f);

}  // namespace hardylab::detail
