#pragma once

#include <span>
#include <vector>

namespace ecoval {

// Ranks starting at 1; tied values share their average rank.
std::vector<double> average_ranks(std::span<const double> values);

// Pearson correlation of the average ranks. NaN when either side is constant.
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace ecoval
