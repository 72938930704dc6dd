#pragma once

#include <vector>

#include "spikecpc/gradcheck.hpp"

namespace spikecpc {

/// Every registered gradient check (float64): dense, dense+BCE composite,
/// conv2d, GRU through 3 steps, the surrogate-LIF encoder path and the
/// end-to-end CPC toy. Used by the CLI `gradcheck` subcommand and by the
/// acceptance suite.
std::vector<nn::GradCheckReport> gradcheck_all();

/// Aligned pass/fail table.
void print_gradcheck_table(const std::vector<nn::GradCheckReport>& reports);

}  // namespace spikecpc
