#pragma once

#include <string>
#include <vector>

namespace spikecpc {

/// Validation-accuracy curve with a mean line and a +/- std band over seeds.
/// Runs may have different lengths (early stopping); the band is only drawn
/// over epochs every run reached, the mean line continues over the runs still
/// alive. Plain hand-written SVG, no plotting dependency.
void write_accuracy_svg(const std::string& path, const std::string& title,
                        const std::vector<std::vector<double>>& per_seed_val_acc);

}  // namespace spikecpc
