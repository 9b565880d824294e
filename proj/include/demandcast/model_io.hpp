#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "demandcast/eval.hpp"

namespace demandcast {

// Flat text model format, one item per line:
//
//   demandcast-model 1
//   family <mlp|rbf|svr>
//   <key> <value>                 hyperparameters, family specific
//   <block> <rows> <cols>         followed by `rows` lines of `cols` numbers
//   end
//
// Numbers are written with 17 significant digits so a reload is bit-exact.
// MLP blocks: w1, w2. RBF: centres, widths (M x 1), weights. SVR:
// support_vectors, coefficients (S x 1); scalars b and training_error.

void write_model(std::ostream& out, const TrainedModel& model);
TrainedModel read_model(std::istream& in);

void save_model(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel load_model(const std::filesystem::path& path);

/// One-paragraph human summary: family, hyperparameters, parameter counts, training error.
std::string summarize_model(const TrainedModel& model);

}  // namespace demandcast
