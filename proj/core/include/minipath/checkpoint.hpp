#pragma once

#include <iosfwd>
#include <string>

#include "minipath/model.hpp"

namespace minipath {

// Text archive of a model: dims, training config, RNG state, optimizer
// moments and every parameter tensor with its shape. Doubles are written as
// hexadecimal floating point so a save/load round trip is bit-exact.
void save_checkpoint(const CoTrainModel& model, std::ostream& out);
void save_checkpoint_file(const CoTrainModel& model, const std::string& path);

CoTrainModel load_checkpoint(std::istream& in, std::string_view source_name = "<stream>");
CoTrainModel load_checkpoint_file(const std::string& path);

std::string format_hex(double v);
double parse_hex(std::string_view s);

}  // namespace minipath
