#pragma once

#include <string>
#include <string_view>

namespace autoens {

/// Shortest text that parses back to the same double; "inf"/"-inf"/"nan" for non-finite values.
std::string format_double(double v);

/// Whole-field parse of a decimal number ("1280." and "1e-3" included); throws ValidationError otherwise.
double parse_double(std::string_view text);

}  // namespace autoens
