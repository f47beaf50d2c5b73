#pragma once

#include <cstdint>
#include <string>

namespace cflab {

// Shortest decimal string that round-trips to the same double (std::to_chars
// general form).  Used for every floating point value written to CSV so that
// identical runs produce byte-identical files.
std::string format_double(double value);

std::string format_int(std::int64_t value);

}  // namespace cflab
