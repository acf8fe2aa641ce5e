#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "gibbsrate/models.hpp"
#include "gibbsrate/trace.hpp"

namespace gibbsrate {

/// Shortest decimal text that parses back to exactly `x` ('.' separator).
std::string format_double(double x);
/// Strict full-string parse; throws Parse on anything else.
double parse_double(std::string_view text);

/**
 * Dataset CSV: header `i[,j[,k]],y_1..y_ℓ`, 1-based indices, LF line ends.
 */
void write_dataset_csv(std::ostream& out, const Dataset& data);
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset_csv(std::istream& in);
Dataset read_dataset_csv(const std::filesystem::path& path);

/// Trace CSV: header `sweep,<block>_<k>,...` with k 1-based inside each block.
void write_trace_csv(std::ostream& out, const ChainTrace& trace);
void write_trace_csv(const std::filesystem::path& path, const ChainTrace& trace);
/// Reads a trace back; the layout is rebuilt from the column names, the sweep column fixes burn-in and thinning.
ChainTrace read_trace_csv(std::istream& in);
ChainTrace read_trace_csv(const std::filesystem::path& path);

/// 64-bit FNV-1a hash, rendered as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace gibbsrate
