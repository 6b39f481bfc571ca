#pragma once

#include "mdinet/optics.hpp"

#include <iosfwd>
#include <string>

namespace mdinet {

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr const char* kStatisticsHeader = "pair_id,a,b,basis,sent,coinc,err";

/// Line-delimited cell records, one line per cell, 18 cells after the header.
/// Row order: basis Z then X; a outer, b inner, each in vacuum/decoy/signal
/// order. ASCII decimal counts, comma separators, LF line endings.
void write_statistics(std::ostream& out, const SessionStatistics& stats);
void write_statistics_file(const std::string& path, const SessionStatistics& stats);

SessionStatistics parse_statistics(std::istream& in);  // throws ParseError with line no.
SessionStatistics parse_statistics_file(const std::string& path);

}  // namespace mdinet
