#include "mdinet/stats_io.hpp"

#include <fstream>
#include <sstream>
#include <vector>

namespace mdinet {

void write_statistics(std::ostream& out, const SessionStatistics& stats) {
    out << kStatisticsHeader << "\n";
    for (Basis basis : {Basis::Z, Basis::X}) {
        for (IntensityLabel a : kIntensityLabels) {
            for (IntensityLabel b : kIntensityLabels) {
                const CellCounts& c = stats.cell(a, b, basis);
                out << stats.pair_id << ',' << to_string(a) << ',' << to_string(b) << ','
                    << to_string(basis) << ',' << c.sent << ',' << c.coincidences << ','
                    << c.errors << "\n";
            }
        }
    }
}

void write_statistics_file(const std::string& path, const SessionStatistics& stats) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open for writing: " + path);
    write_statistics(out, stats);
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    return fields;
}

std::uint64_t parse_count(const std::string& s, int line_no) {
    if (s.empty()) throw ParseError("line " + std::to_string(line_no) + ": empty count");
    std::uint64_t value = 0;
    for (char ch : s) {
        if (ch < '0' || ch > '9')
            throw ParseError("line " + std::to_string(line_no) + ": bad count '" + s + "'");
        value = value * 10 + (ch - '0');
    }
    return value;
}

}  // namespace

SessionStatistics parse_statistics(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("line 1: empty statistics document");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kStatisticsHeader)
        throw ParseError("line 1: expected header '" + std::string(kStatisticsHeader) + "'");

    SessionStatistics stats;
    bool seen[18] = {};
    int line_no = 1;
    bool first_row = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != 7)
            throw ParseError("line " + std::to_string(line_no) + ": expected 7 fields, got " +
                             std::to_string(fields.size()));
        IntensityLabel a, b;
        Basis basis;
        try {
            a = intensity_label_from_string(fields[1]);
            b = intensity_label_from_string(fields[2]);
            basis = basis_from_string(fields[3]);
        } catch (const DomainError& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (first_row) {
            stats.pair_id = fields[0];
            first_row = false;
        } else if (fields[0] != stats.pair_id) {
            throw ParseError("line " + std::to_string(line_no) + ": pair_id mismatch '" +
                             fields[0] + "' vs '" + stats.pair_id + "'");
        }
        const int idx = cell_index(a, b, basis);
        if (seen[idx])
            throw ParseError("line " + std::to_string(line_no) + ": duplicate cell");
        seen[idx] = true;
        CellCounts& c = stats.cells[idx];
        c.sent = parse_count(fields[4], line_no);
        c.coincidences = parse_count(fields[5], line_no);
        c.errors = parse_count(fields[6], line_no);
        if (c.errors > c.coincidences || c.coincidences > c.sent)
            throw ParseError("line " + std::to_string(line_no) +
                             ": require err <= coinc <= sent");
        stats.n_pulses += c.sent;
    }
    for (int i = 0; i < 18; ++i)
        if (!seen[i]) throw ParseError("missing cell record (18 cells required)");
    return stats;
}

SessionStatistics parse_statistics_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open: " + path);
    return parse_statistics(in);
}

}  // namespace mdinet
