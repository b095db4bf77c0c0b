#pragma once

#include <filesystem>
#include <string>

#include "darnet/pipeline.hpp"

namespace darnet {

std::string report_csv(const BenchmarkReport& report);
std::string report_markdown(const BenchmarkReport& report);
std::string phase_table_csv(const PhaseTable& table);
std::string phase_table_markdown(const PhaseTable& table);

// Writes `path` as CSV and the markdown table next to it with a .md extension.
void write_report(const BenchmarkReport& report, const std::filesystem::path& path);
void write_phase_table(const PhaseTable& table, const std::filesystem::path& path);

// Aligned pipe table; the first row is the header.
std::string markdown_table(const std::vector<std::vector<std::string>>& rows);

} // namespace darnet
