#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "lineba/harness.h"

namespace lineba {

// A generated world together with the observations drawn from it.
struct WorldFile {
  SyntheticWorld world;
  ObservationSet observations;
};

// JSON text; see README for the layout. Doubles round-trip exactly.
std::string world_to_json(const WorldFile& file);
// Throws kConfig on malformed input.
WorldFile world_from_json(const std::string& text);
void save_world(const std::filesystem::path& path, const WorldFile& file);
WorldFile load_world(const std::filesystem::path& path);

// One JSON object per run, no embedded newlines.
std::string report_to_json_line(const RunReport& report);
void write_jsonl(std::ostream& out, const std::vector<RunReport>& reports);

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
void write_summary_table(std::ostream& out, const std::vector<SummaryRow>& rows);

// "timestamp tx ty tz qx qy qz qw" per line.
void write_tum(std::ostream& out, const Trajectory& trajectory);
Trajectory read_tum(std::istream& in);

}  // namespace lineba
