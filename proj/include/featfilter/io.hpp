#pragma once

#include <string>
#include <vector>

namespace ff {

class LabelMap;

std::string read_file(const std::string& path);

// Writes via a sibling temp file plus rename, so readers never observe a
// partially written artifact and re-runs are byte-identical.
void write_file_atomic(const std::string& path, const std::string& content);

// Shortest round-trip decimal representation of a double.
std::string fmt_double(double v);

std::string path_join(const std::string& a, const std::string& b);

// Binary PGM (P5) with maxval = num_classes - 1; one byte per pixel.
void save_pgm(const std::string& path, const LabelMap& labels, int num_classes);
LabelMap load_pgm(const std::string& path);

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace ff
