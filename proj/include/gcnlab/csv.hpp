#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace gcnlab {

// 9-significant-digit float formatting shared by every CSV writer.
std::string csv_float(double v);

// Writes header + rows to `path` (comma separated, LF endings) through a
// temporary file and an atomic rename, so failed commands never leave a
// partially written CSV behind.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace gcnlab
