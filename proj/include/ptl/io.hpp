// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ptl {

/// Writes `bytes` to a sibling temporary file and renames it over `path`, so readers never see a
/// partial file. Parent directories are created as needed.
void write_atomic(const std::filesystem::path& path, std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

/// Shortest decimal that round-trips to the same double. Locale independent.
std::string format_double(double value);

/// Joins already formatted cells with commas and a trailing newline.
std::string csv_row(const std::vector<double>& values);

}  // namespace ptl
