#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "battkit/errors.hpp"

namespace battkit {

inline constexpr const char* kToolVersion = "battkit 0.1.0";

/// FNV-1a over raw bytes; used for config provenance and vertex hashes.
std::uint64_t fnv1a(const void* data, std::size_t bytes,
                    std::uint64_t seed = 1469598103934665603ull);
std::uint64_t fnv1a(const std::string& text);

/// `# <tool> config=<hash> seed=<seed>` line prepended to output files.
std::string provenance_line(std::uint64_t config_hash, std::uint64_t seed);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// Column-oriented CSV writer: header + provenance comment, one row per
/// sample index. All columns must share one length.
void write_result_csv(const std::string& path,
                      const std::vector<std::string>& column_names,
                      const std::vector<const std::vector<double>*>& columns,
                      const std::string& provenance);

}  // namespace battkit
