#pragma once

// Artifact plumbing shared by the command-line tool and the acceptance suite:
// a stable config hash, deterministic number formatting, and tiny file/CSV
// helpers. Artifacts must be byte-identical across reruns with the same seed,
// so nothing here may embed wall time, locale-dependent formatting, or
// pointer-order iteration.

#include <cstdint>
#include <string>
#include <vector>

namespace multiscale {

inline constexpr const char* kToolVersion = "1.0.0";

// FNV-1a over raw bytes; applied to config file contents so every report can
// name the exact configuration that produced it.
std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t value);

// Shortest decimal form that round-trips the double exactly; C locale only.
std::string format_double(double value);

std::string read_file_bytes(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// One CSV table with a fixed header; rows are preformatted cells.
std::string render_csv(const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows);

}  // namespace multiscale
