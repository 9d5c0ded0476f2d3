#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>

namespace ccpipe {

// Reads an entire UTF-8 text file; throws PipelineError(IoError) on failure.
std::string read_text_file(const std::filesystem::path& path);

// Writes via a temp file in the same directory followed by a rename, so a
// concurrent reader never sees a partial file. Throws PipelineError(IoError).
void write_text_file(const std::filesystem::path& path, std::string_view content);

std::string trim_copy(std::string_view text);
bool is_blank(std::string_view text);

// Hex SHA-256 over length-framed parts: concatenating parts differently can
// never produce the same digest.
std::string sha256_hex(std::initializer_list<std::string_view> parts);

// Fixed "%.9f" rendering used by every CSV artifact so repeated emits are
// byte-identical.
std::string format_score(double value);

// True when CC_NETWORK_GUARD=1: any attempt to issue an HTTP request must
// fail instead of touching the network. Used by offline test harnesses.
bool network_guard_active();

std::string get_env_or(const char* name, std::string fallback);

}  // namespace ccpipe
