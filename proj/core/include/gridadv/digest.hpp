#pragma once

#include <string>
#include <string_view>

namespace gridadv {

/// Lower-case hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);

/// SHA-256 of a file's contents.
std::string sha256_file(const std::string& path);

}  // namespace gridadv
