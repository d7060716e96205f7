#pragma once

#include <string>
#include <string_view>

namespace artrd {

/// Lowercase hex SHA-1 digest of the bytes.
std::string sha1_hex(std::string_view bytes);

/// Hash of the bytes as a git blob object ("blob <size>\0" prefix), matching
/// what `git hash-object` prints for the same content.
std::string git_blob_hash(std::string_view bytes);

}  // namespace artrd
