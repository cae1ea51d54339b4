#pragma once

#include <array>
#include <string>
#include <string_view>

namespace bflux {

std::string sha256_hex(std::string_view data);
std::string sha256_file_hex(const std::string& path);

std::array<unsigned char, 32> hmac_sha256(std::string_view key, std::string_view msg);

std::string to_hex(const unsigned char* data, std::size_t n);

}  // namespace bflux
