#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace taskforge {

// Incremental SHA-256. Thin RAII wrapper over libcrypto's EVP interface.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(std::string_view bytes);
  std::array<std::uint8_t, 32> finish();
  std::string finish_hex();

 private:
  void* ctx_;
};

std::string sha256_hex(std::string_view bytes);

// First eight digest bytes read big-endian; stable across platforms.
std::uint64_t sha256_u64(std::string_view bytes);

}  // namespace taskforge
