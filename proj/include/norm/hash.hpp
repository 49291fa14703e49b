#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace norm {

using Digest = std::array<std::uint8_t, 32>;

// Incremental SHA-256 used for mesh and snapshot content ids.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(std::span<const std::byte> bytes);
  void update(std::string_view text);
  void update_f64(std::span<const double> values);  // little-endian bytes
  void update_u64(std::uint64_t value);
  Digest finish();

 private:
  void* ctx_;
};

std::string to_hex(const Digest& d);
Digest digest_from_hex(std::string_view hex);

}  // namespace norm
