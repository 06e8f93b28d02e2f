#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace trafficgp {

/// Incremental SHA-256. Used for config and dataset digests in manifests.
class Sha256 {
public:
  Sha256();
  void update(const void *data, std::size_t len);
  void update(const std::string &s) { update(s.data(), s.size()); }
  /// Finalize and return the lowercase hex digest.
  std::string hex_digest();

private:
  void process_block(const std::uint8_t *block);
  std::uint32_t state_[8];
  std::uint8_t buffer_[64];
  std::uint64_t bit_length_ = 0;
  std::size_t buffer_len_ = 0;
};

std::string sha256_hex(const std::string &data);

} // namespace trafficgp
