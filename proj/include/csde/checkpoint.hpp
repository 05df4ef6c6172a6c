#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "csde/encoder.hpp"
#include "csde/errors.hpp"

namespace csde {

/// Binary layout (all integers little-endian):
///   "CSDE"  u32 version
///   repeated until EOF:
///     u32 name_length, name bytes, u32 rank, u64 dims[rank],
///     f64 payload[prod(dims)] (matrices row-major)
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public Error {
 public:
  enum class Kind { kIo, kCorrupt, kVersion, kShape };

  CheckpointError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Written to a temporary sibling and renamed into place.
void save_checkpoint(const EncoderParams& params, const std::filesystem::path& path);

/// Loads any well-formed checkpoint; the architecture is recovered from the
/// tensor shapes. When `expected` is given, a differing architecture is a kShape error.
EncoderParams load_checkpoint(const std::filesystem::path& path,
                              const std::optional<EncoderConfig>& expected = std::nullopt);

}  // namespace csde
