#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dcom {

enum class Errc {
  BadMagic,
  Truncated,
  Overflow,
  NonFinite,
  TrailingData,
  Io,
  Parse,
  InvalidArgument,
  DimensionMismatch,
  LengthMismatch,
  ZeroVector,
  EmptyInput,
  NoDeltaMeetsAlpha,
  SingleClass,
  EmptyTestSet,
  IncompatibleLearner,
  PoolExhausted,
  InconsistentPool,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::BadMagic: return "BadMagic";
    case Errc::Truncated: return "Truncated";
    case Errc::Overflow: return "Overflow";
    case Errc::NonFinite: return "NonFinite";
    case Errc::TrailingData: return "TrailingData";
    case Errc::Io: return "Io";
    case Errc::Parse: return "Parse";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::ZeroVector: return "ZeroVector";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::NoDeltaMeetsAlpha: return "NoDeltaMeetsAlpha";
    case Errc::SingleClass: return "SingleClass";
    case Errc::EmptyTestSet: return "EmptyTestSet";
    case Errc::IncompatibleLearner: return "IncompatibleLearner";
    case Errc::PoolExhausted: return "PoolExhausted";
    case Errc::InconsistentPool: return "InconsistentPool";
  }
  return "Unknown";
}

/// Library-wide exception. Carries a machine-checkable code, the name of the
/// module that raised it, and for file-format errors the byte offset at which
/// decoding failed.
class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string module, const std::string& what,
        std::optional<std::uint64_t> offset = std::nullopt)
      : std::runtime_error(format(code, module, what, offset)),
        code_(code),
        module_(std::move(module)),
        offset_(offset) {}

  Errc code() const noexcept { return code_; }
  const std::string& module() const noexcept { return module_; }
  std::optional<std::uint64_t> offset() const noexcept { return offset_; }

 private:
  static std::string format(Errc code, const std::string& module,
                            const std::string& what,
                            std::optional<std::uint64_t> offset) {
    std::string msg = "[" + module + "] " + std::string(to_string(code)) + ": " + what;
    if (offset) msg += " (at byte " + std::to_string(*offset) + ")";
    return msg;
  }

  Errc code_;
  std::string module_;
  std::optional<std::uint64_t> offset_;
};

namespace detail {

inline void require(bool cond, Errc code, const char* module, const std::string& what) {
  if (!cond) throw Error(code, module, what);
}

}  // namespace detail
}  // namespace dcom
