#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace evtrack {

enum class ErrorCode {
  degenerate_conic,
  singular_matrix,
  numerical_breakdown,
  rank_deficient,
  dimension_mismatch,
  empty_input,
  out_of_bounds,
  out_of_span,
  malformed_header,
  checksum_mismatch,
  out_of_order,
  io,
  config,
};

const char* to_string(ErrorCode code) noexcept;

/// Every failure the library reports is an Error carrying one of the codes
/// above. Stream-level failures also carry the byte offset (or -1).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, std::int64_t offset = -1)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code),
        offset_(offset) {}

  ErrorCode code() const noexcept { return code_; }
  std::int64_t offset() const noexcept { return offset_; }

 private:
  ErrorCode code_;
  std::int64_t offset_;
};

}  // namespace evtrack
