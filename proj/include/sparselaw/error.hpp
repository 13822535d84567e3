#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace sparselaw {

enum class errc {
  invalid_argument,
  unreachable_loss,
  empty_support,
  degenerate_data,
  malformed_row,
  named_column,
  empty_table,
  mixed_family,
  empty_input,
  no_solution,
  non_unimodal,
  diverged,
  io_error,
};

inline const char* errc_name(errc code) {
  switch (code) {
    case errc::invalid_argument: return "invalid-argument";
    case errc::unreachable_loss: return "unreachable-loss";
    case errc::empty_support: return "empty-support";
    case errc::degenerate_data: return "degenerate-data";
    case errc::malformed_row: return "malformed-row";
    case errc::named_column: return "named-column";
    case errc::empty_table: return "empty-table";
    case errc::mixed_family: return "mixed-family";
    case errc::empty_input: return "empty-input";
    case errc::no_solution: return "no-solution";
    case errc::non_unimodal: return "non-unimodal";
    case errc::diverged: return "diverged";
    case errc::io_error: return "io-error";
  }
  return "unknown";
}

class error : public std::runtime_error {
 public:
  error(errc code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  errc code() const noexcept { return code_; }
  const char* code_name() const noexcept { return errc_name(code_); }

 private:
  errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& message) {
  throw error(code, message);
}

inline void require(bool condition, errc code, const std::string& message) {
  if (!condition) raise(code, message);
}

}  // namespace sparselaw
