#ifndef COASTLINE_ERROR_HPP
#define COASTLINE_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace coastline {

enum class ErrorCode {
  domain_error,
  degenerate_input,
  no_intersection,
  arcsin_domain,
  blow_up,
  geometry,
  degenerate_normalization,
  no_feasible_kappa,
  alignment,
  parse_error,
  duplicate_window,
  degenerate_reference,
  degenerate_fit,
  insufficient_data,
  usage,
  io_error,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::domain_error: return "domain_error";
    case ErrorCode::degenerate_input: return "degenerate_input";
    case ErrorCode::no_intersection: return "no_intersection";
    case ErrorCode::arcsin_domain: return "arcsin_domain";
    case ErrorCode::blow_up: return "blow_up";
    case ErrorCode::geometry: return "geometry";
    case ErrorCode::degenerate_normalization: return "degenerate_normalization";
    case ErrorCode::no_feasible_kappa: return "no_feasible_kappa";
    case ErrorCode::alignment: return "alignment";
    case ErrorCode::parse_error: return "parse_error";
    case ErrorCode::duplicate_window: return "duplicate_window";
    case ErrorCode::degenerate_reference: return "degenerate_reference";
    case ErrorCode::degenerate_fit: return "degenerate_fit";
    case ErrorCode::insufficient_data: return "insufficient_data";
    case ErrorCode::usage: return "usage";
    case ErrorCode::io_error: return "io_error";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace coastline

#endif  // COASTLINE_ERROR_HPP
