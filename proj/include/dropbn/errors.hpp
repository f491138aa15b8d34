#ifndef DROPBN_ERRORS_HPP_
#define DROPBN_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace dropbn {

// Error categories; mirrored one-to-one by the dbn_status codes of the C API.
enum class ErrorCode {
  kInvalidArgument = 1,
  kDimensionMismatch = 2,
  kDegenerateDrop = 3,
  kEmptyRepresentation = 4,
  kInsufficientSamples = 5,
  kOracleTooLarge = 6,
  kConfig = 7,
  kIo = 8,
  kRuntime = 9,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void throw_error(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw_error(code, what);
}

}  // namespace dropbn

#endif  // DROPBN_ERRORS_HPP_
