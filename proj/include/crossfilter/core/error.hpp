#pragma once

#include <stdexcept>
#include <string>

namespace crossfilter {

/// Machine-checkable failure categories surfaced by the library.
enum class Errc {
  clip_too_short,
  label_arity,
  bad_q,
  rep_mismatch,
  empty_train_set,
  pred_coverage,
  empty_labelset,
  empty_test,
  shape_mismatch,
  parse_error,
  io_error,
  config_error,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::clip_too_short: return "CLIP_TOO_SHORT";
    case Errc::label_arity: return "LABEL_ARITY";
    case Errc::bad_q: return "BAD_Q";
    case Errc::rep_mismatch: return "REP_MISMATCH";
    case Errc::empty_train_set: return "EMPTY_TRAIN_SET";
    case Errc::pred_coverage: return "PRED_COVERAGE";
    case Errc::empty_labelset: return "EMPTY_LABELSET";
    case Errc::empty_test: return "EMPTY_TEST";
    case Errc::shape_mismatch: return "SHAPE_MISMATCH";
    case Errc::parse_error: return "PARSE_ERROR";
    case Errc::io_error: return "IO_ERROR";
    case Errc::config_error: return "CONFIG_ERROR";
  }
  return "UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(errc_name(code)) + ": " + detail), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& detail) {
  throw Error(code, detail);
}

inline void require(bool cond, Errc code, const std::string& detail) {
  if (!cond) raise(code, detail);
}

}  // namespace crossfilter
