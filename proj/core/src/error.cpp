#include "fedhin/error.hpp"

namespace fedhin {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parse: return "parse";
    case ErrorKind::validation: return "validation";
    case ErrorKind::empty_type: return "empty_type";
    case ErrorKind::index: return "index";
    case ErrorKind::shape: return "shape";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::config: return "config";
    case ErrorKind::staleness: return "staleness";
    case ErrorKind::registration: return "registration";
    case ErrorKind::empty: return "empty";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

}  // namespace fedhin
