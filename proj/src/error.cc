#include "sitelens/error.h"

namespace sitelens {

const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage:
      return "usage";
    case ErrorKind::kData:
      return "data";
    case ErrorKind::kInvariant:
      return "invariant";
  }
  return "unknown";
}

}  // namespace sitelens
