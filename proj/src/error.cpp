#include "reprog/error.hpp"

namespace reprog {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::dimension: return "dimension";
        case ErrorKind::usage: return "usage";
        case ErrorKind::config: return "configuration";
        case ErrorKind::insufficient_data: return "insufficient-data";
        case ErrorKind::format: return "format";
        case ErrorKind::data: return "data";
        case ErrorKind::io: return "I/O";
        case ErrorKind::provenance: return "provenance";
        case ErrorKind::undefined_metric: return "undefined-metric";
        case ErrorKind::missing_head: return "missing-head";
        case ErrorKind::numeric: return "numeric";
    }
    return "unknown";
}

}  // namespace reprog
