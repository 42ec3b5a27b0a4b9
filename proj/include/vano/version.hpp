#pragma once

#include <string>

namespace vano {

#define VANO_VERSION "0.1.0"

#ifndef VANO_GIT_DESC
#define VANO_GIT_DESC "unknown"
#endif

inline std::string version_string() {
    return std::string("vano-") + VANO_VERSION + "-g" + VANO_GIT_DESC;
}

} // namespace vano
