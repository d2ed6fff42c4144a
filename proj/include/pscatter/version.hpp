#pragma once

#define PSCATTER_VERSION_MAJOR 0
#define PSCATTER_VERSION_MINOR 1
#define PSCATTER_VERSION_PATCH 0

namespace pscatter {

inline const char* version() { return "0.1.0"; }

}  // namespace pscatter
