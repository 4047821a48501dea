#pragma once

#define GROUPTEST_VERSION_MAJOR 1
#define GROUPTEST_VERSION_MINOR 0
#define GROUPTEST_VERSION_PATCH 0

namespace grouptest {

inline const char* version() { return "1.0.0"; }

}  // namespace grouptest
