// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace fedopt {

inline constexpr const char* kVersion = "fedopt-lab 0.1.0";

}  // namespace fedopt
