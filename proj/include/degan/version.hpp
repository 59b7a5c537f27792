// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace degan {

inline constexpr const char* kCodeVersion = "0.1.0";

}  // namespace degan
