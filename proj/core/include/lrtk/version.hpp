#pragma once

namespace lrtk {

inline constexpr const char* kVersion = "0.1.0";

} // namespace lrtk
