// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

namespace reprforge {

enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

/// Level parsed once from REPRFORGE_LOG (error|info|debug); defaults to info.
LogLevel log_level();

void log_error(const std::string& msg);
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

} // namespace reprforge
