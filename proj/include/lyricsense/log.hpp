#pragma once

#include <functional>
#include <string>

namespace lyricsense {

using WarningSink = std::function<void(const std::string&)>;

// Non-fatal diagnostics (skipped songs, all-OOV documents, single-class
// training data). Default sink writes to stderr.
void warn(const std::string& message);

// Returns the previous sink. Passing an empty function restores the default.
WarningSink set_warning_sink(WarningSink sink);

}  // namespace lyricsense
