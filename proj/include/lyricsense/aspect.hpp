#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace lyricsense {

// Head indices follow this declaration order everywhere.
enum class Aspect : std::size_t {
  Violence = 0,
  Substance = 1,
  Sex = 2,
  Consumerism = 3,
  Positive = 4,
};

inline constexpr std::size_t kNumAspects = 5;

inline constexpr std::array<Aspect, kNumAspects> kAllAspects = {
    Aspect::Violence, Aspect::Substance, Aspect::Sex, Aspect::Consumerism,
    Aspect::Positive};

enum class SeverityLevel : int { Low = 0, Medium = 1, High = 2 };

inline constexpr int kNumLevels = 3;

constexpr std::size_t index(Aspect a) noexcept {
  return static_cast<std::size_t>(a);
}

constexpr int code(SeverityLevel s) noexcept { return static_cast<int>(s); }

constexpr SeverityLevel level_from_code(int c) noexcept {
  return static_cast<SeverityLevel>(c);
}

// Lowercase key used in manifests and reports.
constexpr std::string_view aspect_key(Aspect a) noexcept {
  switch (a) {
    case Aspect::Violence: return "violence";
    case Aspect::Substance: return "substance";
    case Aspect::Sex: return "sex";
    case Aspect::Consumerism: return "consumerism";
    case Aspect::Positive: return "positive";
  }
  return "?";
}

constexpr std::string_view level_name(SeverityLevel s) noexcept {
  switch (s) {
    case SeverityLevel::Low: return "Low";
    case SeverityLevel::Medium: return "Medium";
    case SeverityLevel::High: return "High";
  }
  return "?";
}

inline std::optional<Aspect> parse_aspect(std::string_view key) noexcept {
  for (Aspect a : kAllAspects) {
    if (aspect_key(a) == key) return a;
  }
  return std::nullopt;
}

}  // namespace lyricsense
