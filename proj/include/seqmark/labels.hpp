#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace seqmark {

enum class Label : std::size_t { BRumor = 0, IRumor = 1, O = 2 };

inline constexpr std::size_t kNumLabels = 3;
inline constexpr std::array<std::string_view, kNumLabels> kLabelNames{"B-Rumor", "I-Rumor", "O"};

inline std::size_t label_index(Label l) { return static_cast<std::size_t>(l); }
inline std::string_view label_name(std::size_t id) { return kLabelNames.at(id); }

/// Exact, case-sensitive.
inline std::optional<std::size_t> parse_label(std::string_view s) {
  for (std::size_t i = 0; i < kNumLabels; ++i)
    if (kLabelNames[i] == s) return i;
  return std::nullopt;
}

}  // namespace seqmark
