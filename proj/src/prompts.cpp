#include <string_view>
#include <utility>

#include "sdfforge/error.hpp"
#include "sdfforge/sft.hpp"

namespace sdfforge {

namespace detail {
extern const std::pair<std::string_view, std::string_view> kPromptTable[];
extern const int kPromptCount;
}  // namespace detail

std::string_view emit_prompt(std::string_view task) {
  for (int i = 0; i < detail::kPromptCount; ++i) {
    if (detail::kPromptTable[i].first == task) return detail::kPromptTable[i].second;
  }
  throw ConfigError("unknown prompt id `" + std::string(task) + "`");
}

std::vector<std::string_view> prompt_ids() {
  std::vector<std::string_view> ids;
  for (int i = 0; i < detail::kPromptCount; ++i) ids.push_back(detail::kPromptTable[i].first);
  return ids;
}

}  // namespace sdfforge
