#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace streamhar {

using LabelId = int;

struct ActivityLabel {
  LabelId id = 0;
  std::string name;
};

// Maps activity names to dense ids in first-seen order. Ids are session
// scoped: two registries fed the same names in the same order agree.
class LabelRegistry {
 public:
  LabelId intern(std::string_view name);
  std::optional<LabelId> find(std::string_view name) const;
  const std::string& name(LabelId id) const;
  std::size_t size() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, LabelId> ids_;
};

}  // namespace streamhar
