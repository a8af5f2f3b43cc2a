#include "streamhar/labels.hpp"

#include "streamhar/error.hpp"

namespace streamhar {

LabelId LabelRegistry::intern(std::string_view name) {
  if (name.empty()) throw Error(ErrorCode::InvalidArgument, "activity name must be non-empty");
  std::string key(name);
  if (auto it = ids_.find(key); it != ids_.end()) return it->second;
  const auto id = static_cast<LabelId>(names_.size());
  names_.push_back(key);
  ids_.emplace(std::move(key), id);
  return id;
}

std::optional<LabelId> LabelRegistry::find(std::string_view name) const {
  if (auto it = ids_.find(std::string(name)); it != ids_.end()) return it->second;
  return std::nullopt;
}

const std::string& LabelRegistry::name(LabelId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= names_.size())
    throw Error(ErrorCode::UnknownActivity, "no activity with id " + std::to_string(id));
  return names_[static_cast<std::size_t>(id)];
}

}  // namespace streamhar
