#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace semloc {

namespace classes {
inline constexpr std::uint16_t kCar = 1;
inline constexpr std::uint16_t kPerson = 4;
inline constexpr std::uint16_t kTruck = 6;
inline constexpr std::uint16_t kRoad = 9;
inline constexpr std::uint16_t kSidewalk = 10;
inline constexpr std::uint16_t kTrafficLight = 14;
inline constexpr std::uint16_t kPole = 15;
inline constexpr std::uint16_t kTrafficSign = 16;
inline constexpr std::uint16_t kWall = 17;
inline constexpr std::uint16_t kBuilding = 20;
inline constexpr std::uint16_t kVegetation = 21;
inline constexpr std::uint16_t kIgnore = 255;
}  // namespace classes

struct ClassInfo {
  std::uint16_t id = 0;
  std::string name;
  std::string group;
  bool movable = false;
};

/// Class-ID table. ID 255 is reserved as the ignore label and never stored;
/// rows naming 255 are recorded as ignore aliases.
class ClassRegistry {
 public:
  static constexpr std::uint16_t kIgnoreId = 255;

  // Throws kDuplicateId / kUnknownGroup.
  void add(std::uint16_t id, const std::string& name, const std::string& group);

  bool contains(std::uint16_t id) const { return entries_.count(id) != 0; }
  const ClassInfo* find(std::uint16_t id) const;
  bool is_movable(std::uint16_t id) const;
  std::size_t size() const { return entries_.size(); }
  const std::map<std::uint16_t, ClassInfo>& entries() const { return entries_; }
  const std::vector<std::string>& ignore_aliases() const { return ignore_aliases_; }

  /// Both built-in tables (25 semantic classes, 35 lane-mark labels).
  static ClassRegistry builtin();

 private:
  std::map<std::uint16_t, ClassInfo> entries_;
  std::vector<std::string> ignore_aliases_;
};

const std::vector<std::string>& known_class_groups();
bool is_movable_group(const std::string& group);

/// Lines `id name group`; `#` starts a comment.
ClassRegistry load_registry(std::istream& in);
ClassRegistry load_registry_file(const std::string& path);
const char* builtin_class_table();

}  // namespace semloc
