#include "semloc/class_registry.hpp"

#include "semloc/error.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace semloc {

namespace {

const char kBuiltinTable[] = R"(# id name group
1 car movable_object
2 motorcycle movable_object
3 bicycle movable_object
4 person movable_object
5 rider movable_object
6 truck movable_object
7 bus movable_object
8 tricycle movable_object
9 road surface
10 sidewalk surface
11 traffic_cone infrastructure
12 bollard infrastructure
13 fence infrastructure
14 traffic_light infrastructure
15 pole infrastructure
16 traffic_sign infrastructure
17 wall infrastructure
18 trash_can infrastructure
19 billboard infrastructure
20 building infrastructure
255 bridge infrastructure
255 tunnel infrastructure
255 overpass infrastructure
21 vegetation nature
255 void void
200 s_w_d lane_dividing
204 s_y_d lane_dividing
213 ds_w_dn lane_dividing
209 ds_y_dn lane_dividing
207 sb_y_do lane_dividing
206 sb_w_do lane_dividing
201 b_w_g lane_guiding
203 b_y_g lane_guiding
208 db_y_g lane_guiding
211 db_w_g lane_guiding
216 db_w_s lane_stopping
217 ds_w_s lane_stopping
215 s_w_s lane_stopping
218 s_w_c lane_chevron
219 s_y_c lane_chevron
210 s_w_p lane_parking
232 s_n_p lane_parking
214 c_wy_z lane_zebra
202 a_w_u lane_arrow
220 a_w_t lane_arrow
221 a_w_tl lane_arrow
222 a_w_tr lane_arrow
231 a_w_tlr lane_arrow
224 a_w_l lane_arrow
225 a_w_r lane_arrow
226 a_w_lr lane_arrow
230 a_w_lu lane_arrow
228 a_w_tu lane_arrow
229 a_w_m lane_arrow
233 a_y_t lane_arrow
205 b_n_sr lane_bump
212 d_wy_za lane_attention
227 r_wy_np lane_no_parking
223 vom_wy_n lane_other
250 om_n_n lane_other
255 void void
)";

}  // namespace

const std::vector<std::string>& known_class_groups() {
  static const std::vector<std::string> groups = {
      "movable_object", "surface",        "infrastructure", "nature",
      "void",           "lane_dividing",  "lane_guiding",   "lane_stopping",
      "lane_chevron",   "lane_parking",   "lane_zebra",     "lane_arrow",
      "lane_bump",      "lane_attention", "lane_no_parking", "lane_other"};
  return groups;
}

bool is_movable_group(const std::string& group) { return group == "movable_object"; }

void ClassRegistry::add(std::uint16_t id, const std::string& name, const std::string& group) {
  const auto& groups = known_class_groups();
  if (std::find(groups.begin(), groups.end(), group) == groups.end()) {
    fail(ErrorCode::kUnknownGroup, "unknown class group '" + group + "' for class " + name);
  }
  if (id == kIgnoreId) {
    ignore_aliases_.push_back(name);
    return;
  }
  if (entries_.count(id) != 0) {
    fail(ErrorCode::kDuplicateId, "duplicate class id " + std::to_string(id) + " (" + name +
                                      " vs " + entries_.at(id).name + ")");
  }
  entries_.emplace(id, ClassInfo{id, name, group, is_movable_group(group)});
}

const ClassInfo* ClassRegistry::find(std::uint16_t id) const {
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

bool ClassRegistry::is_movable(std::uint16_t id) const {
  const ClassInfo* info = find(id);
  return info != nullptr && info->movable;
}

ClassRegistry ClassRegistry::builtin() {
  std::istringstream in(kBuiltinTable);
  return load_registry(in);
}

const char* builtin_class_table() { return kBuiltinTable; }

ClassRegistry load_registry(std::istream& in) {
  ClassRegistry registry;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    long id = 0;
    std::string name, group, extra;
    if (!(fields >> id)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      fail(ErrorCode::kParse, "class table line " + std::to_string(line_no) + ": bad id");
    }
    if (!(fields >> name >> group) || (fields >> extra)) {
      fail(ErrorCode::kParse,
           "class table line " + std::to_string(line_no) + ": expected `id name group`");
    }
    if (id < 0 || id > 65535) {
      fail(ErrorCode::kParse, "class table line " + std::to_string(line_no) + ": id out of range");
    }
    registry.add(static_cast<std::uint16_t>(id), name, group);
  }
  return registry;
}

ClassRegistry load_registry_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open class table " + path);
  return load_registry(in);
}

}  // namespace semloc
