#include "gstam/partition.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "gstam/errors.hpp"

namespace gstam {

std::vector<std::vector<std::size_t>> GroupPartition::member_lists() const {
  std::vector<std::vector<std::size_t>> out;
  out.reserve(groups.size());
  for (const auto& g : groups) out.push_back(g.members);
  return out;
}

std::vector<double> GroupPartition::weights() const {
  std::vector<double> out;
  out.reserve(groups.size());
  for (const auto& g : groups) out.push_back(g.gamma);
  return out;
}

void GroupPartition::validate(std::size_t branch_count) const {
  if (groups.empty()) throw ConfigError("partition has no groups");
  std::vector<int> seen(branch_count, 0);
  for (const auto& g : groups) {
    if (g.members.empty()) throw ConfigError("group '" + g.name + "' is empty");
    for (std::size_t m : g.members) {
      if (m >= branch_count) {
        throw ConfigError("group '" + g.name + "' references branch " + std::to_string(m) +
                          " but only " + std::to_string(branch_count) + " exist");
      }
      if (seen[m]++ > 0) {
        throw ConfigError("branch " + std::to_string(m) + " appears in more than one group");
      }
    }
    const double expected = 1.0 / static_cast<double>(g.members.size());
    if (g.gamma != expected) {
      throw ConfigError("group '" + g.name + "' has gamma " + std::to_string(g.gamma) +
                        ", expected 1/" + std::to_string(g.members.size()));
    }
  }
  for (std::size_t b = 0; b < branch_count; ++b) {
    if (seen[b] == 0) throw ConfigError("branch " + std::to_string(b) + " is not in any group");
  }
}

std::vector<std::string> AttributeLayout::names() const {
  std::vector<std::string> out;
  out.reserve(branches.size());
  for (const auto& b : branches) out.push_back(b.name);
  return out;
}

void AttributeLayout::validate() const {
  if (branches.empty()) throw ConfigError("layout has no branches");
  partition.validate(branches.size());
  std::set<std::string> names;
  for (std::size_t i = 0; i < branches.size(); ++i) {
    const auto& b = branches[i];
    if (b.classes < 2) throw ConfigError("attribute '" + b.name + "' needs at least 2 classes");
    if (!names.insert(b.name).second) throw ConfigError("duplicate attribute '" + b.name + "'");
    if (b.group_id >= partition.size()) {
      throw ConfigError("attribute '" + b.name + "' has invalid group id");
    }
    const auto& members = partition.groups[b.group_id].members;
    if (std::find(members.begin(), members.end(), i) == members.end()) {
      throw ConfigError("attribute '" + b.name + "' is not a member of its group");
    }
  }
}

AttributeLayout make_layout(const std::vector<GroupDecl>& groups) {
  AttributeLayout layout;
  for (std::size_t k = 0; k < groups.size(); ++k) {
    AttributeGroup group;
    group.name = groups[k].name;
    for (const auto& attr : groups[k].attributes) {
      group.members.push_back(layout.branches.size());
      layout.branches.push_back(
          BranchSpec{attr.name, attr.classes, 1.0 / static_cast<double>(attr.classes), k});
    }
    group.gamma = group.members.empty() ? 1.0 : 1.0 / static_cast<double>(group.members.size());
    layout.partition.groups.push_back(std::move(group));
  }
  layout.validate();
  return layout;
}

AttributeLayout builtin_partitions(const std::string& name) {
  // Class counts of the multi-class attributes (motion, pose, colours) are
  // not part of the grouping table; the values below are placeholders and a
  // partition file can override them.
  if (name == "duke") {
    return make_layout({
        {"whole", {{"motion", 5}, {"pose", 4}}},
        {"head", {{"hat", 2}, {"gender", 2}}},
        {"upper", {{"backpack", 2}, {"top_color", 8}, {"shoulder_bag", 2}, {"handbag", 2}}},
        {"lower", {{"top_length", 2}, {"bottom_color", 7}}},
        {"foot", {{"boots", 2}, {"shoe_color", 2}}},
    });
  }
  if (name == "mars") {
    return make_layout({
        {"whole", {{"motion", 5}, {"pose", 4}}},
        {"head", {{"age", 2}, {"hat", 2}, {"hair", 2}, {"gender", 2}}},
        {"upper",
         {{"backpack", 2}, {"top_color", 8}, {"shoulder_bag", 2}, {"handbag", 2}, {"top_length", 2}}},
        {"lower", {{"bottom_length", 2}, {"bottom_color", 9}, {"bottom_type", 2}}},
    });
  }
  if (name == "synthetic") {
    return make_layout({
        {"whole", {{"motion", 3}, {"pose", 2}}},
        {"head", {{"hat", 2}, {"gender", 2}}},
        {"upper", {{"backpack", 2}, {"top_color", 3}, {"shoulder_bag", 2}, {"handbag", 2}}},
        {"lower", {{"top_length", 2}, {"bottom_color", 3}}},
        {"foot", {{"boots", 2}, {"shoe_color", 2}}},
    });
  }
  throw ConfigError("unknown partition '" + name + "' (expected duke, mars or synthetic)");
}

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

AttributeLayout parse_partition(std::string_view text) {
  std::vector<GroupDecl> groups;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto colon = body.find(':');
    if (colon == std::string::npos) {
      throw ParseError("partition line " + std::to_string(line_no) + ": expected '<group>: <attributes>'");
    }
    GroupDecl group;
    group.name = trim(std::string_view(body).substr(0, colon));
    if (group.name.empty()) throw ParseError("partition line " + std::to_string(line_no) + ": empty group name");
    std::istringstream attrs(body.substr(colon + 1));
    std::string token;
    while (attrs >> token) {
      AttributeDecl decl;
      if (auto sep = token.find(':'); sep != std::string::npos) {
        decl.name = token.substr(0, sep);
        const std::string count = token.substr(sep + 1);
        try {
          std::size_t used = 0;
          const long long c = std::stoll(count, &used);
          if (used != count.size() || c < 2) throw std::invalid_argument(count);
          decl.classes = static_cast<std::size_t>(c);
        } catch (const std::exception&) {
          throw ParseError("partition line " + std::to_string(line_no) + ": bad class count '" + count + "'");
        }
      } else {
        decl.name = token;
      }
      if (decl.name.empty()) throw ParseError("partition line " + std::to_string(line_no) + ": empty attribute name");
      group.attributes.push_back(std::move(decl));
    }
    if (group.attributes.empty()) {
      throw ConfigError("partition line " + std::to_string(line_no) + ": group '" + group.name + "' is empty");
    }
    groups.push_back(std::move(group));
  }
  if (groups.empty()) throw ConfigError("partition file declares no groups");
  return make_layout(groups);
}

AttributeLayout load_partition(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open partition file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_partition(buf.str());
}

std::string format_partition(const AttributeLayout& layout) {
  std::ostringstream out;
  for (const auto& g : layout.partition.groups) {
    out << g.name << ":";
    for (std::size_t m : g.members) out << ' ' << layout.branches[m].name << ':' << layout.branches[m].classes;
    out << '\n';
  }
  return out.str();
}

}  // namespace gstam
