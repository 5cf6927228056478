#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gstam {

// One attribute classification branch.
struct BranchSpec {
  std::string name;
  std::size_t classes = 2;
  double beta = 0.5;  // 1 / classes
  std::size_t group_id = 0;
};

struct AttributeGroup {
  std::string name;
  std::vector<std::size_t> members;  // branch indices
  double gamma = 1.0;                // 1 / |members|
};

// Disjoint cover of the branches by attribute groups.
struct GroupPartition {
  std::vector<AttributeGroup> groups;

  std::size_t size() const noexcept { return groups.size(); }
  std::vector<std::vector<std::size_t>> member_lists() const;
  std::vector<double> weights() const;
  // Throws ConfigError unless the groups are non-empty, disjoint, cover
  // [0, branch_count) and carry gamma = 1/|G|.
  void validate(std::size_t branch_count) const;
};

// Branch specs plus the grouping of those branches.
struct AttributeLayout {
  std::vector<BranchSpec> branches;
  GroupPartition partition;

  std::vector<std::string> names() const;
  void validate() const;
};

struct AttributeDecl {
  std::string name;
  std::size_t classes = 2;
};

struct GroupDecl {
  std::string name;
  std::vector<AttributeDecl> attributes;
};

// Builds branch specs (beta = 1/c) and the partition (gamma = 1/|G|) with
// branches numbered in declaration order.
AttributeLayout make_layout(const std::vector<GroupDecl>& groups);

// "duke", "mars" or "synthetic".
AttributeLayout builtin_partitions(const std::string& name);

// Partition files: one group per line,
//   <group>: <attribute>[:<classes>] <attribute>[:<classes>] ...
// Blank lines and '#' comments are ignored; classes default to 2.
AttributeLayout parse_partition(std::string_view text);
AttributeLayout load_partition(const std::filesystem::path& path);
std::string format_partition(const AttributeLayout& layout);

}  // namespace gstam
