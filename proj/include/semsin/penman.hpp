// penman.hpp - AMR graphs in PENMAN notation and the coarse role classes
//
// Graphs keep edges exactly as written (including "-of" inverted roles) so
// that serialization reproduces the source layout. Normalization of
// inverted roles happens later, when the semantic graph is built.

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "semsin/error.hpp"

namespace semsin::penman {

struct AmrNode {
  std::string variable;
  std::string concept_name;

  bool operator==(const AmrNode&) const = default;
};

/// Literal attached to a node (number, quoted string, polarity "-").
/// Every occurrence is its own leaf; `id` is "!<index>".
struct AmrConstant {
  std::string id;
  std::string value;

  bool operator==(const AmrConstant&) const = default;
};

struct AmrEdge {
  std::string source;
  std::string role;  // without the leading ':'
  std::string target;
  bool target_is_constant = false;

  bool operator==(const AmrEdge&) const = default;
};

class AmrGraph {
 public:
  std::vector<AmrNode> nodes;
  std::vector<AmrEdge> edges;
  std::vector<AmrConstant> constants;
  std::string root;

  const AmrNode* find_node(std::string_view variable) const;
  const AmrConstant* find_constant(std::string_view id) const;

  /// Checks the structural invariants; throws PenmanError("InvalidGraph").
  void validate() const;

  bool operator==(const AmrGraph&) const = default;
};

class PenmanError : public OffsetError {
 public:
  using OffsetError::OffsetError;
};

/// Parses one PENMAN s-expression. Lines starting with '#' are metadata and
/// ignored. Throws PenmanError with codes UnbalancedParens,
/// DuplicateVariableDeclaration, EmptyGraph or UnexpectedToken.
AmrGraph parse_penman(std::string_view text);

/// Single-line PENMAN rendering; children follow the original edge order.
std::string serialize_penman(const AmrGraph& graph);

/// True when both graphs have equal node, edge and constant multisets after
/// canonical renaming (variables are renamed in serialization order).
bool isomorphic(const AmrGraph& a, const AmrGraph& b);

enum class RoleClass { CoreRole = 0, Operator = 1, Means = 2, Temporal = 3, Others = 4 };

inline constexpr std::size_t kRoleClassCount = 5;

std::string_view to_string(RoleClass c);

/// Splits "ARG0-of" into {"ARG0", true}. Roles that merely end in "-of"
/// (consist-of, prep-out-of, ...) are not inversions.
struct RoleDirection {
  std::string base;
  bool inverted = false;
};
RoleDirection split_inverted_role(std::string_view label);

/// Total: accepts labels with or without ':' and classifies inverted roles
/// by their base role.
RoleClass classify_role(std::string_view label);

}  // namespace semsin::penman
