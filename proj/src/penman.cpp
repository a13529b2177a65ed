// penman.cpp - PENMAN reader/writer and role classification

#include "semsin/penman.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <functional>
#include <map>
#include <set>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

namespace semsin::penman {

namespace {

enum class TokenKind { Open, Close, Slash, Role, Symbol, Quoted, End };

struct Token {
  TokenKind kind;
  std::string text;
  std::size_t offset;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    skip_blank();
    if (pos_ >= text_.size()) return {TokenKind::End, "", pos_};
    const std::size_t start = pos_;
    const char c = text_[pos_];
    switch (c) {
      case '(':
        ++pos_;
        return {TokenKind::Open, "(", start};
      case ')':
        ++pos_;
        return {TokenKind::Close, ")", start};
      case '/':
        ++pos_;
        return {TokenKind::Slash, "/", start};
      case '"':
        return quoted(start);
      case ':':
        ++pos_;
        return {TokenKind::Role, read_symbol(), start};
      default:
        return {TokenKind::Symbol, read_symbol(), start};
    }
  }

 private:
  static bool is_delimiter(char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == '"';
  }

  void skip_blank() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '\n') {
        line_start_ = true;
        ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '#' && line_start_) {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
    line_start_ = false;
  }

  std::string read_symbol() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !is_delimiter(text_[pos_])) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  Token quoted(std::size_t start) {
    ++pos_;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) ++pos_;
      ++pos_;
    }
    if (pos_ >= text_.size()) throw PenmanError("UnexpectedToken", "unterminated string literal", start);
    ++pos_;
    return {TokenKind::Quoted, std::string(text_.substr(start, pos_ - start)), start};
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  bool line_start_ = true;
};

struct PendingValue {
  std::string source;
  std::string role;
  std::string text;
  bool quoted;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : lexer_(text) { advance(); }

  AmrGraph run() {
    if (current_.kind == TokenKind::End) throw PenmanError("EmptyGraph", "no graph in input", current_.offset);
    if (current_.kind == TokenKind::Close)
      throw PenmanError("UnbalancedParens", "unexpected ')'", current_.offset);
    if (current_.kind != TokenKind::Open)
      throw PenmanError("UnexpectedToken", "graph must start with '('", current_.offset);
    graph_.root = parse_node();
    if (current_.kind == TokenKind::Close)
      throw PenmanError("UnbalancedParens", "unmatched ')'", current_.offset);
    if (current_.kind != TokenKind::End)
      throw PenmanError("UnexpectedToken", "trailing content after graph: '" + current_.text + "'",
                        current_.offset);
    resolve_pending();
    return std::move(graph_);
  }

 private:
  void advance() { current_ = lexer_.next(); }

  std::string parse_node() {
    const std::size_t open_offset = current_.offset;
    advance();  // '('
    if (current_.kind == TokenKind::End)
      throw PenmanError("UnbalancedParens", "unclosed '('", open_offset);
    if (current_.kind != TokenKind::Symbol)
      throw PenmanError("UnexpectedToken", "expected variable after '('", current_.offset);
    std::string variable = current_.text;
    const std::size_t var_offset = current_.offset;
    if (!declared_.insert(variable).second)
      throw PenmanError("DuplicateVariableDeclaration", "variable '" + variable + "' declared twice",
                        var_offset);
    advance();
    if (current_.kind != TokenKind::Slash)
      throw PenmanError(current_.kind == TokenKind::End ? "UnbalancedParens" : "UnexpectedToken",
                        "expected '/' after variable '" + variable + "'",
                        current_.kind == TokenKind::End ? open_offset : current_.offset);
    advance();
    if (current_.kind != TokenKind::Symbol && current_.kind != TokenKind::Quoted)
      throw PenmanError(current_.kind == TokenKind::End ? "UnbalancedParens" : "UnexpectedToken",
                        "expected concept for '" + variable + "'",
                        current_.kind == TokenKind::End ? open_offset : current_.offset);
    graph_.nodes.push_back({variable, current_.text});
    advance();

    while (current_.kind == TokenKind::Role) {
      if (current_.text.empty()) throw PenmanError("UnexpectedToken", "empty role label", current_.offset);
      std::string role = current_.text;
      advance();
      switch (current_.kind) {
        case TokenKind::Open: {
          const std::size_t edge_index = graph_.edges.size();
          graph_.edges.push_back({variable, role, "", false});
          std::string child = parse_node();
          graph_.edges[edge_index].target = std::move(child);
          break;
        }
        case TokenKind::Symbol:
        case TokenKind::Quoted:
          pending_.push_back({variable, role, current_.text, current_.kind == TokenKind::Quoted});
          pending_edge_.push_back(graph_.edges.size());
          graph_.edges.push_back({variable, role, "", false});
          advance();
          break;
        case TokenKind::End:
          throw PenmanError("UnbalancedParens", "unclosed '('", open_offset);
        default:
          throw PenmanError("UnexpectedToken", "missing value for role ':" + role + "'", current_.offset);
      }
    }
    if (current_.kind == TokenKind::End) throw PenmanError("UnbalancedParens", "unclosed '('", open_offset);
    if (current_.kind != TokenKind::Close)
      throw PenmanError("UnexpectedToken", "unexpected '" + current_.text + "'", current_.offset);
    advance();
    return variable;
  }

  // Bare symbols can refer to variables declared later in the text, so they
  // are resolved once the whole graph has been read.
  void resolve_pending() {
    for (std::size_t i = 0; i < pending_.size(); ++i) {
      const PendingValue& value = pending_[i];
      AmrEdge& edge = graph_.edges[pending_edge_[i]];
      if (!value.quoted && declared_.count(value.text)) {
        edge.target = value.text;
      } else {
        AmrConstant constant{"!" + std::to_string(graph_.constants.size()), value.text};
        edge.target = constant.id;
        edge.target_is_constant = true;
        graph_.constants.push_back(std::move(constant));
      }
    }
  }

  Lexer lexer_;
  Token current_{TokenKind::End, "", 0};
  AmrGraph graph_;
  std::unordered_set<std::string> declared_;
  std::vector<PendingValue> pending_;
  std::vector<std::size_t> pending_edge_;
};

}  // namespace

const AmrNode* AmrGraph::find_node(std::string_view variable) const {
  for (const auto& n : nodes)
    if (n.variable == variable) return &n;
  return nullptr;
}

const AmrConstant* AmrGraph::find_constant(std::string_view id) const {
  for (const auto& c : constants)
    if (c.id == id) return &c;
  return nullptr;
}

void AmrGraph::validate() const {
  std::unordered_set<std::string> vars;
  for (const auto& n : nodes)
    if (!vars.insert(n.variable).second)
      throw PenmanError("InvalidGraph", "duplicate variable '" + n.variable + "'", 0);
  if (!vars.count(root)) throw PenmanError("InvalidGraph", "root '" + root + "' is not a declared node", 0);
  std::unordered_set<std::string> constant_ids;
  for (const auto& c : constants) constant_ids.insert(c.id);

  std::unordered_map<std::string, std::vector<std::string>> children;
  for (const auto& e : edges) {
    if (!vars.count(e.source))
      throw PenmanError("InvalidGraph", "edge source '" + e.source + "' is not a node", 0);
    const bool ok = e.target_is_constant ? constant_ids.count(e.target) > 0 : vars.count(e.target) > 0;
    if (!ok) throw PenmanError("InvalidGraph", "dangling edge target '" + e.target + "'", 0);
    if (!e.target_is_constant) children[e.source].push_back(e.target);
  }
  // A PENMAN string can only express nodes reachable from the root.
  std::unordered_set<std::string> seen{root};
  std::vector<std::string> stack{root};
  while (!stack.empty()) {
    const std::string v = stack.back();
    stack.pop_back();
    for (const auto& c : children[v])
      if (seen.insert(c).second) stack.push_back(c);
  }
  if (seen.size() != vars.size())
    throw PenmanError("InvalidGraph", "graph has nodes unreachable from the root", 0);
}

AmrGraph parse_penman(std::string_view text) { return Parser(text).run(); }

std::string serialize_penman(const AmrGraph& graph) {
  std::unordered_map<std::string, std::vector<const AmrEdge*>> outgoing;
  for (const auto& e : graph.edges) outgoing[e.source].push_back(&e);
  std::unordered_set<std::string> emitted;
  std::string out;

  std::function<void(const std::string&)> emit = [&](const std::string& variable) {
    emitted.insert(variable);
    const AmrNode* node = graph.find_node(variable);
    out += '(';
    out += variable;
    out += " / ";
    out += node ? node->concept_name : std::string("?");
    for (const AmrEdge* e : outgoing[variable]) {
      out += " :";
      out += e->role;
      out += ' ';
      if (e->target_is_constant) {
        const AmrConstant* c = graph.find_constant(e->target);
        out += c ? c->value : e->target;
      } else if (emitted.count(e->target)) {
        out += e->target;
      } else {
        emit(e->target);
      }
    }
    out += ')';
  };
  emit(graph.root);
  return out;
}

bool isomorphic(const AmrGraph& a, const AmrGraph& b) {
  if (a.nodes.size() != b.nodes.size() || a.edges.size() != b.edges.size() ||
      a.constants.size() != b.constants.size())
    return false;

  auto label_of = [](const AmrGraph& g, const std::string& id, bool constant) {
    if (constant) {
      const AmrConstant* c = g.find_constant(id);
      return "=" + (c ? c->value : id);
    }
    const AmrNode* n = g.find_node(id);
    return "/" + (n ? n->concept_name : id);
  };
  auto signature = [&](const AmrGraph& g) {
    std::multiset<std::string> concepts;
    for (const auto& n : g.nodes) concepts.insert(n.concept_name);
    std::multiset<std::tuple<std::string, std::string, std::string>> triples;
    for (const auto& e : g.edges)
      triples.insert({label_of(g, e.source, false), e.role, label_of(g, e.target, e.target_is_constant)});
    return std::make_tuple(concepts, triples, label_of(g, g.root, false));
  };
  return signature(a) == signature(b);
}

std::string_view to_string(RoleClass c) {
  switch (c) {
    case RoleClass::CoreRole:
      return "CoreRole";
    case RoleClass::Operator:
      return "Operator";
    case RoleClass::Means:
      return "Means";
    case RoleClass::Temporal:
      return "Temporal";
    case RoleClass::Others:
      return "Others";
  }
  return "Others";
}

RoleDirection split_inverted_role(std::string_view label) {
  if (!label.empty() && label.front() == ':') label.remove_prefix(1);
  static constexpr std::array<std::string_view, 3> kNotInverted{"consist-of", "prep-out-of",
                                                                "prep-on-behalf-of"};
  const bool ends_of = label.size() > 3 && label.substr(label.size() - 3) == "-of";
  if (!ends_of || std::find(kNotInverted.begin(), kNotInverted.end(), label) != kNotInverted.end())
    return {std::string(label), false};
  return {std::string(label.substr(0, label.size() - 3)), true};
}

namespace {

bool numbered(std::string_view label, std::string_view prefix) {
  if (label.size() <= prefix.size() || label.substr(0, prefix.size()) != prefix) return false;
  return std::all_of(label.begin() + static_cast<std::ptrdiff_t>(prefix.size()), label.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

}  // namespace

RoleClass classify_role(std::string_view label) {
  const std::string base = split_inverted_role(label).base;
  if (numbered(base, "ARG")) return RoleClass::CoreRole;
  if (base == "op1" || base == "op2" || base == "op3" || base == "op4") return RoleClass::Operator;

  static const std::unordered_set<std::string> kMeans{"manner", "instrument", "topic", "medium"};
  static const std::unordered_set<std::string> kTemporal{"time",    "year",      "weekday", "duration",
                                                         "decade",  "month",     "day",     "dayperiod",
                                                         "century", "era",       "season",  "quarter",
                                                         "timezone"};
  if (kMeans.count(base)) return RoleClass::Means;
  if (kTemporal.count(base)) return RoleClass::Temporal;
  return RoleClass::Others;
}

}  // namespace semsin::penman
