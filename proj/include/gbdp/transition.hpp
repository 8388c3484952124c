#pragma once

// Binary shift-reduce transition system over EDUs.

#include <string>
#include <utility>
#include <vector>

#include "gbdp/error.hpp"
#include "gbdp/treebank.hpp"

namespace gbdp {

struct Action {
  enum class Kind { Shift, Reduce };

  Kind kind = Kind::Shift;
  Nuclearity nuclearity = Nuclearity::NN;  // Reduce only
  std::string relation;                    // Reduce only

  static Action shift() { return Action{}; }
  static Action reduce(Nuclearity nuc, std::string relation) {
    return Action{Kind::Reduce, nuc, std::move(relation)};
  }

  bool is_shift() const { return kind == Kind::Shift; }
  bool is_reduce() const { return kind == Kind::Reduce; }

  friend bool operator==(const Action& a, const Action& b) {
    if (a.kind != b.kind) return false;
    return a.is_shift() || (a.nuclearity == b.nuclearity && a.relation == b.relation);
  }
};

using ActionSequence = std::vector<Action>;

// Trace line: `SHIFT` or `REDUCE <NN|NS|SN> <relation>`.
inline std::string to_trace_line(const Action& action) {
  if (action.is_shift()) return "SHIFT";
  return "REDUCE " + std::string(to_string(action.nuclearity)) + " " + action.relation;
}

inline Action parse_trace_line(std::string_view line) {
  auto fields = tokenize(line);
  if (fields.size() == 1 && fields[0] == "shift") return Action::shift();
  if (fields.size() == 3 && fields[0] == "reduce") {
    std::string tag = fields[1];
    for (char& c : tag) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (auto nuc = parse_nuclearity(tag); nuc && is_valid_relation(fields[2]))
      return Action::reduce(*nuc, fields[2]);
  }
  throw Error(ErrorKind::MalformedSyntax, "bad trace line '" + std::string(line) + "'");
}

struct ParserState {
  std::vector<DiscourseNode> stack;
  int queue_cursor = 1;  // next unshifted EDU id
  int n_edus = 0;

  bool queue_empty() const { return queue_cursor > n_edus; }
  bool is_terminal() const { return queue_empty() && stack.size() == 1; }
  int queue_remaining() const { return n_edus - queue_cursor + 1; }
};

struct LegalActions {
  bool shift = false;
  bool reduce = false;

  bool any() const { return shift || reduce; }
};

inline ParserState initial_state(int n_edus) {
  if (n_edus < 1)
    throw Error(ErrorKind::InvalidInput, "a parse needs at least one EDU, got " + std::to_string(n_edus));
  return ParserState{{}, 1, n_edus};
}

inline LegalActions legal_actions(const ParserState& state) {
  return LegalActions{state.queue_cursor <= state.n_edus, state.stack.size() >= 2};
}

inline ParserState apply(const ParserState& state, const Action& action) {
  LegalActions legal = legal_actions(state);
  ParserState next = state;
  if (action.is_shift()) {
    if (!legal.shift) throw Error(ErrorKind::IllegalAction, "shift with an empty queue");
    next.stack.push_back(DiscourseNode::leaf(next.queue_cursor));
    ++next.queue_cursor;
    return next;
  }
  if (!legal.reduce)
    throw Error(ErrorKind::IllegalAction,
                "reduce needs two stack items, stack has " + std::to_string(state.stack.size()));
  DiscourseNode right = std::move(next.stack.back());
  next.stack.pop_back();
  DiscourseNode left = std::move(next.stack.back());
  next.stack.pop_back();
  next.stack.push_back(
      DiscourseNode::internal(action.nuclearity, action.relation, std::move(left), std::move(right)));
  return next;
}

namespace detail {

inline void emit_post_order(const DiscourseNode& node, ActionSequence& out) {
  if (node.is_leaf()) {
    out.push_back(Action::shift());
    return;
  }
  emit_post_order(node.left(), out);
  emit_post_order(node.right(), out);
  out.push_back(Action::reduce(node.nuclearity(), node.relation()));
}

}  // namespace detail

/// Gold action sequence: Shift at each leaf, Reduce at each internal node,
/// in post-order.
inline ActionSequence oracle(const DiscourseTree& tree) {
  ActionSequence actions;
  actions.reserve(2 * tree.leaf_count() - 1);
  detail::emit_post_order(tree, actions);
  return actions;
}

/// Folds `apply` over the actions from the initial state. Step numbers in
/// errors are 1-based.
inline DiscourseTree execute(int n_edus, const ActionSequence& actions) {
  ParserState state = initial_state(n_edus);
  for (std::size_t step = 0; step < actions.size(); ++step) {
    try {
      state = apply(state, actions[step]);
    } catch (const Error& e) {
      throw Error(ErrorKind::IllegalAction,
                  "step " + std::to_string(step + 1) + ": " + e.what(), step + 1);
    }
  }
  if (!state.is_terminal())
    throw Error(ErrorKind::IncompleteParse,
                "after " + std::to_string(actions.size()) + " actions the stack holds " +
                    std::to_string(state.stack.size()) + " items and " +
                    std::to_string(state.queue_remaining()) + " EDUs are unshifted");
  return state.stack.front();
}

}  // namespace gbdp
