#pragma once

#include <string>

#include "treewit/gadgets.hpp"
#include "treewit/mdp.hpp"
#include "treewit/partition.hpp"

namespace treewit {

/// Line-oriented model format, '#' comments:
///   mdp | dtmc
///   states N
///   initial <s> <p/q>          (repeatable)
///   goal <s>                   (repeatable)
///   trans <s> <label> <s'> <p/q>
/// States are 0-based; a dtmc allows at most one action label per state.
/// Syntax errors carry the line number; model invariants are reported
/// through validate_model.
Mdp parse_model(const std::string& text);
std::string write_model(const Mdp& m);

/// Partition format: one `block <id> : s1 s2 ...` line per block, ids
/// 0..k-1 in any order. The tree structure is derived from the quotient and
/// the result is validated against the companion model.
DirectedTreePartition parse_partition(const std::string& text, const Mdp& m);
std::string write_partition(const DirectedTreePartition& p);

/// MCP format:
///   mcp d=<d> n=<n>
///   iota <d entries>
///   final <d entries>
///   lambda <p/q>
///   pair <j>        followed by d rows for m0, then d rows for m1
McpInstance parse_mcp(const std::string& text);
std::string write_mcp(const McpInstance& inst);

}  // namespace treewit
