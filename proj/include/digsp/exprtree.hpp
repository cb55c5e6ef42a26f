#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "digsp/rng.hpp"

namespace digsp {

class AbstractionRegistry;

enum class BinaryOp : std::uint8_t { Add, Sub, Mul, Div };

enum class NodeKind : std::uint8_t { BinaryOp, Variable, Constant, Abstracted };

/// One node of a symbolic expression tree. Trees are stored as a flat
/// preorder vector; `subtree` is the node count of the subtree rooted here
/// (including the node itself), so the children of a binary node at index i
/// sit at i+1 and i+1+nodes[i+1].subtree.
struct Node {
    NodeKind kind = NodeKind::Constant;
    BinaryOp op = BinaryOp::Add; // valid iff kind == BinaryOp
    std::int32_t index = 0;      // feature index (Variable) or abstraction id (Abstracted)
    double value = 0.0;          // constant payload
    std::int32_t subtree = 1;

    bool operator==(const Node& o) const {
        if (kind != o.kind) return false;
        switch (kind) {
            case NodeKind::BinaryOp: return op == o.op;
            case NodeKind::Variable: return index == o.index;
            case NodeKind::Constant: return value == o.value;
            case NodeKind::Abstracted: return index == o.index;
        }
        return false;
    }
};

/// Protected-evaluation bounds: intermediate magnitudes are clamped to
/// kValueCap and division by |b| <= kDivEpsilon yields 1.0.
inline constexpr double kValueCap = 1e12;
inline constexpr double kDivEpsilon = 1e-9;

/// Immutable symbolic expression tree over variables, constants and
/// abstracted features. Value semantics; copying is a vector copy.
class ExprTree {
public:
    ExprTree() : nodes_{Node{}}, depth_(1) {}

    static ExprTree constant(double value);
    static ExprTree variable(std::int32_t feature_index);
    static ExprTree abstracted(std::int32_t abstraction_id);
    static ExprTree binary(BinaryOp op, ExprTree left, ExprTree right);

    /// Rebuilds subtree sizes and depth from a raw preorder node list.
    /// Throws StructuralError if the list is not a well-formed preorder tree.
    static ExprTree from_nodes(std::vector<Node> nodes);

    const std::vector<Node>& nodes() const { return nodes_; }
    int depth() const { return depth_; }
    int node_count() const { return static_cast<int>(nodes_.size()); }

    /// Depth of the node at `index` (root = 1).
    int node_depth(std::size_t index) const;
    /// Depth of the subtree rooted at `index`.
    int subtree_depth(std::size_t index) const;

    /// Copy of the subtree rooted at `index` as a standalone tree.
    ExprTree subtree_at(std::size_t index) const;

    /// New tree with the subtree at `index` replaced by `replacement`.
    ExprTree replace_subtree(std::size_t index, const ExprTree& replacement) const;

    /// Evaluate on one sample row. `registry` resolves Abstracted nodes and
    /// may be null when the tree contains none. Always returns a finite
    /// value for finite inputs (protected division + magnitude clamp).
    double evaluate(std::span<const double> row, const AbstractionRegistry* registry = nullptr) const;

    bool operator==(const ExprTree& o) const { return nodes_ == o.nodes_; }
    bool operator!=(const ExprTree& o) const { return !(*this == o); }

private:
    std::vector<Node> nodes_;
    int depth_ = 1;
};

/// Terminal set a population draws from: raw feature columns, injected
/// abstraction ids and the sampling range for fresh constants.
struct TerminalSet {
    std::vector<std::int32_t> variables;
    std::vector<std::int32_t> abstractions;
    double constant_lo = -10.0;
    double constant_hi = 10.0;

    /// variables + abstractions + the constant option.
    std::size_t option_count() const { return variables.size() + abstractions.size() + 1; }
};

struct TreeMetrics {
    int node_count = 0;
    int operator_count = 0;
    int depth = 0;
};

/// Registry of abstracted features: id -> expression over raw features.
class AbstractionRegistry {
public:
    /// Throws StructuralError on duplicate id.
    void add(std::int32_t id, ExprTree expression);
    /// Null if unknown.
    const ExprTree* find(std::int32_t id) const;
    bool contains(std::int32_t id) const { return exprs_.count(id) != 0; }
    std::int32_t next_id() const { return next_id_; }
    const std::map<std::int32_t, ExprTree>& all() const { return exprs_; }
    bool empty() const { return exprs_.empty(); }

private:
    std::map<std::int32_t, ExprTree> exprs_;
    std::int32_t next_id_ = 1;
};

// -- construction ------------------------------------------------------------

/// Grow method: nodes below max_depth choose uniformly among functions and
/// terminals, so depth varies in [1, max_depth]. Throws ConfigError when the
/// terminal set has neither variables nor abstractions.
ExprTree grow_init(const TerminalSet& terminals, int max_depth, Rng& rng);

/// Full method: every leaf at exactly max_depth.
ExprTree full_init(const TerminalSet& terminals, int max_depth, Rng& rng);

// -- variation ---------------------------------------------------------------

/// Swap uniformly chosen subtrees. Offspring exceeding max_depth trigger a
/// re-draw of both points, up to 8 attempts; after that the parents are
/// returned unchanged.
std::pair<ExprTree, ExprTree> subtree_crossover(const ExprTree& a, const ExprTree& b,
                                                int max_depth, Rng& rng);

/// Replace a uniformly chosen node by a grown subtree sized to the remaining
/// depth budget. A chosen Constant is instead perturbed by Gaussian noise
/// (sigma = 5% of the constant range) and clamped to the range.
ExprTree subtree_mutation(const ExprTree& a, const TerminalSet& terminals,
                          int max_depth, Rng& rng);

// -- inspection / text -------------------------------------------------------

TreeMetrics metrics(const ExprTree& tree);

/// Fully parenthesized infix text. Variables print as names[index],
/// abstracted features as z<id>. Constants use shortest round-trip formatting.
/// Throws StructuralError on a feature index outside `names`.
std::string serialize(const ExprTree& tree, std::span<const std::string> names);

/// Inverse of serialize. Throws InputError on malformed text.
ExprTree parse(const std::string& text, std::span<const std::string> names);

/// Recursively substitute every Abstracted node by its registry expression.
/// Throws StructuralError on an unresolved id.
ExprTree expand_abstractions(const ExprTree& tree, const AbstractionRegistry& registry);

} // namespace digsp
