#include "digsp/exprtree.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>

#include "digsp/errors.hpp"

namespace digsp {

namespace {

double guard(double v) {
    if (std::isnan(v)) return 1.0;
    return std::clamp(v, -kValueCap, kValueCap);
}

// Recomputes subtree sizes for a preorder node list. Returns the size of the
// subtree starting at `pos`, or -1 on malformed input.
int fix_sizes(std::vector<Node>& nodes, std::size_t pos) {
    if (pos >= nodes.size()) return -1;
    if (nodes[pos].kind != NodeKind::BinaryOp) {
        nodes[pos].subtree = 1;
        return 1;
    }
    const int left = fix_sizes(nodes, pos + 1);
    if (left < 0) return -1;
    const int right = fix_sizes(nodes, pos + 1 + static_cast<std::size_t>(left));
    if (right < 0) return -1;
    nodes[pos].subtree = 1 + left + right;
    return nodes[pos].subtree;
}

int compute_depth(const std::vector<Node>& nodes, std::size_t pos) {
    if (nodes[pos].kind != NodeKind::BinaryOp) return 1;
    const std::size_t left = pos + 1;
    const std::size_t right = left + static_cast<std::size_t>(nodes[left].subtree);
    return 1 + std::max(compute_depth(nodes, left), compute_depth(nodes, right));
}

Node sample_terminal(const TerminalSet& t, Rng& rng) {
    Node node;
    // Injected abstractions take a fixed 30% share of terminal draws instead
    // of one uniform slot each: a freshly injected feature has to reach a
    // near-best individual within the few generations before the stall limit,
    // and a uniform draw makes that too rare for the rescue to ever land.
    if (!t.abstractions.empty() && rng.uniform(0.0, 1.0) < 0.3) {
        node.kind = NodeKind::Abstracted;
        node.index = t.abstractions[rng.uniform_index(t.abstractions.size())];
        return node;
    }
    const std::size_t pick = rng.uniform_index(t.variables.size() + 1);
    if (pick < t.variables.size()) {
        node.kind = NodeKind::Variable;
        node.index = t.variables[pick];
    } else {
        node.kind = NodeKind::Constant;
        node.value = rng.uniform(t.constant_lo, t.constant_hi);
    }
    return node;
}

BinaryOp sample_op(Rng& rng) {
    return static_cast<BinaryOp>(rng.uniform_index(4));
}

void require_nonempty(const TerminalSet& t) {
    if (t.variables.empty() && t.abstractions.empty())
        throw ConfigError("terminal set has no variables or abstractions");
}

void grow_rec(std::vector<Node>& out, const TerminalSet& t, int depth_left, Rng& rng) {
    constexpr std::size_t n_functions = 4;
    const bool pick_function =
        depth_left > 1 &&
        rng.uniform_index(n_functions + t.option_count()) < n_functions;
    if (pick_function) {
        Node fn;
        fn.kind = NodeKind::BinaryOp;
        fn.op = sample_op(rng);
        out.push_back(fn);
        grow_rec(out, t, depth_left - 1, rng);
        grow_rec(out, t, depth_left - 1, rng);
    } else {
        out.push_back(sample_terminal(t, rng));
    }
}

void full_rec(std::vector<Node>& out, const TerminalSet& t, int depth_left, Rng& rng) {
    if (depth_left <= 1) {
        out.push_back(sample_terminal(t, rng));
        return;
    }
    Node fn;
    fn.kind = NodeKind::BinaryOp;
    fn.op = sample_op(rng);
    out.push_back(fn);
    full_rec(out, t, depth_left - 1, rng);
    full_rec(out, t, depth_left - 1, rng);
}

const char* op_text(BinaryOp op) {
    switch (op) {
        case BinaryOp::Add: return "+";
        case BinaryOp::Sub: return "-";
        case BinaryOp::Mul: return "*";
        case BinaryOp::Div: return "/";
    }
    return "?";
}

std::string format_constant(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace

ExprTree ExprTree::constant(double value) {
    Node n;
    n.kind = NodeKind::Constant;
    n.value = value;
    return from_nodes({n});
}

ExprTree ExprTree::variable(std::int32_t feature_index) {
    Node n;
    n.kind = NodeKind::Variable;
    n.index = feature_index;
    return from_nodes({n});
}

ExprTree ExprTree::abstracted(std::int32_t abstraction_id) {
    Node n;
    n.kind = NodeKind::Abstracted;
    n.index = abstraction_id;
    return from_nodes({n});
}

ExprTree ExprTree::binary(BinaryOp op, ExprTree left, ExprTree right) {
    std::vector<Node> nodes;
    nodes.reserve(1 + left.nodes_.size() + right.nodes_.size());
    Node fn;
    fn.kind = NodeKind::BinaryOp;
    fn.op = op;
    nodes.push_back(fn);
    nodes.insert(nodes.end(), left.nodes_.begin(), left.nodes_.end());
    nodes.insert(nodes.end(), right.nodes_.begin(), right.nodes_.end());
    return from_nodes(std::move(nodes));
}

ExprTree ExprTree::from_nodes(std::vector<Node> nodes) {
    if (nodes.empty()) throw StructuralError("empty node list");
    const int size = fix_sizes(nodes, 0);
    if (size != static_cast<int>(nodes.size()))
        throw StructuralError("malformed preorder node list");
    ExprTree t;
    t.nodes_ = std::move(nodes);
    t.depth_ = compute_depth(t.nodes_, 0);
    return t;
}

int ExprTree::node_depth(std::size_t index) const {
    // Walk down from the root; the target is inside exactly one child span.
    std::size_t pos = 0;
    int depth = 1;
    while (pos != index) {
        const std::size_t left = pos + 1;
        const std::size_t left_end = left + static_cast<std::size_t>(nodes_[left].subtree);
        pos = (index < left_end) ? left : left_end;
        ++depth;
    }
    return depth;
}

int ExprTree::subtree_depth(std::size_t index) const {
    return compute_depth(nodes_, index);
}

ExprTree ExprTree::subtree_at(std::size_t index) const {
    const auto size = static_cast<std::size_t>(nodes_[index].subtree);
    std::vector<Node> sub(nodes_.begin() + static_cast<std::ptrdiff_t>(index),
                          nodes_.begin() + static_cast<std::ptrdiff_t>(index + size));
    return from_nodes(std::move(sub));
}

ExprTree ExprTree::replace_subtree(std::size_t index, const ExprTree& replacement) const {
    const auto size = static_cast<std::size_t>(nodes_[index].subtree);
    std::vector<Node> merged;
    merged.reserve(nodes_.size() - size + replacement.nodes_.size());
    merged.insert(merged.end(), nodes_.begin(), nodes_.begin() + static_cast<std::ptrdiff_t>(index));
    merged.insert(merged.end(), replacement.nodes_.begin(), replacement.nodes_.end());
    merged.insert(merged.end(), nodes_.begin() + static_cast<std::ptrdiff_t>(index + size), nodes_.end());
    return from_nodes(std::move(merged));
}

namespace {

double eval_rec(const std::vector<Node>& nodes, std::size_t pos,
                std::span<const double> row, const AbstractionRegistry* registry) {
    const Node& n = nodes[pos];
    switch (n.kind) {
        case NodeKind::Constant:
            return n.value;
        case NodeKind::Variable:
            if (n.index < 0 || static_cast<std::size_t>(n.index) >= row.size())
                throw StructuralError("variable index " + std::to_string(n.index) +
                                      " out of range for row of size " +
                                      std::to_string(row.size()));
            return guard(row[static_cast<std::size_t>(n.index)]);
        case NodeKind::Abstracted: {
            if (registry == nullptr)
                throw StructuralError("abstracted feature z" + std::to_string(n.index) +
                                      " evaluated without a registry");
            const ExprTree* expr = registry->find(n.index);
            if (expr == nullptr)
                throw StructuralError("unresolved abstraction id z" + std::to_string(n.index));
            return expr->evaluate(row, registry);
        }
        case NodeKind::BinaryOp: {
            const std::size_t left = pos + 1;
            const std::size_t right = left + static_cast<std::size_t>(nodes[left].subtree);
            const double a = eval_rec(nodes, left, row, registry);
            const double b = eval_rec(nodes, right, row, registry);
            switch (n.op) {
                case BinaryOp::Add: return guard(a + b);
                case BinaryOp::Sub: return guard(a - b);
                case BinaryOp::Mul: return guard(a * b);
                case BinaryOp::Div:
                    if (std::abs(b) <= kDivEpsilon) return 1.0;
                    return guard(a / b);
            }
            return 0.0;
        }
    }
    return 0.0;
}

} // namespace

double ExprTree::evaluate(std::span<const double> row, const AbstractionRegistry* registry) const {
    return eval_rec(nodes_, 0, row, registry);
}

void AbstractionRegistry::add(std::int32_t id, ExprTree expression) {
    if (exprs_.count(id) != 0)
        throw StructuralError("duplicate abstraction id z" + std::to_string(id));
    exprs_.emplace(id, std::move(expression));
    next_id_ = std::max(next_id_, id + 1);
}

const ExprTree* AbstractionRegistry::find(std::int32_t id) const {
    const auto it = exprs_.find(id);
    return it == exprs_.end() ? nullptr : &it->second;
}

ExprTree grow_init(const TerminalSet& terminals, int max_depth, Rng& rng) {
    require_nonempty(terminals);
    if (max_depth < 1) throw ConfigError("max_depth must be >= 1");
    std::vector<Node> nodes;
    grow_rec(nodes, terminals, max_depth, rng);
    return ExprTree::from_nodes(std::move(nodes));
}

ExprTree full_init(const TerminalSet& terminals, int max_depth, Rng& rng) {
    require_nonempty(terminals);
    if (max_depth < 1) throw ConfigError("max_depth must be >= 1");
    std::vector<Node> nodes;
    full_rec(nodes, terminals, max_depth, rng);
    return ExprTree::from_nodes(std::move(nodes));
}

std::pair<ExprTree, ExprTree> subtree_crossover(const ExprTree& a, const ExprTree& b,
                                                int max_depth, Rng& rng) {
    for (int attempt = 0; attempt < 8; ++attempt) {
        const std::size_t i = rng.uniform_index(static_cast<std::size_t>(a.node_count()));
        const std::size_t j = rng.uniform_index(static_cast<std::size_t>(b.node_count()));
        ExprTree c1 = a.replace_subtree(i, b.subtree_at(j));
        ExprTree c2 = b.replace_subtree(j, a.subtree_at(i));
        if (c1.depth() <= max_depth && c2.depth() <= max_depth)
            return {std::move(c1), std::move(c2)};
    }
    return {a, b};
}

ExprTree subtree_mutation(const ExprTree& a, const TerminalSet& terminals,
                          int max_depth, Rng& rng) {
    const std::size_t i = rng.uniform_index(static_cast<std::size_t>(a.node_count()));
    if (a.nodes()[i].kind == NodeKind::Constant) {
        const double sigma = 0.05 * (terminals.constant_hi - terminals.constant_lo);
        const double perturbed = std::clamp(a.nodes()[i].value + rng.gaussian(0.0, sigma),
                                            terminals.constant_lo, terminals.constant_hi);
        return a.replace_subtree(i, ExprTree::constant(perturbed));
    }
    const int budget = max_depth - a.node_depth(i) + 1;
    return a.replace_subtree(i, grow_init(terminals, budget, rng));
}

TreeMetrics metrics(const ExprTree& tree) {
    TreeMetrics m;
    m.node_count = tree.node_count();
    m.depth = tree.depth();
    for (const Node& n : tree.nodes())
        if (n.kind == NodeKind::BinaryOp) ++m.operator_count;
    return m;
}

namespace {

void serialize_rec(const std::vector<Node>& nodes, std::size_t pos,
                   std::span<const std::string> names, std::string& out) {
    const Node& n = nodes[pos];
    switch (n.kind) {
        case NodeKind::Constant:
            out += format_constant(n.value);
            return;
        case NodeKind::Variable:
            if (n.index < 0 || static_cast<std::size_t>(n.index) >= names.size())
                throw StructuralError("feature index " + std::to_string(n.index) +
                                      " has no name");
            out += names[static_cast<std::size_t>(n.index)];
            return;
        case NodeKind::Abstracted:
            out += "z" + std::to_string(n.index);
            return;
        case NodeKind::BinaryOp: {
            const std::size_t left = pos + 1;
            const std::size_t right = left + static_cast<std::size_t>(nodes[left].subtree);
            out += "(";
            serialize_rec(nodes, left, names, out);
            out += " ";
            out += op_text(n.op);
            out += " ";
            serialize_rec(nodes, right, names, out);
            out += ")";
            return;
        }
    }
}

struct Parser {
    std::vector<std::string> tokens;
    std::size_t pos = 0;
    std::span<const std::string> names;

    const std::string& peek() const {
        if (pos >= tokens.size()) throw InputError("unexpected end of expression");
        return tokens[pos];
    }
    std::string take() {
        if (pos >= tokens.size()) throw InputError("unexpected end of expression");
        return tokens[pos++];
    }

    void expect(const std::string& t) {
        if (take() != t) throw InputError("expected '" + t + "' in expression");
    }

    void parse_expr(std::vector<Node>& out) {
        const std::string tok = take();
        if (tok == "(") {
            const std::size_t op_slot = out.size();
            out.push_back(Node{}); // placeholder, filled after the operator is read
            parse_expr(out);
            const std::string op = take();
            Node fn;
            fn.kind = NodeKind::BinaryOp;
            if (op == "+") fn.op = BinaryOp::Add;
            else if (op == "-") fn.op = BinaryOp::Sub;
            else if (op == "*") fn.op = BinaryOp::Mul;
            else if (op == "/") fn.op = BinaryOp::Div;
            else throw InputError("unknown operator '" + op + "'");
            out[op_slot] = fn;
            parse_expr(out);
            expect(")");
            return;
        }
        // terminal: named variable, z<id>, or numeric constant
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (tok == names[i]) {
                Node n;
                n.kind = NodeKind::Variable;
                n.index = static_cast<std::int32_t>(i);
                out.push_back(n);
                return;
            }
        }
        if (tok.size() > 1 && tok[0] == 'z' &&
            tok.find_first_not_of("0123456789", 1) == std::string::npos) {
            Node n;
            n.kind = NodeKind::Abstracted;
            n.index = static_cast<std::int32_t>(std::strtol(tok.c_str() + 1, nullptr, 10));
            out.push_back(n);
            return;
        }
        double value = 0.0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
        if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
            throw InputError("unknown token '" + tok + "' in expression");
        Node n;
        n.kind = NodeKind::Constant;
        n.value = value;
        out.push_back(n);
    }
};

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : text) {
        if (c == '(' || c == ')') {
            if (!current.empty()) {
                tokens.push_back(current);
                current.clear();
            }
            tokens.push_back(std::string(1, c));
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            if (!current.empty()) {
                tokens.push_back(current);
                current.clear();
            }
        } else {
            current += c;
        }
    }
    if (!current.empty()) tokens.push_back(current);
    return tokens;
}

} // namespace

std::string serialize(const ExprTree& tree, std::span<const std::string> names) {
    std::string out;
    serialize_rec(tree.nodes(), 0, names, out);
    return out;
}

ExprTree parse(const std::string& text, std::span<const std::string> names) {
    Parser p;
    p.tokens = tokenize(text);
    p.names = names;
    if (p.tokens.empty()) throw InputError("empty expression");
    std::vector<Node> nodes;
    p.parse_expr(nodes);
    if (p.pos != p.tokens.size())
        throw InputError("trailing tokens after expression");
    return ExprTree::from_nodes(std::move(nodes));
}

ExprTree expand_abstractions(const ExprTree& tree, const AbstractionRegistry& registry) {
    std::vector<Node> out;
    out.reserve(tree.nodes().size());
    bool changed = false;
    for (const Node& n : tree.nodes()) {
        if (n.kind == NodeKind::Abstracted) {
            const ExprTree* expr = registry.find(n.index);
            if (expr == nullptr)
                throw StructuralError("unresolved abstraction id z" + std::to_string(n.index));
            const ExprTree expanded = expand_abstractions(*expr, registry);
            out.insert(out.end(), expanded.nodes().begin(), expanded.nodes().end());
            changed = true;
        } else {
            out.push_back(n);
        }
    }
    if (!changed) return tree;
    return ExprTree::from_nodes(std::move(out));
}

} // namespace digsp
