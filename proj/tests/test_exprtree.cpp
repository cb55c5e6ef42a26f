#include <cmath>
#include <string>
#include <vector>

#include "digsp/errors.hpp"
#include "digsp/exprtree.hpp"
#include "digsp/rng.hpp"
#include "doctest.h"

using namespace digsp;

namespace {

const std::vector<std::string> kNames = {"x0", "x1", "x2", "x3"};

ExprTree v(int i) { return ExprTree::variable(i); }
ExprTree c(double x) { return ExprTree::constant(x); }
ExprTree bin(BinaryOp op, ExprTree a, ExprTree b) {
    return ExprTree::binary(op, std::move(a), std::move(b));
}

TerminalSet four_vars() {
    TerminalSet t;
    t.variables = {0, 1, 2, 3};
    return t;
}

} // namespace

TEST_CASE("evaluation implements protected division and the value cap") {
    const std::vector<double> row = {2.0, 3.0, 0.0, -4.0};

    CHECK(bin(BinaryOp::Add, v(0), v(1)).evaluate(row) == 5.0);
    CHECK(bin(BinaryOp::Sub, v(0), v(3)).evaluate(row) == 6.0);
    CHECK(bin(BinaryOp::Mul, v(1), v(3)).evaluate(row) == -12.0);
    CHECK(bin(BinaryOp::Div, v(1), v(0)).evaluate(row) == 1.5);

    // |denominator| <= 1e-9 falls back to 1, just above it divides normally.
    CHECK(bin(BinaryOp::Div, c(1.0), c(1e-10)).evaluate(row) == 1.0);
    CHECK(bin(BinaryOp::Div, c(1.0), c(0.0)).evaluate(row) == 1.0);
    CHECK(bin(BinaryOp::Div, c(1.0), c(-1e-10)).evaluate(row) == 1.0);
    CHECK(bin(BinaryOp::Div, c(1.0), c(1e-8)).evaluate(row) == doctest::Approx(1e8));

    // Every intermediate is clamped to +-1e12.
    CHECK(bin(BinaryOp::Mul, c(1e9), c(1e9)).evaluate(row) == kValueCap);
    CHECK(bin(BinaryOp::Mul, c(-1e9), c(1e9)).evaluate(row) == -kValueCap);
    const ExprTree nested = bin(BinaryOp::Sub, bin(BinaryOp::Mul, c(1e9), c(1e9)), c(5e11));
    CHECK(nested.evaluate(row) == 5e11);
}

TEST_CASE("tree construction caches structure and validates node buffers") {
    const ExprTree t = bin(BinaryOp::Add, bin(BinaryOp::Mul, v(0), c(2.0)), v(1));
    CHECK(t.node_count() == 5);
    CHECK(t.depth() == 3);
    CHECK(t.node_depth(0) == 1);
    CHECK(t.subtree_depth(0) == 3);

    const TreeMetrics m = metrics(t);
    CHECK(m.node_count == 5);
    CHECK(m.operator_count == 2);
    CHECK(m.depth == 3);

    const TreeMetrics leaf = metrics(c(1.0));
    CHECK(leaf.node_count == 1);
    CHECK(leaf.operator_count == 0);
    CHECK(leaf.depth == 1);

    // from_nodes rejects truncated buffers.
    std::vector<Node> bad = t.nodes();
    bad.pop_back();
    CHECK_THROWS_AS(ExprTree::from_nodes(bad), StructuralError);
}

TEST_CASE("subtree access and replacement preserve arithmetic meaning") {
    const std::vector<double> row = {2.0, 3.0, 5.0, 7.0};
    const ExprTree t = bin(BinaryOp::Add, bin(BinaryOp::Mul, v(0), v(1)), v(2));

    // Index 1 is the Mul subtree in preorder layout.
    const ExprTree sub = t.subtree_at(1);
    CHECK(sub.evaluate(row) == 6.0);

    const ExprTree swapped = t.replace_subtree(1, c(10.0));
    CHECK(swapped.evaluate(row) == 15.0);
    CHECK(t.evaluate(row) == 11.0);  // original untouched

    const ExprTree whole = t.replace_subtree(0, c(1.0));
    CHECK(whole.node_count() == 1);
}

TEST_CASE("grow and full initialization respect depth bounds and terminal closure") {
    const TerminalSet terms = four_vars();
    Rng rng(42);
    for (int i = 0; i < 500; ++i) {
        const int max_depth = 2 + static_cast<int>(rng.uniform_index(5));
        const ExprTree g = grow_init(terms, max_depth, rng);
        CHECK(g.depth() <= max_depth);
        const ExprTree f = full_init(terms, max_depth, rng);
        CHECK(f.depth() <= max_depth);
        for (const Node& n : f.nodes()) {
            if (n.kind == NodeKind::Variable) CHECK(n.index < 4);
            CHECK(n.kind != NodeKind::Abstracted);  // none registered
        }
    }

    // Depth 1 forces a single terminal.
    const ExprTree leaf = full_init(terms, 1, rng);
    CHECK(leaf.node_count() == 1);

    TerminalSet empty;
    CHECK_THROWS_AS(grow_init(empty, 3, rng), ConfigError);
}

TEST_CASE("ten thousand random variation steps stay within depth and evaluate finite") {
    const TerminalSet terms = four_vars();
    const int max_depth = 15;
    Rng rng(4242);
    std::vector<ExprTree> pool;
    for (int i = 0; i < 20; ++i) pool.push_back(grow_init(terms, 6, rng));

    const std::vector<double> row = {1.5, -2.0, 0.25, 8.0};
    for (int step = 0; step < 10000; ++step) {
        const std::size_t a = rng.uniform_index(pool.size());
        const std::size_t b = rng.uniform_index(pool.size());
        if (step % 2 == 0) {
            auto [ca, cb] = subtree_crossover(pool[a], pool[b], max_depth, rng);
            CHECK(ca.depth() <= max_depth);
            CHECK(cb.depth() <= max_depth);
            pool[a % pool.size()] = std::move(ca);
        } else {
            ExprTree m = subtree_mutation(pool[a], terms, max_depth, rng);
            CHECK(m.depth() <= max_depth);
            pool[a] = std::move(m);
        }
        const double val = pool[a].evaluate(row);
        CHECK(std::isfinite(val));
        CHECK(std::abs(val) <= kValueCap);
    }
}

TEST_CASE("crossover of two leaves swaps them") {
    Rng rng(9);
    const auto [x, y] = subtree_crossover(v(0), c(3.0), 15, rng);
    CHECK(x == c(3.0));
    CHECK(y == v(0));
}

TEST_CASE("serialize/parse round-trips randomly generated trees") {
    TerminalSet terms = four_vars();
    Rng rng(77);
    for (int i = 0; i < 1000; ++i) {
        const ExprTree t = grow_init(terms, 2 + static_cast<int>(rng.uniform_index(6)), rng);
        const std::string text = serialize(t, kNames);
        const ExprTree back = parse(text, kNames);
        REQUIRE(back == t);
    }
}

TEST_CASE("serialization uses names, shortest constants, and abstraction ids") {
    const ExprTree t = bin(BinaryOp::Add, bin(BinaryOp::Div, v(1), c(2.5)), v(0));
    CHECK(serialize(t, kNames) == "((x1 / 2.5) + x0)");
    CHECK(serialize(c(3.0), kNames) == "3");
    CHECK(serialize(ExprTree::abstracted(4), kNames) == "z4");

    const ExprTree parsed = parse("((x1 / 2.5) + x0)", kNames);
    CHECK(parsed == t);
    CHECK(parse("z4", kNames) == ExprTree::abstracted(4));

    CHECK_THROWS_AS(parse("(x0 +", kNames), InputError);
    CHECK_THROWS_AS(parse("unknown_var", kNames), InputError);
    CHECK_THROWS_AS(parse("(x0 ? x1)", kNames), InputError);
    CHECK_THROWS_AS(serialize(v(9), kNames), StructuralError);
}

TEST_CASE("abstraction registry enforces unique ids and resolves evaluation") {
    AbstractionRegistry reg;
    CHECK(reg.empty());
    CHECK(reg.next_id() == 1);

    reg.add(1, bin(BinaryOp::Mul, v(0), v(1)));
    CHECK(reg.contains(1));
    CHECK(reg.next_id() == 2);
    CHECK_THROWS_AS(reg.add(1, c(0.0)), StructuralError);

    const std::vector<double> row = {3.0, 4.0};
    const ExprTree user = bin(BinaryOp::Add, ExprTree::abstracted(1), c(1.0));
    CHECK(user.evaluate(row, &reg) == 13.0);

    // Unregistered id during evaluation is corrupted state.
    const ExprTree ghost = ExprTree::abstracted(9);
    CHECK_THROWS_AS(ghost.evaluate(row, &reg), StructuralError);
    CHECK_THROWS_AS(ghost.evaluate(row, nullptr), StructuralError);
}

TEST_CASE("expand_abstractions inlines nested references and flags unresolved ids") {
    AbstractionRegistry reg;
    reg.add(1, bin(BinaryOp::Add, v(0), c(1.0)));
    reg.add(2, bin(BinaryOp::Mul, ExprTree::abstracted(1), v(1)));

    const ExprTree t = bin(BinaryOp::Sub, ExprTree::abstracted(2), c(3.0));
    const ExprTree flat = expand_abstractions(t, reg);
    for (const Node& n : flat.nodes()) CHECK(n.kind != NodeKind::Abstracted);

    const std::vector<double> row = {2.0, 5.0};
    CHECK(flat.evaluate(row) == t.evaluate(row, &reg));
    CHECK(flat.evaluate(row) == (2.0 + 1.0) * 5.0 - 3.0);

    CHECK_THROWS_AS(expand_abstractions(ExprTree::abstracted(7), reg), StructuralError);
}

TEST_CASE("registered abstractions take a fixed share of terminal draws") {
    TerminalSet terms = four_vars();
    terms.abstractions = {1};
    Rng rng(2024);
    int abstracted = 0;
    int leaves = 0;
    for (int i = 0; i < 4000; ++i) {
        const ExprTree t = grow_init(terms, 4, rng);
        for (const Node& n : t.nodes()) {
            if (n.kind == NodeKind::BinaryOp) continue;
            ++leaves;
            if (n.kind == NodeKind::Abstracted) ++abstracted;
        }
    }
    const double share = static_cast<double>(abstracted) / static_cast<double>(leaves);
    CHECK(share > 0.22);
    CHECK(share < 0.38);
}

TEST_CASE("constant mutation jitters within the clamped constant range") {
    TerminalSet terms;
    terms.variables = {0};
    terms.constant_lo = -10.0;
    terms.constant_hi = 10.0;
    Rng rng(5);
    for (int i = 0; i < 2000; ++i) {
        const ExprTree m = subtree_mutation(c(9.9), terms, 15, rng);
        for (const Node& n : m.nodes()) {
            if (n.kind == NodeKind::Constant) {
                CHECK(n.value >= -10.0);
                CHECK(n.value <= 10.0);
            }
        }
    }
}
