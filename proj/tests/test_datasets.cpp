#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "oracles.hpp"
#include "pnd/datasets.hpp"
#include "pnd/errors.hpp"

using namespace pnd;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
    const fs::path dir = fs::temp_directory_path() / (std::string("pnd_test_") + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

Dataset tiny_dataset() {
    Dataset ds;
    ds.name = "tiny";
    ds.num_classes = 2;
    ds.labels = {0, 1, 0, 1};
    ds.features = DenseMatrix(4, 3);
    RngStream rng(5);
    for (double& v : ds.features.values) v = rng.uniform(-1.0, 1.0);
    ds.features.at(1, 2) = 0.0;
    ds.graph = build_graph({{0, 1}, {1, 2}, {2, 3}}, 4);
    return ds;
}

}  // namespace

TEST_CASE("dataset save/load round-trips bit-exactly") {
    const fs::path dir = temp_dir("roundtrip");
    const Dataset ds = tiny_dataset();
    save_dataset(ds, dir);
    const Dataset back = load_dataset(dir);
    CHECK(back.name == ds.name);
    CHECK(back.num_classes == ds.num_classes);
    CHECK(back.labels == ds.labels);
    REQUIRE(back.features.values.size() == ds.features.values.size());
    for (std::size_t k = 0; k < ds.features.values.size(); ++k) {
        CHECK(back.features.values[k] == ds.features.values[k]);
    }
    CHECK(back.graph.col_idx == ds.graph.col_idx);
    CHECK(back.graph.row_ptr == ds.graph.row_ptr);

    // Second save produces byte-identical files.
    const fs::path dir2 = temp_dir("roundtrip2");
    save_dataset(back, dir2);
    for (const char* name : {"manifest.json", "edges.tsv", "features.tsv", "labels.tsv"}) {
        std::ifstream a(dir / name, std::ios::binary);
        std::ifstream b(dir2 / name, std::ios::binary);
        std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
        std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
        CHECK(sa == sb);
    }
}

TEST_CASE("load_dataset: manifest/label count mismatch names the file") {
    const fs::path dir = temp_dir("mismatch");
    Dataset ds = tiny_dataset();
    save_dataset(ds, dir);
    // Truncate labels.tsv to 3 lines.
    std::ofstream out(dir / "labels.tsv");
    out << "0\n1\n0\n";
    out.close();
    try {
        load_dataset(dir);
        FAIL("expected LoadError");
    } catch (const LoadError& e) {
        CHECK(std::string(e.what()).find("labels.tsv") != std::string::npos);
    }
}

TEST_CASE("load_dataset: bad label value rejected with location") {
    const fs::path dir = temp_dir("badlabel");
    save_dataset(tiny_dataset(), dir);
    std::ofstream out(dir / "labels.tsv");
    out << "0\n1\n7\n1\n";
    out.close();
    CHECK_THROWS_AS(load_dataset(dir), LoadError);
}

TEST_CASE("load_dataset: missing file reported") {
    const fs::path dir = temp_dir("missing");
    save_dataset(tiny_dataset(), dir);
    fs::remove(dir / "features.tsv");
    CHECK_THROWS_AS(load_dataset(dir), LoadError);
}

TEST_CASE("splits save/load round-trip") {
    const fs::path dir = temp_dir("splits");
    Split s;
    s.train = {0, 1};
    s.val = {2};
    s.test_obs = {3};
    save_splits(s, dir);
    const auto back = load_splits(dir);
    REQUIRE(back.has_value());
    CHECK(back->train == s.train);
    CHECK(back->val == s.val);
    CHECK(back->test_obs == s.test_obs);
    CHECK(back->test_ind.empty());
    CHECK(!load_splits(temp_dir("nosplits")).has_value());
}

TEST_CASE("make_splits: transductive arithmetic for 7 x 100 nodes") {
    std::vector<int> labels;
    for (int c = 0; c < 7; ++c) {
        for (int i = 0; i < 100; ++i) labels.push_back(c);
    }
    const Split s = make_splits(labels, 7, 3);
    CHECK(s.train.size() == 140);
    CHECK(s.val.size() == 210);
    CHECK(s.test_obs.size() == 350);
    CHECK(s.test_ind.empty());
}

TEST_CASE("make_splits: inductive holds out 20% of the pool") {
    std::vector<int> labels;
    for (int c = 0; c < 7; ++c) {
        for (int i = 0; i < 100; ++i) labels.push_back(c);
    }
    const Split s = make_splits(labels, 7, 3, 20, 30, true);
    CHECK(s.test_ind.size() == 70);
    CHECK(s.test_obs.size() == 280);
}

TEST_CASE("make_splits: deterministic per seed, disjoint, covering") {
    std::vector<int> labels;
    for (int i = 0; i < 500; ++i) labels.push_back(i % 5);
    const Split a = make_splits(labels, 5, 9, 20, 30, true);
    const Split b = make_splits(labels, 5, 9, 20, 30, true);
    CHECK(a.train == b.train);
    CHECK(a.val == b.val);
    CHECK(a.test_obs == b.test_obs);
    CHECK(a.test_ind == b.test_ind);

    std::set<NodeId> seen;
    std::size_t total = 0;
    for (const auto* part : {&a.train, &a.val, &a.test_obs, &a.test_ind}) {
        for (NodeId i : *part) seen.insert(i);
        total += part->size();
    }
    CHECK(seen.size() == labels.size());
    CHECK(total == labels.size());
}

TEST_CASE("make_splits: per-class composition") {
    std::vector<int> labels;
    for (int i = 0; i < 300; ++i) labels.push_back(i % 3);
    const Split s = make_splits(labels, 3, 4);
    std::vector<int> train_per_class(3, 0);
    for (NodeId i : s.train) train_per_class[labels[static_cast<std::size_t>(i)]]++;
    for (int c : train_per_class) CHECK(c == 20);
}

TEST_CASE("make_splits: small class falls back proportionally or errors") {
    std::vector<int> labels;
    for (int i = 0; i < 24; ++i) labels.push_back(0);
    for (int i = 0; i < 100; ++i) labels.push_back(1);
    const Split s = make_splits(labels, 2, 1);
    CHECK(!s.train.empty());
    CHECK_THROWS_AS(make_splits(labels, 2, 1, 20, 30, false, 0.2, false), ConfigError);
}

TEST_CASE("remove_inductive_edges: empty set is a no-op, full set empties the graph") {
    const SparseGraph g = build_graph({{0, 1}, {1, 2}, {2, 3}, {3, 0}}, 4);
    const SparseGraph same = remove_inductive_edges(g, {});
    CHECK(same.col_idx == g.col_idx);
    const SparseGraph empty = remove_inductive_edges(g, {0, 1, 2, 3});
    CHECK(empty.num_directed_entries() == 0);
    CHECK(empty.num_nodes == 4);
}

TEST_CASE("remove_inductive_edges: 4-cycle minus node 0 leaves the 1-2-3 path") {
    const SparseGraph g = build_graph({{0, 1}, {1, 2}, {2, 3}, {3, 0}}, 4);
    const SparseGraph cut = remove_inductive_edges(g, {0});
    CHECK(cut.num_undirected_edges() == 2);
    CHECK(cut.degrees == std::vector<std::int64_t>{0, 1, 2, 1});
}

TEST_CASE("gen_chains: counts, homophily, far nodes") {
    const ChainsData chains = gen_chains(30, 8, 10, 7);
    CHECK(chains.dataset.graph.num_nodes == 240);
    CHECK(chains.dataset.graph.num_undirected_edges() == 210);
    CHECK(homophily(chains.dataset.graph, chains.dataset.labels) == doctest::Approx(1.0));
    CHECK(chains.base_nodes.size() == 30);
    CHECK(chains.far_nodes.size() == 150);  // 5 per chain, hops 3..7
    // Every far node is in the same chain as its base but > 2 positions away.
    for (NodeId f : chains.far_nodes) {
        const NodeId base = (f / 8) * 8;
        CHECK(f - base > 2);
    }
    CHECK_THROWS_AS(gen_chains(30, 8, 7, 1), ConfigError);
}

TEST_CASE("gen_chains: zero noise reproduces the strict one-hot layout") {
    const ChainsData chains = gen_chains(10, 8, 5, 3, 0.0);
    for (std::int64_t i = 0; i < chains.dataset.features.rows; ++i) {
        const bool is_base = (i % 8) == 0;
        double sum = 0.0;
        for (std::int64_t j = 0; j < 5; ++j) sum += chains.dataset.features.at(i, j);
        CHECK(sum == (is_base ? 1.0 : 0.0));
    }
}

TEST_CASE("gen_regular_homophily: trivial extremes") {
    // h=1, d=2, one class: disjoint cycles with homophily 1.
    const Dataset cyc = gen_regular_homophily(2, 1.0, 1, 12, 0);
    CHECK(homophily(cyc.graph, cyc.labels) == doctest::Approx(1.0));
    for (auto d : cyc.graph.degrees) CHECK(d == 2);
    // h=0, d=2, two classes: inter-class edges only.
    const Dataset bip = gen_regular_homophily(2, 0.0, 2, 10, 0);
    CHECK(homophily(bip.graph, bip.labels) == doctest::Approx(0.0));
    for (auto d : bip.graph.degrees) CHECK(d == 2);
}

TEST_CASE("gen_regular_homophily: d=10 h=0.8 five classes, per-node audit") {
    const Dataset ds = gen_regular_homophily(10, 0.8, 5, 50, 0);
    const SparseGraph& g = ds.graph;
    for (std::int64_t i = 0; i < g.num_nodes; ++i) {
        CHECK(g.degrees[i] == 10);
        int same = 0;
        for (std::int64_t k = g.row_ptr[i]; k < g.row_ptr[i + 1]; ++k) {
            if (ds.labels[static_cast<std::size_t>(g.col_idx[k])] ==
                ds.labels[static_cast<std::size_t>(i)]) {
                ++same;
            }
        }
        CHECK(same == 8);
    }
}

TEST_CASE("gen_regular_homophily: infeasible parameters rejected") {
    // Odd same-class degree with odd class size.
    CHECK_THROWS_AS(gen_regular_homophily(3, 1.0, 2, 9, 0), ConstructionError);
    // Same-class degree exceeding class size.
    CHECK_THROWS_AS(gen_regular_homophily(12, 1.0, 2, 10, 0), ConstructionError);
}

TEST_CASE("synth_teacher_output: epsilon 0 keeps all rows correct") {
    std::vector<int> labels(21, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 3);
    labels[0] = 0;
    RngStream rng(17);
    const ProbMatrix out = synth_teacher_output(labels, 3, 0.8, 0.0, 0.1, 0, rng);
    for (std::int64_t i = 1; i < out.rows(); ++i) {
        CHECK(out.values.at(i, labels[static_cast<std::size_t>(i)]) == doctest::Approx(0.8));
    }
    CHECK(out.values.at(0, 0) == doctest::Approx(0.1));
}

TEST_CASE("synth_teacher_output: row sums are one and flip count is exact") {
    std::vector<int> labels(501);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 5);
    labels[0] = 0;
    RngStream rng(19);
    const ProbMatrix out = synth_teacher_output(labels, 5, 0.9, 0.1, 0.05, 0, rng);
    std::int64_t flipped = 0;
    for (std::int64_t i = 0; i < out.rows(); ++i) {
        double sum = 0.0;
        for (std::int64_t j = 0; j < 5; ++j) sum += out.values.at(i, j);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        if (i > 0 && out.values.at(i, labels[static_cast<std::size_t>(i)]) != doctest::Approx(0.9)) {
            ++flipped;
        }
    }
    CHECK(flipped == 50);  // round(0.1 * 500)
}

TEST_CASE("synth_teacher_output: parameter validation") {
    std::vector<int> labels{0, 1};
    RngStream rng(1);
    CHECK_THROWS_AS(synth_teacher_output(labels, 2, 0.4, 0.0, 0.1, 0, rng), InputError);
    CHECK_THROWS_AS(synth_teacher_output(labels, 2, 0.9, 0.0, 0.6, 0, rng), InputError);
    CHECK_THROWS_AS(synth_teacher_output(labels, 2, 0.9, 1.0, 0.1, 0, rng), InputError);
    CHECK_THROWS_AS(synth_teacher_output(labels, 2, 0.9, 0.0, 0.1, 1, rng), InputError);
}
