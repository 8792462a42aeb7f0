#include "pnd/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pnd/errors.hpp"

namespace pnd {

namespace {

using json = nlohmann::json;

std::string loc(const std::filesystem::path& file, std::int64_t line) {
    return file.filename().string() + ":" + std::to_string(line);
}

std::ifstream open_or_throw(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw LoadError("missing file: " + file.string());
    return in;
}

double parse_double(std::string_view tok, const std::filesystem::path& file, std::int64_t line) {
    double v = 0.0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        throw LoadError(loc(file, line) + ": bad number '" + std::string(tok) + "'");
    }
    return v;
}

std::int64_t parse_int(std::string_view tok, const std::filesystem::path& file, std::int64_t line) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw LoadError(loc(file, line) + ": bad integer '" + std::string(tok) + "'");
    }
    return v;
}

void write_double(std::string& out, double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, ptr);
}

std::vector<NodeId> json_to_ids(const json& j, const char* key) {
    std::vector<NodeId> out;
    for (const auto& v : j.at(key)) out.push_back(v.get<NodeId>());
    return out;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    std::ifstream mf(manifest_path);
    if (!mf) throw LoadError("missing file: " + manifest_path.string());
    json manifest;
    try {
        mf >> manifest;
    } catch (const json::exception& e) {
        throw LoadError(manifest_path.string() + ": " + e.what());
    }

    Dataset ds;
    try {
        ds.name = manifest.at("name").get<std::string>();
        ds.num_classes = manifest.at("num_classes").get<int>();
    } catch (const json::exception& e) {
        throw LoadError(manifest_path.string() + ": " + e.what());
    }
    const std::int64_t num_nodes = manifest.at("num_nodes").get<std::int64_t>();
    const std::int64_t feature_dim = manifest.at("feature_dim").get<std::int64_t>();

    // labels.tsv
    {
        const auto path = dir / "labels.tsv";
        auto in = open_or_throw(path);
        std::string line;
        std::int64_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            const std::int64_t y = parse_int(line, path, lineno);
            if (y < 0 || y >= ds.num_classes) {
                throw LoadError(loc(path, lineno) + ": label " + std::to_string(y) +
                                " outside [0," + std::to_string(ds.num_classes) + ")");
            }
            ds.labels.push_back(static_cast<int>(y));
        }
        if (static_cast<std::int64_t>(ds.labels.size()) != num_nodes) {
            throw LoadError(path.string() + ": has " + std::to_string(ds.labels.size()) +
                            " labels, manifest claims " + std::to_string(num_nodes) + " nodes");
        }
    }

    // features.tsv
    {
        const auto path = dir / "features.tsv";
        auto in = open_or_throw(path);
        ds.features = DenseMatrix(num_nodes, feature_dim);
        std::string line;
        std::int64_t lineno = 0;
        std::int64_t row = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            if (row >= num_nodes) {
                throw LoadError(path.string() + ": more rows than manifest's " +
                                std::to_string(num_nodes) + " nodes");
            }
            std::int64_t col = 0;
            std::size_t pos = 0;
            while (pos <= line.size()) {
                std::size_t tab = line.find('\t', pos);
                if (tab == std::string::npos) tab = line.size();
                if (col >= feature_dim) {
                    throw LoadError(loc(path, lineno) + ": more than " +
                                    std::to_string(feature_dim) + " columns");
                }
                ds.features.at(row, col) =
                    parse_double(std::string_view(line).substr(pos, tab - pos), path, lineno);
                ++col;
                pos = tab + 1;
                if (tab == line.size()) break;
            }
            if (col != feature_dim) {
                throw LoadError(loc(path, lineno) + ": expected " + std::to_string(feature_dim) +
                                " columns, got " + std::to_string(col));
            }
            ++row;
        }
        if (row != num_nodes) {
            throw LoadError(path.string() + ": has " + std::to_string(row) +
                            " rows, manifest claims " + std::to_string(num_nodes) + " nodes");
        }
    }

    // edges.tsv
    {
        const auto path = dir / "edges.tsv";
        auto in = open_or_throw(path);
        std::vector<std::pair<NodeId, NodeId>> edges;
        std::string line;
        std::int64_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            const std::size_t tab = line.find('\t');
            if (tab == std::string::npos) {
                throw LoadError(loc(path, lineno) + ": expected two tab-separated ids");
            }
            const std::int64_t u = parse_int(std::string_view(line).substr(0, tab), path, lineno);
            const std::int64_t v = parse_int(std::string_view(line).substr(tab + 1), path, lineno);
            if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes) {
                throw LoadError(loc(path, lineno) + ": node id out of range");
            }
            edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
        }
        ds.graph = build_graph(edges, num_nodes);
    }
    return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        json manifest = {{"name", ds.name},
                         {"num_nodes", ds.graph.num_nodes},
                         {"num_classes", ds.num_classes},
                         {"feature_dim", ds.features.cols}};
        std::ofstream out(dir / "manifest.json");
        out << manifest.dump(2) << "\n";
    }
    {
        std::string buf;
        for (std::int64_t i = 0; i < ds.graph.num_nodes; ++i) {
            for (std::int64_t k = ds.graph.row_ptr[static_cast<std::size_t>(i)];
                 k < ds.graph.row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
                const NodeId j = ds.graph.col_idx[static_cast<std::size_t>(k)];
                if (j > i) {
                    buf += std::to_string(i);
                    buf += '\t';
                    buf += std::to_string(j);
                    buf += '\n';
                }
            }
        }
        std::ofstream out(dir / "edges.tsv", std::ios::binary);
        out << buf;
    }
    {
        std::string buf;
        buf.reserve(static_cast<std::size_t>(ds.features.rows * ds.features.cols * 2));
        for (std::int64_t i = 0; i < ds.features.rows; ++i) {
            const double* r = ds.features.row(i);
            for (std::int64_t j = 0; j < ds.features.cols; ++j) {
                if (j) buf += '\t';
                write_double(buf, r[j]);
            }
            buf += '\n';
        }
        std::ofstream out(dir / "features.tsv", std::ios::binary);
        out << buf;
    }
    {
        std::string buf;
        for (int y : ds.labels) {
            buf += std::to_string(y);
            buf += '\n';
        }
        std::ofstream out(dir / "labels.tsv", std::ios::binary);
        out << buf;
    }
}

std::optional<Split> load_splits(const std::filesystem::path& dir) {
    const auto path = dir / "splits.json";
    std::ifstream in(path);
    if (!in) return std::nullopt;
    json j;
    try {
        in >> j;
        Split s;
        s.train = json_to_ids(j, "train");
        s.val = json_to_ids(j, "val");
        s.test_obs = json_to_ids(j, "test_obs");
        s.test_ind = json_to_ids(j, "test_ind");
        return s;
    } catch (const json::exception& e) {
        throw LoadError(path.string() + ": " + e.what());
    }
}

void save_splits(const Split& split, const std::filesystem::path& dir) {
    json j = {{"train", split.train},
              {"val", split.val},
              {"test_obs", split.test_obs},
              {"test_ind", split.test_ind}};
    std::ofstream out(dir / "splits.json");
    out << j.dump() << "\n";
}

Split make_splits(const std::vector<int>& labels, int num_classes, std::uint64_t seed,
                  int per_class_train, int per_class_val, bool inductive,
                  double inductive_frac, bool allow_fallback) {
    if (num_classes <= 0) throw InputError("make_splits: num_classes must be positive");
    std::vector<std::vector<NodeId>> by_class(static_cast<std::size_t>(num_classes));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int y = labels[i];
        if (y < 0 || y >= num_classes) throw InputError("make_splits: label out of range");
        by_class[static_cast<std::size_t>(y)].push_back(static_cast<NodeId>(i));
    }

    RngStream rng(seed, /*stream=*/0xa11ce5);
    Split split;
    std::vector<NodeId> pool;
    for (int c = 0; c < num_classes; ++c) {
        auto& nodes = by_class[static_cast<std::size_t>(c)];
        int t = per_class_train;
        int v = per_class_val;
        if (static_cast<int>(nodes.size()) < t + v + 1) {
            if (!allow_fallback) {
                throw ConfigError("make_splits: class " + std::to_string(c) + " has only " +
                                  std::to_string(nodes.size()) + " nodes");
            }
            const double scale =
                static_cast<double>(nodes.size()) / static_cast<double>(t + v + 1);
            t = std::max(1, static_cast<int>(std::floor(per_class_train * scale)));
            v = std::max(1, static_cast<int>(std::floor(per_class_val * scale)));
            while (t + v >= static_cast<int>(nodes.size()) && v > 1) --v;
            while (t + v >= static_cast<int>(nodes.size()) && t > 1) --t;
            std::cerr << "make_splits: class " << c << " too small, using " << t << "/" << v
                      << " train/val\n";
        }
        rng.shuffle(nodes);
        for (int k = 0; k < t; ++k) split.train.push_back(nodes[static_cast<std::size_t>(k)]);
        for (int k = t; k < t + v; ++k) split.val.push_back(nodes[static_cast<std::size_t>(k)]);
        for (std::size_t k = static_cast<std::size_t>(t + v); k < nodes.size(); ++k) {
            pool.push_back(nodes[k]);
        }
    }

    std::sort(pool.begin(), pool.end());
    if (inductive) {
        rng.shuffle(pool);
        const std::size_t n_ind =
            static_cast<std::size_t>(std::floor(inductive_frac * static_cast<double>(pool.size())));
        split.test_ind.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_ind));
        split.test_obs.assign(pool.begin() + static_cast<std::ptrdiff_t>(n_ind), pool.end());
    } else {
        split.test_obs = pool;
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.val.begin(), split.val.end());
    std::sort(split.test_obs.begin(), split.test_obs.end());
    std::sort(split.test_ind.begin(), split.test_ind.end());
    return split;
}

SparseGraph remove_inductive_edges(const SparseGraph& g, const std::vector<NodeId>& ind) {
    std::vector<char> held(static_cast<std::size_t>(g.num_nodes), 0);
    for (NodeId i : ind) {
        if (i < 0 || i >= g.num_nodes) throw InputError("remove_inductive_edges: id out of range");
        held[static_cast<std::size_t>(i)] = 1;
    }
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (std::int64_t i = 0; i < g.num_nodes; ++i) {
        if (held[static_cast<std::size_t>(i)]) continue;
        for (std::int64_t k = g.row_ptr[static_cast<std::size_t>(i)];
             k < g.row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
            const NodeId j = g.col_idx[static_cast<std::size_t>(k)];
            if (j > i && !held[static_cast<std::size_t>(j)]) {
                edges.emplace_back(static_cast<NodeId>(i), j);
            }
        }
    }
    return build_graph(edges, g.num_nodes);
}

ChainsData gen_chains(int num_chains, int length, int num_classes, std::uint64_t seed,
                      double feature_noise) {
    if (num_classes <= 0 || num_chains <= 0 || length <= 0) {
        throw ConfigError("gen_chains: counts must be positive");
    }
    if (num_chains % num_classes != 0) {
        throw ConfigError("gen_chains: num_chains must be divisible by num_classes");
    }
    const std::int64_t n = static_cast<std::int64_t>(num_chains) * length;
    ChainsData out;
    out.dataset.name = "chains";
    out.dataset.num_classes = num_classes;
    out.dataset.labels.resize(static_cast<std::size_t>(n));
    out.dataset.features = DenseMatrix(n, num_classes);

    RngStream rng(seed, /*stream=*/0xc4a15);
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (int c = 0; c < num_chains; ++c) {
        const int cls = c % num_classes;
        const NodeId base = static_cast<NodeId>(c * length);
        out.base_nodes.push_back(base);
        for (int k = 0; k < length; ++k) {
            const NodeId node = base + k;
            out.dataset.labels[static_cast<std::size_t>(node)] = cls;
            if (k > 0) edges.emplace_back(node - 1, node);
            if (k > 2) out.far_nodes.push_back(node);
        }
        out.dataset.features.at(base, cls) = 1.0;
    }
    if (feature_noise > 0.0) {
        for (double& v : out.dataset.features.values) v += feature_noise * rng.normal();
    }
    out.dataset.graph = build_graph(edges, n);
    return out;
}

Dataset gen_regular_homophily(int degree, double h, int num_classes, int nodes_per_class,
                              std::uint64_t seed) {
    if (num_classes < 1 || nodes_per_class < 1 || degree < 0) {
        throw ConstructionError("gen_regular_homophily: bad sizes");
    }
    if (h < 0.0 || h > 1.0) throw ConstructionError("gen_regular_homophily: h outside [0,1]");
    const int m = nodes_per_class;
    const int same = static_cast<int>(std::lround(h * degree));
    const int cross = degree - same;
    const std::int64_t n = static_cast<std::int64_t>(num_classes) * m;
    if ((static_cast<std::int64_t>(degree) * n) % 2 != 0) {
        throw ConstructionError("gen_regular_homophily: d * |V| must be even");
    }
    if (same > m - 1) {
        throw ConstructionError("gen_regular_homophily: same-class degree exceeds class size");
    }
    if (same % 2 == 1 && m % 2 == 1) {
        throw ConstructionError("gen_regular_homophily: odd same-class degree needs even class size");
    }
    if (cross > 0 && num_classes < 2) {
        throw ConstructionError("gen_regular_homophily: cross edges need >= 2 classes");
    }

    std::vector<std::pair<NodeId, NodeId>> edges;
    auto node_of = [m](int cls, int i) { return static_cast<NodeId>(cls * m + i); };

    // Intra-class circulant: offsets 1..same/2, plus the antipodal matching
    // for odd degrees.
    const int half = same / 2;
    if (same % 2 == 1 && half + 1 > m / 2) {
        throw ConstructionError("gen_regular_homophily: circulant offsets exhausted");
    }
    for (int c = 0; c < num_classes; ++c) {
        for (int off = 1; off <= half; ++off) {
            if (2 * off == m) {
                throw ConstructionError("gen_regular_homophily: offset collides with antipode");
            }
            for (int i = 0; i < m; ++i) edges.emplace_back(node_of(c, i), node_of(c, (i + off) % m));
        }
        if (same % 2 == 1) {
            for (int i = 0; i < m / 2; ++i) edges.emplace_back(node_of(c, i), node_of(c, i + m / 2));
        }
    }

    // Inter-class edges: ring steps over classes, each step a set of
    // bipartite circulant shifts; an odd remainder uses the antipodal
    // class matching.
    if (cross > 0) {
        const int max_steps = (num_classes - 1) / 2;
        int units = cross / 2;
        const bool need_half = (cross % 2 == 1);
        if (need_half && num_classes % 2 != 0) {
            throw ConstructionError(
                "gen_regular_homophily: odd cross degree needs an even class count");
        }
        if (num_classes == 2) {
            // Single pair; all cross edges are shifts between the classes.
            if (cross > m) throw ConstructionError("gen_regular_homophily: cross degree too high");
            for (int t = 0; t < cross; ++t) {
                for (int i = 0; i < m; ++i) edges.emplace_back(node_of(0, i), node_of(1, (i + t) % m));
            }
        } else {
            // Spread units over distinct steps as evenly as possible.
            std::vector<int> mult(static_cast<std::size_t>(max_steps) + 1, 0);
            if (max_steps == 0 && units > 0) {
                throw ConstructionError("gen_regular_homophily: no cross steps available");
            }
            for (int u = 0; u < units; ++u) mult[static_cast<std::size_t>(u % max_steps) + 1]++;
            for (int stepv = 1; stepv <= max_steps; ++stepv) {
                const int k = mult[static_cast<std::size_t>(stepv)];
                if (k > m) throw ConstructionError("gen_regular_homophily: shift count exceeds class size");
                for (int c = 0; c < num_classes; ++c) {
                    const int c2 = (c + stepv) % num_classes;
                    for (int t = 0; t < k; ++t) {
                        for (int i = 0; i < m; ++i) {
                            edges.emplace_back(node_of(c, i), node_of(c2, (i + t) % m));
                        }
                    }
                }
            }
            if (need_half) {
                const int stepv = num_classes / 2;
                for (int c = 0; c < stepv; ++c) {
                    const int c2 = c + stepv;
                    for (int i = 0; i < m; ++i) {
                        edges.emplace_back(node_of(c, i), node_of(c2, i));
                    }
                }
            }
        }
    }

    Dataset ds;
    ds.name = "regular_h";
    ds.num_classes = num_classes;
    ds.labels.resize(static_cast<std::size_t>(n));
    for (int c = 0; c < num_classes; ++c) {
        for (int i = 0; i < m; ++i) ds.labels[static_cast<std::size_t>(node_of(c, i))] = c;
    }
    ds.graph = build_graph(edges, n);

    // The circulant construction is deterministic; verify the counts it
    // promises instead of retrying.
    for (std::int64_t i = 0; i < n; ++i) {
        if (ds.graph.degrees[static_cast<std::size_t>(i)] != degree) {
            throw ConstructionError("gen_regular_homophily: infeasible parameters (degree " +
                                    std::to_string(ds.graph.degrees[static_cast<std::size_t>(i)]) +
                                    " != " + std::to_string(degree) + ")");
        }
    }
    (void)seed;  // wiring is deterministic; seed kept for interface parity
    return ds;
}

ProbMatrix synth_teacher_output(const std::vector<int>& labels, int num_classes, double p,
                                double epsilon, double q, NodeId star, RngStream& rng) {
    const std::int64_t n = static_cast<std::int64_t>(labels.size());
    const double y = static_cast<double>(num_classes);
    if (!(p > 1.0 / y) || p > 1.0) throw InputError("synth_teacher_output: p must be in (1/|Y|, 1]");
    if (q < 0.0 || !(q < 1.0 / y)) throw InputError("synth_teacher_output: q must be in [0, 1/|Y|)");
    if (epsilon < 0.0 || epsilon >= 1.0) {
        throw InputError("synth_teacher_output: epsilon must be in [0, 1)");
    }
    if (star < 0 || star >= n) throw InputError("synth_teacher_output: star out of range");
    if (labels[static_cast<std::size_t>(star)] != 0) {
        throw InputError("synth_teacher_output: star's true class must be 0");
    }

    const double rest_p = (1.0 - p) / (y - 1.0);
    ProbMatrix out;
    out.values = DenseMatrix(n, num_classes, rest_p);
    for (std::int64_t i = 0; i < n; ++i) {
        if (i == star) continue;
        out.values.at(i, labels[static_cast<std::size_t>(i)]) = p;
    }
    {
        double* r = out.values.row(star);
        const double rest_q = (1.0 - q) / (y - 1.0);
        for (int c = 0; c < num_classes; ++c) r[c] = rest_q;
        r[0] = q;
    }

    // Flip round(epsilon * (n-1)) non-star rows to a uniformly chosen
    // incorrect class.
    const std::int64_t n_flip =
        static_cast<std::int64_t>(std::lround(epsilon * static_cast<double>(n - 1)));
    std::vector<NodeId> others;
    others.reserve(static_cast<std::size_t>(n - 1));
    for (std::int64_t i = 0; i < n; ++i) {
        if (i != star) others.push_back(static_cast<NodeId>(i));
    }
    rng.shuffle(others);
    for (std::int64_t k = 0; k < n_flip; ++k) {
        const NodeId i = others[static_cast<std::size_t>(k)];
        const int truth = labels[static_cast<std::size_t>(i)];
        int wrong = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(num_classes - 1)));
        if (wrong >= truth) ++wrong;
        double* r = out.values.row(i);
        for (int c = 0; c < num_classes; ++c) r[c] = rest_p;
        r[wrong] = p;
    }
    return out;
}

}  // namespace pnd
