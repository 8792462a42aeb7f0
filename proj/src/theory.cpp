#include "pnd/theory.hpp"

#include <algorithm>
#include <cmath>

#include "pnd/datasets.hpp"
#include "pnd/errors.hpp"
#include "pnd/rng.hpp"
#include "pnd/sparse_graph.hpp"

namespace pnd {

void TheoryParams::validate() const {
    const double y = static_cast<double>(num_classes);
    if (num_classes < 2) throw InputError("TheoryParams: need at least 2 classes");
    if (!(h > 1.0 / y) || h > 1.0) throw InputError("TheoryParams: h must be in (1/|Y|, 1]");
    if (!(p > 1.0 / y) || p > 1.0) throw InputError("TheoryParams: p must be in (1/|Y|, 1]");
    if (!(gamma > 0.0) || !(gamma < 1.0)) throw InputError("TheoryParams: gamma must be in (0, 1)");
    if (epsilon < 0.0 || epsilon >= 1.0) throw InputError("TheoryParams: epsilon must be in [0, 1)");
    if (q < 0.0 || !(q < 1.0 / y)) throw InputError("TheoryParams: q must be in [0, 1/|Y|)");
    if (degree < 1) throw InputError("TheoryParams: degree must be positive");
}

namespace {

BetaPair beta_at(const TheoryParams& params, double q) {
    const double y = static_cast<double>(params.num_classes);
    const double h = params.h;
    const double p = params.p;
    const double g = params.gamma;
    const double e = params.epsilon;
    const double y1 = y - 1.0;

    const double beta = (1.0 - g) * q + g * h * ((1.0 - e) * p + e * (1.0 - p) / y1) +
                        g * (1.0 - h) * (e * p / y1 + (y1 - e) * (1.0 - p) / (y1 * y1));

    const double flipped_mix = e * p / y1 + (y1 - e) * (1.0 - p) / (y1 * y1);
    const double beta_prime = (1.0 - g) * (1.0 - q) / y1 + g * h * flipped_mix +
                              g * (1.0 - h) / y1 * (e * (1.0 - p) / y1 + (1.0 - e) * p) +
                              g * (1.0 - h) * (y - 2.0) / y1 * flipped_mix;
    return BetaPair{beta, beta_prime};
}

}  // namespace

BetaPair beta_exact(const TheoryParams& params) {
    params.validate();
    return beta_at(params, params.q);
}

double correction_threshold(const TheoryParams& params) {
    if (params.gamma >= 1.0) throw InputError("correction_threshold: gamma must be < 1");
    params.validate();
    const double y = static_cast<double>(params.num_classes);
    const double c = (1.0 + 1.0 / y) * params.h * params.p - (params.h + params.p) / y;
    const double b = (c + params.h * params.p / y) * params.epsilon;
    return std::max(0.0, 1.0 / y - params.gamma / (1.0 - params.gamma) * (c - b));
}

double exact_threshold(const TheoryParams& params) {
    params.validate();
    const double y = static_cast<double>(params.num_classes);
    auto diff = [&](double q) {
        const BetaPair b = beta_at(params, q);
        return b.beta - b.beta_prime;
    };
    double lo = 0.0;
    double hi = 1.0 / y;
    if (diff(lo) > 0.0) return 0.0;       // corrected for every q
    if (diff(hi) <= 0.0) return 1.0 / y;  // never corrected inside the interval
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (diff(mid) > 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

double epsilon_bound(double h, int num_classes) {
    const double y = static_cast<double>(num_classes);
    if (num_classes < 2) throw InputError("epsilon_bound: need at least 2 classes");
    if (!(h > 1.0 / y)) throw InputError("epsilon_bound: h must exceed 1/|Y|");
    return (y * h - 1.0) / ((y + 1.0) * h - 1.0);
}

namespace {

// Flip plan for one group of equal-true-class nodes: each flipped node
// predicts one of its |Y|-1 wrong classes, spread as evenly as the integer
// count allows (the proof assumes exact uniformity).
void apply_group_flips(DenseMatrix& probs, const std::vector<NodeId>& group, int truth,
                       int flips, int num_classes, double p) {
    const double rest = (1.0 - p) / static_cast<double>(num_classes - 1);
    std::vector<int> wrong;
    for (int c = 0; c < num_classes; ++c) {
        if (c != truth) wrong.push_back(c);
    }
    for (int k = 0; k < flips; ++k) {
        const NodeId node = group[static_cast<std::size_t>(k)];
        const int target = wrong[static_cast<std::size_t>(k) % wrong.size()];
        double* r = probs.row(node);
        for (int c = 0; c < num_classes; ++c) r[c] = rest;
        r[target] = p;
    }
}

}  // namespace

CorrectionCheck verify_correction_empirical(const TheoryParams& params, int nodes_per_class,
                                            std::uint64_t seed) {
    params.validate();
    const int y = params.num_classes;
    const Dataset ds =
        gen_regular_homophily(params.degree, params.h, y, nodes_per_class, seed);
    const std::int64_t n = ds.graph.num_nodes;
    const NodeId star = 0;

    // Teacher matrix: all rows correct at p, star at q.
    const double rest_p = (1.0 - params.p) / static_cast<double>(y - 1);
    DenseMatrix probs(n, y, rest_p);
    for (std::int64_t i = 0; i < n; ++i) {
        probs.at(i, ds.labels[static_cast<std::size_t>(i)]) = params.p;
    }
    {
        double* r = probs.row(star);
        const double rest_q = (1.0 - params.q) / static_cast<double>(y - 1);
        for (int c = 0; c < y; ++c) r[c] = rest_q;
        r[0] = params.q;
    }

    // Deterministic flip composition inside the star's neighborhood.
    std::vector<std::vector<NodeId>> nbr_by_class(static_cast<std::size_t>(y));
    std::vector<char> is_nbr(static_cast<std::size_t>(n), 0);
    for (std::int64_t k = ds.graph.row_ptr[star]; k < ds.graph.row_ptr[star + 1]; ++k) {
        const NodeId j = ds.graph.col_idx[static_cast<std::size_t>(k)];
        nbr_by_class[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(j)])].push_back(j);
        is_nbr[static_cast<std::size_t>(j)] = 1;
    }
    std::int64_t planned = 0;
    for (int c = 0; c < y; ++c) {
        const auto& group = nbr_by_class[static_cast<std::size_t>(c)];
        const int flips = static_cast<int>(
            std::lround(params.epsilon * static_cast<double>(group.size())));
        apply_group_flips(probs, group, c, flips, y, params.p);
        planned += flips;
    }

    // Remaining flips land outside the neighborhood; they cannot influence
    // the star's row but keep the global count at round(eps * (|V|-1)).
    const std::int64_t total =
        static_cast<std::int64_t>(std::lround(params.epsilon * static_cast<double>(n - 1)));
    std::int64_t remaining = std::max<std::int64_t>(0, total - planned);
    for (std::int64_t i = 1; i < n && remaining > 0; ++i) {
        if (is_nbr[static_cast<std::size_t>(i)]) continue;
        const int truth = ds.labels[static_cast<std::size_t>(i)];
        // Offset in [1, y-1] never wraps back onto the true class.
        const int target = (truth + 1 + static_cast<int>(i % (y - 1))) % y;
        double* r = probs.row(i);
        for (int c = 0; c < y; ++c) r[c] = rest_p;
        r[target] = params.p;
        --remaining;
    }

    // One propagation step with the proof's normalization.
    const NormalizedAdjacency adj = normalized_adjacency_no_loops(ds.graph);
    const DenseMatrix ap = apply_operator(adj, probs);
    std::vector<double> star_row(static_cast<std::size_t>(y));
    for (int c = 0; c < y; ++c) {
        star_row[static_cast<std::size_t>(c)] =
            params.gamma * ap.at(star, c) + (1.0 - params.gamma) * probs.at(star, c);
    }

    CorrectionCheck out;
    const BetaPair b = beta_at(params, params.q);
    out.beta = b.beta;
    out.beta_prime = b.beta_prime;
    out.predicted = b.beta > b.beta_prime;
    int arg = 0;
    for (int c = 1; c < y; ++c) {
        if (star_row[static_cast<std::size_t>(c)] > star_row[static_cast<std::size_t>(arg)]) arg = c;
    }
    out.observed = (arg == 0);

    double dev = 0.0;
    for (int c = 0; c < y; ++c) {
        const double expect = (c == 0) ? b.beta : b.beta_prime;
        dev = std::max(dev, std::abs(star_row[static_cast<std::size_t>(c)] - expect));
    }
    out.composition_exact = dev < 1e-9;

    out.q_min_approx = correction_threshold(params);
    out.q_star_exact = exact_threshold(params);

    // Empirical flip threshold: only the star's own row depends on q, so
    // bisection reuses the fixed neighbor aggregate.
    std::vector<double> agg(static_cast<std::size_t>(y), 0.0);
    for (std::int64_t k = adj.row_ptr[star]; k < adj.row_ptr[star + 1]; ++k) {
        const double w = adj.weights[static_cast<std::size_t>(k)];
        const double* src = probs.row(adj.col_idx[static_cast<std::size_t>(k)]);
        for (int c = 0; c < y; ++c) agg[static_cast<std::size_t>(c)] += w * src[c];
    }
    auto corrected_at = [&](double q) {
        const double e0 = (1.0 - params.gamma) * q + params.gamma * agg[0];
        double emax = -1.0;
        const double rest_q = (1.0 - q) / static_cast<double>(y - 1);
        for (int c = 1; c < y; ++c) {
            emax = std::max(emax, (1.0 - params.gamma) * rest_q +
                                      params.gamma * agg[static_cast<std::size_t>(c)]);
        }
        return e0 > emax;
    };
    double lo = 0.0;
    double hi = 1.0 / static_cast<double>(y);
    if (corrected_at(lo)) {
        out.q_star_empirical = 0.0;
    } else if (!corrected_at(hi)) {
        out.q_star_empirical = hi;
    } else {
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (corrected_at(mid) ? hi : lo) = mid;
        }
        out.q_star_empirical = 0.5 * (lo + hi);
    }
    return out;
}

double correction_agreement_monte_carlo(const TheoryParams& params, int nodes_per_class,
                                        int trials, std::uint64_t seed) {
    params.validate();
    const int y = params.num_classes;
    const Dataset ds =
        gen_regular_homophily(params.degree, params.h, y, nodes_per_class, seed);
    const NormalizedAdjacency adj = normalized_adjacency_no_loops(ds.graph);
    const NodeId star = 0;
    const BetaPair b = beta_exact(params);
    const bool predicted = b.beta > b.beta_prime;

    RngStream rng(seed, /*stream=*/0x7e0);
    int agree = 0;
    for (int t = 0; t < trials; ++t) {
        const ProbMatrix probs = synth_teacher_output(ds.labels, y, params.p, params.epsilon,
                                                      params.q, star, rng);
        std::vector<double> row(static_cast<std::size_t>(y), 0.0);
        for (std::int64_t k = adj.row_ptr[star]; k < adj.row_ptr[star + 1]; ++k) {
            const double w = adj.weights[static_cast<std::size_t>(k)];
            const double* src = probs.values.row(adj.col_idx[static_cast<std::size_t>(k)]);
            for (int c = 0; c < y; ++c) row[static_cast<std::size_t>(c)] += w * src[c];
        }
        for (int c = 0; c < y; ++c) {
            row[static_cast<std::size_t>(c)] = params.gamma * row[static_cast<std::size_t>(c)] +
                                               (1.0 - params.gamma) * probs.values.at(star, c);
        }
        int arg = 0;
        for (int c = 1; c < y; ++c) {
            if (row[static_cast<std::size_t>(c)] > row[static_cast<std::size_t>(arg)]) arg = c;
        }
        if ((arg == 0) == predicted) ++agree;
    }
    return static_cast<double>(agree) / static_cast<double>(std::max(1, trials));
}

}  // namespace pnd
