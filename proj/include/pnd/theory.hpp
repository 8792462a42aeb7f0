#pragma once

#include <cstdint>
#include <vector>

#include "pnd/dense_matrix.hpp"

namespace pnd {

// Parameters of the self-correction analysis. The propagation here uses
// the proof's own convention, D^{-1/2} A D^{-1/2} without self-loops; it
// never mixes with the main pipeline's self-loop normalization.
struct TheoryParams {
    double h = 0.8;       // homophily, (1/|Y|, 1]
    double p = 0.9;       // teacher correct-class probability, (1/|Y|, 1]
    int num_classes = 5;  // |Y| >= 2
    double gamma = 0.9;   // (0, 1)
    double epsilon = 0.0; // error ratio, [0, 1)
    double q = 0.0;       // star's class-0 probability, [0, 1/|Y|)
    int degree = 20;      // d, for the empirical checks

    void validate() const;
};

struct BetaPair {
    double beta;        // class-0 entry of the star's row after one step
    double beta_prime;  // every other class's entry
};

// The closed forms evaluated exactly as printed (no (|Y|-2)/(|Y|-1) ~ 1
// approximation).
BetaPair beta_exact(const TheoryParams& params);

// max(0, 1/|Y| - gamma/(1-gamma) (C - b(eps))) with
// C = (1 + 1/|Y|) h p - (h + p)/|Y| and b(eps) = (C + h p / |Y|) eps.
double correction_threshold(const TheoryParams& params);

// The q where beta - beta_prime changes sign, found by bisection on the
// exact expressions over [0, 1/|Y|]; both expressions are affine in q so
// the crossing is unique. Returns a clamped endpoint when no crossing
// falls inside the interval.
double exact_threshold(const TheoryParams& params);

// Largest tolerable error ratio, (|Y| h - 1) / ((|Y|+1) h - 1); defined
// for h > 1/|Y| and strictly increasing in h.
double epsilon_bound(double h, int num_classes);

struct CorrectionCheck {
    bool predicted = false;       // sign(beta - beta_prime) from the closed form
    bool observed = false;        // argmax of the star's propagated row == 0
    bool composition_exact = false;  // integer flip plan matched the proof exactly
    double beta = 0.0;
    double beta_prime = 0.0;
    double q_min_approx = 0.0;    // Theorem-2 threshold
    double q_star_exact = 0.0;    // bisection on the closed forms
    double q_star_empirical = 0.0;  // bisection on the actual propagation
};

// Builds the regular homophily graph, synthesizes the teacher matrix with
// the flip composition the proof assumes enforced deterministically in the
// star's neighborhood, runs one propagation step, and compares against the
// closed forms. nodes_per_class must make the construction feasible.
CorrectionCheck verify_correction_empirical(const TheoryParams& params, int nodes_per_class,
                                            std::uint64_t seed);

// Same graph and parameters, but epsilon flips drawn uniformly at random;
// returns the fraction of trials where prediction and observation agree.
double correction_agreement_monte_carlo(const TheoryParams& params, int nodes_per_class,
                                        int trials, std::uint64_t seed);

}  // namespace pnd
