#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pnd/datasets.hpp"
#include "pnd/distill.hpp"
#include "pnd/teacher.hpp"

namespace pnd {

// Flat key=value configuration with [section] headers; flags override file
// values. Keys are stored as "section.key" ("experiment" when bare).
class ConfigMap {
public:
    static ConfigMap from_file(const std::filesystem::path& path);
    void apply_override(const std::string& key, const std::string& value);

    std::string get(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const;
    std::vector<int> get_ints(const std::string& key, std::vector<int> fallback) const;
    bool has(const std::string& key) const;

    // Sorted echo of every key, for reports and hashing.
    std::string echo() const;

private:
    std::map<std::string, std::string> values_;
};

struct ExperimentConfig {
    std::filesystem::path dataset_dir;
    std::string dataset_name;
    bool inductive = false;
    std::string variant = "pnd_fix";  // glnn|invkd|pnd|pnd_fix|conv|mlp
    double gamma = 0.9;
    int iterations = 20;
    double alpha = 0.0;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    TeacherConfig teacher;
    StudentConfig student;
    std::filesystem::path out_dir = "out";
    int threads = 2;
    std::vector<double> gamma_grid;
    int sweep_seeds = 0;  // 0 = use all seeds
    std::vector<int> t_grid;
    ConfigMap raw;

    static ExperimentConfig from_config(const ConfigMap& cfg,
                                        const std::filesystem::path& data_root);
};

// Resolves a dataset name or path against --data-root / PND_DATA_DIR.
std::filesystem::path resolve_dataset_dir(const std::string& name_or_path,
                                          const std::filesystem::path& data_root);

// Per-seed pipeline shared by the commands: split, teacher graph (edges
// removed when inductive), trained teacher.
struct SeedArtifacts {
    Split split;
    SparseGraph graph;  // the training-time graph
    NormalizedAdjacency adj;
    ProbMatrix teacher_probs;
    TeacherMetrics teacher_metrics;
    SageModel teacher_model;
};

SeedArtifacts run_teacher_seed(const Dataset& ds, const SparseFeatures& x,
                               const ExperimentConfig& cfg, std::uint64_t seed);

struct SeedOutcome {
    std::uint64_t seed = 0;
    double test_obs_acc = 0.0;
    std::optional<double> test_ind_acc;
    int best_epoch = -1;
    std::vector<EpochRecord> history;
};

struct RunReport {
    std::vector<SeedOutcome> per_seed;
    double mean_test_obs = 0.0;
    double std_test_obs = 0.0;
    std::optional<double> mean_test_ind;
    std::optional<double> std_test_ind;
    std::string input_hash;
};

// Mean and population standard deviation.
std::pair<double, double> mean_std(const std::vector<double>& xs);

// Distillation (or plain-MLP) run over every seed; writes metrics.jsonl
// per seed plus report.json, returns the aggregate.
RunReport run_distill(const Dataset& ds, const ExperimentConfig& cfg,
                      const std::filesystem::path& out_dir);

int cmd_train_teacher(const ExperimentConfig& cfg);
int cmd_distill(const ExperimentConfig& cfg);
int cmd_sweep(const ExperimentConfig& cfg);
int cmd_chains_casestudy(const ExperimentConfig& cfg);
int cmd_energy_trace(const ExperimentConfig& cfg);
int cmd_theory_check(const ExperimentConfig& cfg);
int cmd_gen_chains(const ExperimentConfig& cfg);
int cmd_gen_synthetic(const ExperimentConfig& cfg);
int cmd_make_splits(const ExperimentConfig& cfg);

// Chains case study pieces exposed for the acceptance suite.
struct ChainsCaseReport {
    double teacher_far_acc = 0.0;
    std::map<std::string, double> far_acc_by_target;  // pt, ppr, pnd, pnd_fix
};
ChainsCaseReport run_chains_casestudy(const ExperimentConfig& cfg,
                                      const std::filesystem::path& out_dir);

// Energy trace pieces exposed for the acceptance suite: per-seed final
// energies for GLNN and InvKD under identical seeds.
struct EnergyTraceReport {
    std::vector<std::uint64_t> seeds;
    std::vector<double> glnn_final;
    std::vector<double> invkd_final;
    std::vector<std::vector<double>> glnn_curve;
    std::vector<std::vector<double>> invkd_curve;
};
EnergyTraceReport run_energy_trace(const Dataset& ds, const ExperimentConfig& cfg);

// The built-in theory-check tuple set (acceptance uses the first 50 with
// exact composition and comfortable margin).
struct TheoryTuple {
    double h, p, gamma, epsilon, q;
    int num_classes, degree, nodes_per_class;
};
std::vector<TheoryTuple> default_theory_tuples();

// Grid search over student hyperparameters by validation accuracy.
struct GridSearchResult {
    StudentConfig best;
    double best_val_acc = 0.0;
    int combos_tried = 0;
};
GridSearchResult select_student_hyperparams(const DistillInputs& inputs,
                                            const DistillConfig& distill,
                                            const StudentConfig& base,
                                            const std::vector<double>& lrs,
                                            const std::vector<double>& weight_decays,
                                            const std::vector<double>& dropouts, int budget,
                                            std::uint64_t seed);

// Bounded worker pool; jobs indexed 0..n-1, results merged by index.
void parallel_for(int num_jobs, int threads, const std::function<void(int)>& job);

}  // namespace pnd
