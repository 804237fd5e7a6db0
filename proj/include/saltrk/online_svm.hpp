#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <span>
#include <vector>

#include "saltrk/common.hpp"

namespace saltrk {

// E1: on the margin (m = 0, 0 < a < C); E2: bounded (m < 0, a = C); E3: rest (m > 0, a = 0).
enum class MarginSet { E1, E2, E3 };

struct LabeledExample {
  std::vector<double> features;
  int label = 1;  // +1 or -1
};

// Exact incremental/decremental linear SVM. Every example added stays KKT-consistent
// after each update; see kkt_residual().
class SvmModel {
 public:
  static constexpr double kMarginTolerance = 1e-6;
  static constexpr double kRidge = 1e-10;

  explicit SvmModel(double C = 1.0);

  double C() const { return C_; }
  std::size_t size() const { return labels_.size(); }
  int dim() const { return dim_; }
  double bias() const { return bias_; }
  double alpha(std::size_t i) const { return alphas_.at(i); }
  int label(std::size_t i) const { return labels_.at(i); }
  MarginSet set_of(std::size_t i) const { return sets_.at(i); }
  std::span<const double> features(std::size_t i) const;

  // E1 members in the order of the bookkeeping system rows.
  const std::vector<std::size_t>& margin_support() const { return margin_sv_; }
  std::size_t support_count() const;  // |E1 u E2|
  bool degenerate_one_class() const;

  double predict(std::span<const double> x) const;
  const std::vector<double>& weight_vector() const { return w_; }
  double margin(std::size_t i) const;
  double dual_objective() const;
  // Largest violation of the optimality conditions over all examples, including |sum y a|.
  double kkt_residual() const;

  void add(std::span<const double> x, int y);
  void partial_fit(std::span<const LabeledExample> batch);
  // Drives the example's multiplier to zero adiabatically and removes it from the training set.
  void unlearn(std::size_t index);
  // Unlearns support vectors, largest margin first, until |E1 u E2| <= budget.
  void prune_to_budget(std::size_t budget);

  void write_snapshot(const std::filesystem::path& path) const;

 private:
  struct Sensitivity {
    Eigen::VectorXd beta;   // [d bias, d alpha of each E1 member] per unit change of the driving alpha
    std::vector<double> u;  // change of w per unit change of the driving alpha
  };

  double kernel(std::size_t i, std::size_t j) const;
  double dot_feature(std::size_t i, std::span<const double> v) const;
  Sensitivity sensitivity(std::size_t c) const;
  std::vector<double> margin_gradients(std::size_t c, const Sensitivity& s) const;

  void increment(std::size_t c);
  void decrement(std::size_t c);
  // Moves only the bias when E1 is empty; returns false if no example limits the move.
  bool bias_step(std::size_t c, int direction, bool& driver_settled);

  // Returns false, leaving k at its bound, when k's row is linearly dependent on the current
  // margin set; its margin then cannot move until the set changes. `force` joins regardless.
  bool join_margin(std::size_t k, bool force = false);
  bool blocked(std::size_t k) const;
  void leave_margin(std::size_t k, MarginSet target, bool clamp = true);
  void rebuild_inverse();
  void settle_margin_members();
  void recompute_weights();
  void erase_example(std::size_t k);

  double C_;
  int dim_ = 0;
  std::vector<double> features_;  // size() x dim_, row-major
  std::vector<int> labels_;
  std::vector<double> alphas_;
  std::vector<MarginSet> sets_;
  double bias_ = 0.0;
  std::vector<double> w_;

  std::vector<std::size_t> margin_sv_;
  Eigen::MatrixXd inverse_;  // inverse of [[0, y_S^T], [y_S, Q_SS]]
  int updates_since_rebuild_ = 0;
  std::vector<std::size_t> blocked_;  // dependent candidates refused since the last set change
  bool seen_pos_ = false, seen_neg_ = false;
};

}  // namespace saltrk
