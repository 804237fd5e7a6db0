#include "saltrk/online_svm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace saltrk {

namespace {

constexpr double kPivotEps = 1e-12;
constexpr double kEntryTolerance = 1e-9;
constexpr int kRebuildEvery = 64;
// Schur pivot below this (relative to the candidate's own kernel value) means linear dependence.
constexpr double kDependentPivot = 1e-9;
constexpr double kSuspectPivot = 1e-6;

enum class Event { None, DriverToMargin, DriverToBound, DriverDone, MemberToBound, MemberToRest, EnterMargin };

struct Limit {
  double step = std::numeric_limits<double>::infinity();
  Event event = Event::None;
  std::size_t index = 0;

  void offer(double t, Event e, std::size_t i) {
    if (t < step) {
      step = t;
      event = e;
      index = i;
    }
  }
};

}  // namespace

SvmModel::SvmModel(double C) : C_(C) {
  if (!(C > 0.0)) throw ConfigError("SVM box constraint C must be positive");
}

std::span<const double> SvmModel::features(std::size_t i) const {
  if (i >= size()) throw std::out_of_range("example index");
  return {features_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
}

std::size_t SvmModel::support_count() const {
  return static_cast<std::size_t>(std::count_if(sets_.begin(), sets_.end(), [](MarginSet s) { return s != MarginSet::E3; }));
}

bool SvmModel::degenerate_one_class() const { return !(seen_pos_ && seen_neg_); }

double SvmModel::dot_feature(std::size_t i, std::span<const double> v) const {
  const double* xi = features_.data() + i * static_cast<std::size_t>(dim_);
  double s = 0.0;
  for (int k = 0; k < dim_; ++k) s += xi[k] * v[k];
  return s;
}

double SvmModel::kernel(std::size_t i, std::size_t j) const { return dot_feature(i, features(j)); }

double SvmModel::predict(std::span<const double> x) const {
  if (dim_ == 0) return bias_;
  if (x.size() != static_cast<std::size_t>(dim_))
    throw InputError("feature dimension " + std::to_string(x.size()) + " does not match model dimension " +
                     std::to_string(dim_));
  double s = bias_;
  for (int k = 0; k < dim_; ++k) s += w_[k] * x[k];
  return s;
}

double SvmModel::margin(std::size_t i) const {
  if (i >= size()) throw std::out_of_range("example index");
  return labels_[i] * (dot_feature(i, w_) + bias_) - 1.0;
}

double SvmModel::dual_objective() const {
  double ww = 0.0, sa = 0.0;
  for (double v : w_) ww += v * v;
  for (double a : alphas_) sa += a;
  return 0.5 * ww - sa;
}

double SvmModel::kkt_residual() const {
  double worst = 0.0, balance = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    double m = margin(i), a = alphas_[i];
    balance += labels_[i] * a;
    if (a <= 0.0) worst = std::max(worst, -m);
    else if (a >= C_) worst = std::max(worst, m);
    else worst = std::max(worst, std::abs(m));
    if (a < 0.0 || a > C_) worst = std::max(worst, std::max(-a, a - C_));
  }
  return std::max(worst, std::abs(balance));
}

void SvmModel::recompute_weights() {
  std::fill(w_.begin(), w_.end(), 0.0);
  for (std::size_t i = 0; i < size(); ++i) {
    if (alphas_[i] == 0.0) continue;
    double coef = alphas_[i] * labels_[i];
    const double* xi = features_.data() + i * static_cast<std::size_t>(dim_);
    for (int k = 0; k < dim_; ++k) w_[k] += coef * xi[k];
  }
}

SvmModel::Sensitivity SvmModel::sensitivity(std::size_t c) const {
  const std::size_t ns = margin_sv_.size();
  Eigen::VectorXd q(ns + 1);
  q(0) = labels_[c];
  for (std::size_t k = 0; k < ns; ++k) {
    std::size_t s = margin_sv_[k];
    q(k + 1) = labels_[s] * labels_[c] * kernel(s, c);
  }
  Sensitivity out;
  out.beta = -(inverse_ * q);
  out.u.assign(dim_, 0.0);
  auto xc = features(c);
  for (int d = 0; d < dim_; ++d) out.u[d] = labels_[c] * xc[d];
  for (std::size_t k = 0; k < ns; ++k) {
    std::size_t s = margin_sv_[k];
    double coef = out.beta(k + 1) * labels_[s];
    auto xs = features(s);
    for (int d = 0; d < dim_; ++d) out.u[d] += coef * xs[d];
  }
  return out;
}

std::vector<double> SvmModel::margin_gradients(std::size_t, const Sensitivity& s) const {
  std::vector<double> gamma(size());
  for (std::size_t i = 0; i < size(); ++i) gamma[i] = labels_[i] * (dot_feature(i, s.u) + s.beta(0));
  return gamma;
}

void SvmModel::rebuild_inverse() {
  const std::size_t ns = margin_sv_.size();
  updates_since_rebuild_ = 0;
  if (ns == 0) {
    inverse_.resize(0, 0);
    return;
  }
  Eigen::MatrixXd m(ns + 1, ns + 1);
  m(0, 0) = 0.0;
  for (std::size_t a = 0; a < ns; ++a) {
    m(0, a + 1) = m(a + 1, 0) = labels_[margin_sv_[a]];
    for (std::size_t b = 0; b < ns; ++b)
      m(a + 1, b + 1) = labels_[margin_sv_[a]] * labels_[margin_sv_[b]] * kernel(margin_sv_[a], margin_sv_[b]);
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  if (!lu.isInvertible()) {
    for (std::size_t a = 0; a < ns; ++a) m(a + 1, a + 1) += kRidge;
    lu.compute(m);
  }
  inverse_ = lu.inverse();
}

bool SvmModel::blocked(std::size_t k) const {
  return std::find(blocked_.begin(), blocked_.end(), k) != blocked_.end();
}

bool SvmModel::join_margin(std::size_t k, bool force) {
  const std::size_t ns = margin_sv_.size();
  if (ns == 0) {
    sets_[k] = MarginSet::E1;
    blocked_.clear();
    margin_sv_.push_back(k);
    double y = labels_[k];
    inverse_.resize(2, 2);
    inverse_ << -kernel(k, k), y, y, 0.0;
    ++updates_since_rebuild_;
    return true;
  }
  Eigen::VectorXd q(ns + 1);
  q(0) = labels_[k];
  for (std::size_t a = 0; a < ns; ++a) q(a + 1) = labels_[margin_sv_[a]] * labels_[k] * kernel(margin_sv_[a], k);
  Eigen::VectorXd beta = -(inverse_ * q);
  const double kkk = kernel(k, k);
  const double scale = std::max(1.0, kkk);
  double gamma = kkk + q.dot(beta);
  if (gamma < kSuspectPivot * scale && updates_since_rebuild_ > 0) {
    // Small pivots are where drift in the updated inverse matters; decide on a fresh one.
    rebuild_inverse();
    beta = -(inverse_ * q);
    gamma = kkk + q.dot(beta);
  }
  // With a linear kernel the bordered system has rank at most dim + 2.
  const bool saturated = ns >= static_cast<std::size_t>(dim_) + 1;
  if (saturated || gamma < kDependentPivot * scale) {
    if (!force) {
      blocked_.push_back(k);
      return false;
    }
    gamma = std::max(gamma, 0.0) + kRidge;
  }
  sets_[k] = MarginSet::E1;
  blocked_.clear();

  Eigen::VectorXd ext(ns + 2);
  ext.head(ns + 1) = beta;
  ext(ns + 1) = 1.0;
  Eigen::MatrixXd grown = Eigen::MatrixXd::Zero(ns + 2, ns + 2);
  grown.topLeftCorner(ns + 1, ns + 1) = inverse_;
  grown += ext * ext.transpose() / gamma;
  inverse_ = std::move(grown);
  margin_sv_.push_back(k);
  if (++updates_since_rebuild_ >= kRebuildEvery) rebuild_inverse();
  return true;
}

void SvmModel::leave_margin(std::size_t k, MarginSet target, bool clamp) {
  auto it = std::find(margin_sv_.begin(), margin_sv_.end(), k);
  if (it == margin_sv_.end()) throw StateError("example is not a margin support vector");
  const Eigen::Index p = static_cast<Eigen::Index>(it - margin_sv_.begin()) + 1;
  margin_sv_.erase(it);
  sets_[k] = target;
  blocked_.clear();
  if (clamp && target == MarginSet::E3) alphas_[k] = 0.0;
  if (clamp && target == MarginSet::E2) alphas_[k] = C_;

  if (margin_sv_.empty()) {
    inverse_.resize(0, 0);
    return;
  }
  const Eigen::Index n = inverse_.rows();
  double pivot = inverse_(p, p);
  if (std::abs(pivot) < kPivotEps) {
    rebuild_inverse();
    return;
  }
  Eigen::MatrixXd reduced = inverse_ - inverse_.col(p) * inverse_.row(p) / pivot;
  Eigen::MatrixXd out(n - 1, n - 1);
  for (Eigen::Index r = 0, rr = 0; r < n; ++r) {
    if (r == p) continue;
    for (Eigen::Index c = 0, cc = 0; c < n; ++c) {
      if (c == p) continue;
      out(rr, cc++) = reduced(r, c);
    }
    ++rr;
  }
  inverse_ = std::move(out);
  if (++updates_since_rebuild_ >= kRebuildEvery) rebuild_inverse();
}

// E1 members whose multiplier reached a bound are filed with that bound.
void SvmModel::settle_margin_members() {
  for (std::size_t pos = 0; pos < margin_sv_.size();) {
    std::size_t k = margin_sv_[pos];
    if (alphas_[k] <= kEntryTolerance * C_) leave_margin(k, MarginSet::E3);
    else if (alphas_[k] >= C_ * (1.0 - kEntryTolerance)) leave_margin(k, MarginSet::E2);
    else ++pos;
  }
}

bool SvmModel::bias_step(std::size_t c, int direction, bool& driver_settled) {
  driver_settled = false;
  Limit lim;
  lim.offer(std::max(0.0, -margin(c) * direction * labels_[c]), Event::DriverToMargin, c);
  for (std::size_t i = 0; i < size(); ++i) {
    if (i == c || blocked(i)) continue;
    double rate = direction * labels_[i];  // change of m_i per unit move
    double m = margin(i);
    if (sets_[i] == MarginSet::E3 && rate < 0) lim.offer(std::max(0.0, m / -rate), Event::EnterMargin, i);
    if (sets_[i] == MarginSet::E2 && rate > 0) lim.offer(std::max(0.0, -m / rate), Event::EnterMargin, i);
  }
  if (lim.event == Event::None) return false;
  bias_ += direction * lim.step;
  if (lim.event == Event::EnterMargin) join_margin(lim.index);
  else if (lim.event == Event::DriverToMargin) {
    if (alphas_[c] > 0.0) join_margin(c, true);
    else sets_[c] = MarginSet::E3;
    driver_settled = true;
  }
  return true;
}

void SvmModel::increment(std::size_t c) {
  blocked_.clear();
  if (margin(c) >= -kEntryTolerance) {
    sets_[c] = MarginSet::E3;
    return;
  }
  const std::size_t max_iter = 50 * (size() + 10);
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    if (margin_sv_.empty()) {
      // Only b can move: raise m_c through y_c * db > 0.
      bool settled = false;
      if (!bias_step(c, labels_[c], settled)) throw StateError("bias step found no limit while increasing");
      if (settled) {
        settle_margin_members();
        return;
      }
      continue;
    }

    Sensitivity s = sensitivity(c);
    std::vector<double> gamma = margin_gradients(c, s);
    const double gc = margin(c);

    Limit lim;
    // A driver dependent on the margin set has a frozen margin; its multiplier moves until a bound event.
    if (gamma[c] > kDependentPivot * std::max(1.0, kernel(c, c)))
      lim.offer(std::max(0.0, -gc / gamma[c]), Event::DriverToMargin, c);
    lim.offer(C_ - alphas_[c], Event::DriverToBound, c);
    for (std::size_t k = 0; k < margin_sv_.size(); ++k) {
      std::size_t j = margin_sv_[k];
      double bj = s.beta(static_cast<Eigen::Index>(k) + 1);
      if (bj > kPivotEps) lim.offer(std::max(0.0, (C_ - alphas_[j]) / bj), Event::MemberToBound, j);
      else if (bj < -kPivotEps) lim.offer(std::max(0.0, -alphas_[j] / bj), Event::MemberToRest, j);
    }
    for (std::size_t i = 0; i < size(); ++i) {
      if (i == c || sets_[i] == MarginSet::E1 || blocked(i)) continue;
      double m = margin(i);
      if (sets_[i] == MarginSet::E2 && gamma[i] > kPivotEps) lim.offer(std::max(0.0, -m / gamma[i]), Event::EnterMargin, i);
      if (sets_[i] == MarginSet::E3 && gamma[i] < -kPivotEps) lim.offer(std::max(0.0, -m / gamma[i]), Event::EnterMargin, i);
    }

    const double t = lim.step;
    alphas_[c] += t;
    for (std::size_t k = 0; k < margin_sv_.size(); ++k)
      alphas_[margin_sv_[k]] += s.beta(static_cast<Eigen::Index>(k) + 1) * t;
    bias_ += s.beta(0) * t;

    switch (lim.event) {
      case Event::DriverToMargin:
        join_margin(c, true);
        break;
      case Event::DriverToBound:
        alphas_[c] = C_;
        sets_[c] = MarginSet::E2;
        break;
      case Event::MemberToBound: leave_margin(lim.index, MarginSet::E2); break;
      case Event::MemberToRest: leave_margin(lim.index, MarginSet::E3); break;
      case Event::EnterMargin: join_margin(lim.index); break;
      default: break;
    }
    recompute_weights();
    if (lim.event == Event::DriverToMargin || lim.event == Event::DriverToBound) {
      settle_margin_members();
      return;
    }
  }
  throw StateError("incremental SVM update did not converge");
}

void SvmModel::decrement(std::size_t c) {
  blocked_.clear();
  // c stays out of every candidate scan below; its set entry is irrelevant until removal.
  if (sets_[c] == MarginSet::E1) leave_margin(c, MarginSet::E2, false);
  const std::size_t max_iter = 50 * (size() + 10);
  for (std::size_t iter = 0; iter < max_iter && alphas_[c] > 0.0; ++iter) {
    if (alphas_[c] <= kEntryTolerance * C_) {
      alphas_[c] = 0.0;
      break;
    }
    if (margin_sv_.empty()) {
      // Lowering a_c keeps sum y a = 0 only if a same-label E3 example or an opposite-label E2
      // example takes up the slack. Both reach the margin as b moves by -y_c.
      const int dir = -labels_[c];
      Limit best;
      for (std::size_t i = 0; i < size(); ++i) {
        if (i == c || blocked(i)) continue;
        double rate = dir * labels_[i], m = margin(i);
        if (sets_[i] == MarginSet::E3 && rate < 0) best.offer(std::max(0.0, m / -rate), Event::EnterMargin, i);
        if (sets_[i] == MarginSet::E2 && rate > 0) best.offer(std::max(0.0, -m / rate), Event::EnterMargin, i);
      }
      if (best.event == Event::None) throw StateError("decremental bias step found no limit");
      bias_ += dir * best.step;
      join_margin(best.index);
      continue;
    }

    Sensitivity s = sensitivity(c);
    std::vector<double> gamma = margin_gradients(c, s);

    Limit lim;
    lim.offer(alphas_[c], Event::DriverDone, c);
    for (std::size_t k = 0; k < margin_sv_.size(); ++k) {
      std::size_t j = margin_sv_[k];
      double bj = s.beta(static_cast<Eigen::Index>(k) + 1);
      if (bj > kPivotEps) lim.offer(std::max(0.0, alphas_[j] / bj), Event::MemberToRest, j);
      else if (bj < -kPivotEps) lim.offer(std::max(0.0, (C_ - alphas_[j]) / -bj), Event::MemberToBound, j);
    }
    for (std::size_t i = 0; i < size(); ++i) {
      if (i == c || sets_[i] == MarginSet::E1 || blocked(i)) continue;
      double m = margin(i);
      if (sets_[i] == MarginSet::E2 && gamma[i] < -kPivotEps) lim.offer(std::max(0.0, m / gamma[i]), Event::EnterMargin, i);
      if (sets_[i] == MarginSet::E3 && gamma[i] > kPivotEps) lim.offer(std::max(0.0, m / gamma[i]), Event::EnterMargin, i);
    }

    const double t = lim.step;
    alphas_[c] -= t;
    for (std::size_t k = 0; k < margin_sv_.size(); ++k)
      alphas_[margin_sv_[k]] -= s.beta(static_cast<Eigen::Index>(k) + 1) * t;
    bias_ -= s.beta(0) * t;

    switch (lim.event) {
      case Event::DriverDone: alphas_[c] = 0.0; break;
      case Event::MemberToBound: leave_margin(lim.index, MarginSet::E2); break;
      case Event::MemberToRest: leave_margin(lim.index, MarginSet::E3); break;
      case Event::EnterMargin: join_margin(lim.index); break;
      default: break;
    }
    recompute_weights();
  }
  if (alphas_[c] > 0.0) throw StateError("decremental SVM update did not converge");
  settle_margin_members();
}

void SvmModel::add(std::span<const double> x, int y) {
  if (y != 1 && y != -1) throw InputError("SVM labels must be +1 or -1");
  if (dim_ == 0) {
    if (x.empty()) throw InputError("empty feature vector");
    dim_ = static_cast<int>(x.size());
    w_.assign(dim_, 0.0);
  } else if (x.size() != static_cast<std::size_t>(dim_)) {
    throw InputError("feature dimension " + std::to_string(x.size()) + " does not match model dimension " +
                     std::to_string(dim_));
  }
  for (double v : x)
    if (!std::isfinite(v)) throw InputError("non-finite feature value");

  features_.insert(features_.end(), x.begin(), x.end());
  labels_.push_back(y);
  alphas_.push_back(0.0);
  sets_.push_back(MarginSet::E3);
  (y > 0 ? seen_pos_ : seen_neg_) = true;

  const std::size_t c = size() - 1;
  if (degenerate_one_class()) {
    // No multiplier can be positive while sum y a = 0 has a single label; only b adapts.
    if (margin(c) < 0.0) bias_ += -margin(c) * y;
    return;
  }
  increment(c);
  recompute_weights();
}

void SvmModel::partial_fit(std::span<const LabeledExample> batch) {
  for (const auto& ex : batch) add(ex.features, ex.label);
}

void SvmModel::erase_example(std::size_t k) {
  if (sets_[k] == MarginSet::E1) leave_margin(k, MarginSet::E3);
  blocked_.clear();
  const auto off = static_cast<std::ptrdiff_t>(k);
  features_.erase(features_.begin() + off * dim_, features_.begin() + (off + 1) * dim_);
  labels_.erase(labels_.begin() + off);
  alphas_.erase(alphas_.begin() + off);
  sets_.erase(sets_.begin() + off);
  for (auto& s : margin_sv_)
    if (s > k) --s;
  seen_pos_ = std::find(labels_.begin(), labels_.end(), 1) != labels_.end();
  seen_neg_ = std::find(labels_.begin(), labels_.end(), -1) != labels_.end();
}

void SvmModel::unlearn(std::size_t index) {
  if (index >= size()) throw std::out_of_range("example index");
  if (alphas_[index] > 0.0) decrement(index);
  erase_example(index);
  recompute_weights();
}

void SvmModel::prune_to_budget(std::size_t budget) {
  if (budget < 1) throw ConfigError("support vector budget must be at least 1");
  while (support_count() > budget) {
    std::size_t victim = size();
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < size(); ++i) {
      if (sets_[i] == MarginSet::E3) continue;
      double m = margin(i);
      if (std::abs(m) <= kMarginTolerance) m = 0.0;
      if (m > best) {
        best = m;
        victim = i;
      }
    }
    unlearn(victim);
  }
}

void SvmModel::write_snapshot(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << "SALTRK-SVM-1\nC " << C_ << "\ndim " << dim_ << "\nexamples " << size() << "\nbias " << bias_ << "\n";
  out << "layout: per example [label, alpha, set, features...] as float64\n";
  for (std::size_t i = 0; i < size(); ++i) {
    double head[3] = {static_cast<double>(labels_[i]), alphas_[i], static_cast<double>(static_cast<int>(sets_[i]))};
    out.write(reinterpret_cast<const char*>(head), sizeof head);
    out.write(reinterpret_cast<const char*>(features_.data() + i * dim_), static_cast<std::streamsize>(dim_ * sizeof(double)));
  }
}

}  // namespace saltrk
