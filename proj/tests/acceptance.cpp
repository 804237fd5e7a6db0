// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "oracles/oracles.hpp"
#include "saltrk/dataset.hpp"
#include "saltrk/localization.hpp"
#include "saltrk/metrics.hpp"
#include "saltrk/online_svm.hpp"
#include "saltrk/saliency.hpp"
#include "saltrk/segmentation.hpp"
#include "saltrk/tracker.hpp"
#include "test_util.hpp"

using namespace saltrk;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << detail << std::endl;
  if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Dataset {
  std::vector<std::vector<double>> X;
  std::vector<int> y;
};

Dataset random_dataset(std::mt19937_64& rng, int n, int d) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> sep(0.0, 1.5);
  const double s = sep(rng);
  Dataset ds;
  for (int i = 0; i < n; ++i) {
    const int label = i < 2 ? (i == 0 ? 1 : -1) : (g(rng) > 0 ? 1 : -1);
    std::vector<double> x(d);
    for (double& v : x) v = g(rng);
    x[0] += s * label;
    ds.X.push_back(std::move(x));
    ds.y.push_back(label);
  }
  return ds;
}

double oracle_decision(const oracle::SvmSolution& o, const std::vector<double>& x) {
  double f = o.b;
  for (std::size_t k = 0; k < x.size(); ++k) f += o.w[k] * x[k];
  return f;
}

void svm_equivalence() {
  std::mt19937_64 rng(101);
  const double Cs[3] = {0.1, 1.0, 10.0};
  double worst_dual = 0.0, worst_kkt = 0.0;
  int sign_mismatch = 0, ties = 0;
  const auto t0 = Clock::now();
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 49), d = 1 + static_cast<int>(rng() % 8);
    const double C = Cs[trial % 3];
    Dataset ds = random_dataset(rng, n, d);
    SvmModel m(C);
    for (int i = 0; i < n; ++i) {
      m.add(ds.X[i], ds.y[i]);
      worst_kkt = std::max(worst_kkt, m.kkt_residual());
    }
    const auto o = oracle::smo(ds.X, ds.y, C);
    worst_dual = std::max(worst_dual, testutil::rel_err(m.dual_objective(), o.dual));
    for (int i = 0; i < n; ++i) {
      const double fo = oracle_decision(o, ds.X[i]), fm = m.predict(ds.X[i]);
      // A decision value of zero has no sign to agree on.
      if (std::abs(fo) < 1e-9) {
        ++ties;
        continue;
      }
      if ((fo > 0) != (fm > 0)) ++sign_mismatch;
    }
  }
  const double secs = seconds_since(t0);
  std::ostringstream os;
  os << "max dual rel err " << worst_dual << ", max KKT residual " << worst_kkt << ", sign mismatches "
     << sign_mismatch << " (zero-valued skipped " << ties << "), " << secs << " s";
  report(1, "SVM oracle equivalence", worst_dual <= 1e-6 && worst_kkt < 1e-6 && sign_mismatch == 0 && secs < 30.0,
         os.str());
}

void decremental() {
  std::mt19937_64 rng(202);
  double worst = 0.0;
  int cases = 0, attempts = 0;
  while (cases < 50 && attempts < 1000) {
    ++attempts;
    const int n = 10 + static_cast<int>(rng() % 31), d = 1 + static_cast<int>(rng() % 6);
    Dataset ds = random_dataset(rng, n, d);
    SvmModel m(1.0);
    for (int i = 0; i < n; ++i) m.add(ds.X[i], ds.y[i]);
    const std::size_t sv = m.support_count();
    if (sv < 3) continue;
    m.prune_to_budget(sv / 2);
    Dataset surv;
    for (std::size_t i = 0; i < m.size(); ++i) {
      surv.X.emplace_back(m.features(i).begin(), m.features(i).end());
      surv.y.push_back(m.label(i));
    }
    const auto o = oracle::smo(surv.X, surv.y, 1.0);
    worst = std::max(worst, testutil::rel_err(m.dual_objective(), o.dual));
    if (m.support_count() > sv / 2) worst = std::max(worst, 1.0);
    ++cases;
  }
  std::ostringstream os;
  os << cases << " cases, max dual rel err vs retraining on survivors " << worst;
  report(2, "decremental correctness", cases == 50 && worst <= 1e-6, os.str());
}

void gradient_fidelity() {
  std::mt19937_64 rng(303);
  std::normal_distribution<double> n01;
  double worst = 0.0;
  for (int net_i = 0; net_i < 20; ++net_i) {
    auto [spec, w] = oracle::random_network(rng, net_i % 2 == 0);
    FeatureNet net(spec, w);
    Tensor t = oracle::random_tensor(3, 16, 16, rng);
    std::vector<double> fg(static_cast<std::size_t>(net.feature_dim()));
    for (double& v : fg) v = n01(rng);
    GradientMap gm = net.backward_to_input(ImagePatch{t, Box{0, 0, 16, 16}}, fg);
    auto f = [&](const Tensor& x) {
      const auto phi = oracle::naive_forward(spec, w, x);
      double s = 0;
      for (std::size_t k = 0; k < phi.size(); ++k) s += fg[k] * phi[k];
      return s;
    };
    std::uniform_int_distribution<std::size_t> coord(0, t.size() - 1);
    for (int k = 0; k < 100; ++k) {
      const std::size_t c = coord(rng);
      const double fd = oracle::central_difference(f, t, c, 1e-5);
      // Gradients below 1e-6 in magnitude are compared absolutely.
      worst = std::max(worst, testutil::rel_err(gm.values()[c], fd, 1e-6));
    }
  }
  std::ostringstream os;
  os << "20 networks x 100 coordinates, max rel err " << worst;
  report(3, "gradient fidelity", worst < 1e-3, os.str());
}

void saliency_aggregation() {
  std::mt19937_64 rng(404);
  int mismatches = 0, monotone_violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int w = 1 + static_cast<int>(rng() % 40), h = 1 + static_cast<int>(rng() % 40);
    const int k = 1 + static_cast<int>(rng() % 12);
    std::vector<Grid> gs;
    for (int i = 0; i < k; ++i) gs.push_back(oracle::random_grid(w, h, rng));
    SaliencyMap m = aggregate(gs, w, h);
    if (!(m.values == oracle::max_abs(gs, w, h))) ++mismatches;
    gs.push_back(oracle::random_grid(w, h, rng));
    SaliencyMap more = aggregate(gs, w, h);
    for (std::size_t i = 0; i < m.values.size(); ++i)
      if (more.values.values()[i] < m.values.values()[i]) ++monotone_violations;
  }
  std::ostringstream os;
  os << "100 cases, " << mismatches << " mismatches vs brute force, " << monotone_violations
     << " monotonicity violations";
  report(4, "saliency aggregation", mismatches == 0 && monotone_violations == 0, os.str());
}

PosteriorGrid random_posterior(int w, int h, std::mt19937_64& rng) {
  PosteriorGrid p{oracle::random_grid(w, h, rng, 0.01, 1.0)};
  const double s = p.mass.sum();
  for (double& v : p.mass.values()) v /= s;
  return p;
}

FeatureNet handcrafted() {
  LoadedNetwork ln = make_handcrafted_network();
  return FeatureNet(ln.spec, ln.weights);
}

void filter_chain() {
  std::mt19937_64 rng(505);
  double worst_lik = 0.0;
  for (int trial = 0; trial < 40; ++trial) {
    const int w = 1 + static_cast<int>(rng() % 64), h = 1 + static_cast<int>(rng() % 64);
    const int fw = 1 + static_cast<int>(rng() % std::min(w, 16)), fh = 1 + static_cast<int>(rng() % std::min(h, 16));
    SaliencyMap m{oracle::random_grid(w, h, rng, 0, 1), 1};
    GenerativeFilter f(fw, fh, 30);
    f.push(oracle::random_grid(fw, fh, rng, -0.5, 1));
    Grid lik = likelihood_map(f, m);
    Grid c = oracle::correlate(m.values, f.values());
    double lo = std::min(0.0, *std::min_element(c.values().begin(), c.values().end()));
    double total = 0;
    for (double& v : c.values()) total += (v = v - lo + 1e-12);
    for (std::size_t i = 0; i < c.size(); ++i) worst_lik = std::max(worst_lik, std::abs(lik.values()[i] - c.values()[i] / total));
  }

  // 200-frame tracker run on a synthetic sequence.
  SynthConfig cfg;
  cfg.length = 200;
  cfg.seed = 55;
  cfg.path = random_bounded_path(64, 64, 12, 10, 10, 200, 2.0, 55);
  const SyntheticSequence seq = synth_sequence(cfg);
  TrackerSession session(handcrafted(), TrackerConfig{});
  double worst_sum = 0.0;
  run_sequence(
      session, seq.frames.size(), [&](std::size_t i) -> const Image& { return seq.frames[i]; }, seq.ground_truth[0],
      [&](const FrameOutput& out) { worst_sum = std::max(worst_sum, std::abs(out.posterior.mass.sum() - 1.0)); });

  // Identities, checked bit for bit. A dyadic likelihood sums to exactly one in floating point.
  bool identities = true;
  for (int trial = 0; trial < 20; ++trial) {
    const int w = 4 + static_cast<int>(rng() % 20), h = 4 + static_cast<int>(rng() % 20);
    PosteriorGrid prior = random_posterior(w, h, rng);
    identities &= posterior_and_map(prior, Grid(w, h, 0.37), 3, 3).posterior.mass == prior.mass;
    Grid dyadic(w, h, 0.0);
    const int cells = w * h;
    for (int i = 0; i < 64; ++i) dyadic.values()[rng() % cells] += 1.0 / 64.0;
    identities &= posterior_and_map(PosteriorGrid::uniform(w, h), dyadic, 3, 3).posterior.mass == dyadic;
  }

  std::ostringstream os;
  os << "max likelihood err " << worst_lik << ", max |sum-1| over 200 frames " << worst_sum << ", identities "
     << (identities ? "exact" : "broken");
  report(5, "filter, likelihood and posterior", worst_lik <= 1e-9 && worst_sum <= 1e-9 && identities, os.str());
}

void segmentation() {
  std::mt19937_64 rng(606);
  int flow_mismatch = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 9);
    std::vector<oracle::Edge> edges;
    FlowNetwork net(n, 0, n - 1);
    const int m = static_cast<int>(rng() % (n * n));
    for (int e = 0; e < m; ++e) {
      const int a = static_cast<int>(rng() % n), b = static_cast<int>(rng() % n);
      if (a == b) continue;
      const double cap = static_cast<double>(rng() % 10);
      edges.push_back({a, b, cap});
      net.add_edge(a, b, cap);
    }
    if (max_flow(net).value != oracle::brute_min_cut(n, 0, n - 1, edges)) ++flow_mismatch;
  }

  int energy_increases = 0;
  for (int trial = 0; trial < 20; ++trial) {
    auto r = testutil::two_region_image(rng, 24 + trial, 24, 0.1);
    Trimap t(r.image.width(), r.image.height());
    for (int y = 0; y < t.height; ++y)
      for (int x = 0; x < t.width; ++x)
        if (x == 0 || y == 0 || x == t.width - 1 || y == t.height - 1) t.at(x, y) = TrimapLabel::Background;
    t.at((r.x0 + r.x1) / 2, (r.y0 + r.y1) / 2) = TrimapLabel::Foreground;
    GrabCutResult g = grabcut(r.image, t, 8);
    for (std::size_t k = 1; k < g.energies.size(); ++k)
      if (g.energies[k] > g.energies[k - 1]) ++energy_increases;
  }
  std::ostringstream os;
  os << "200 graphs, " << flow_mismatch << " max-flow mismatches; 20 GrabCut runs, " << energy_increases
     << " energy increases";
  report(6, "max-flow exactness and GrabCut monotonicity", flow_mismatch == 0 && energy_increases == 0, os.str());
}

void end_to_end() {
  SynthConfig cfg;
  cfg.seed = 7;
  cfg.clutter = ClutterLevel::Medium;
  cfg.path = random_bounded_path(64, 64, 12, 10, 10, 100, 3.0, cfg.seed);
  const SyntheticSequence seq = synth_sequence(cfg);
  const auto t0 = Clock::now();
  TrackerConfig tc;
  tc.rng_seed = 1;
  TrackerSession session(handcrafted(), tc);
  TrackResult res = run_sequence(
      session, seq.frames.size(), [&](std::size_t i) -> const Image& { return seq.frames[i]; }, seq.ground_truth[0],
      [](const FrameOutput&) {});
  const double secs = seconds_since(t0);
  std::vector<Box> pred, still;
  for (const auto& r : res) pred.push_back(r.state.box());
  still.assign(seq.frames.size(), seq.ground_truth[0]);
  const double auc = success_curve(pred, seq.ground_truth).summary;
  const double p20 = precision_curve(pred, seq.ground_truth).summary;
  const double base = success_curve(still, seq.ground_truth).summary;
  std::ostringstream os;
  os << "AUC " << auc << ", precision@20 " << p20 << ", static baseline AUC " << base << ", " << secs << " s";
  report(7, "synthetic end-to-end tracking", auc >= 0.55 && p20 >= 0.90 && auc - base >= 0.20 && secs < 120.0,
         os.str());
}

void metrics() {
  bool ok = overlap({0, 0, 2, 2}, {1, 1, 2, 2}) == 1.0 / 7.0;
  const std::vector<Box> gt(3, Box{0, 0, 2, 2});
  const std::vector<Box> pred{{0, 0, 2, 2}, {0, 0, 2, 1}, {10, 10, 2, 2}};
  const EvalCurve s = success_curve(pred, gt);
  ok &= s.rates[9] == 2.0 / 3.0;
  const std::vector<Box> g10(3, Box{0, 0, 10, 10});
  const std::vector<Box> p10{{0, 0, 10, 10}, {6, 8, 10, 10}, {18, 24, 10, 10}};
  ok &= precision_curve(p10, g10).summary == 2.0 / 3.0;
  const double same = success_curve(g10, g10).summary;
  ok &= std::abs(same - 20.0 / 21.0) <= 1e-15;
  std::ostringstream os;
  os << "IoU " << overlap({0, 0, 2, 2}, {1, 1, 2, 2}) << ", success(0.45) " << s.rates[9] << ", identical AUC " << same;
  report(8, "metric correctness", ok, os.str());
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + SALTRK_CLI + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void determinism() {
  testutil::TempDir tmp("accept");
  const std::string seq = (tmp / "seq").string();
  bool ok = run_cli("synth --out \"" + seq + "\" --frames 40 --random-path 3 --seed 4") == 0;
  const std::string track = "track --sequence \"" + seq + "\" --net " + SALTRK_NET_SPEC + "," + SALTRK_NET_WEIGHTS +
                            " --init 10,10,12,12 --seed 11 --out ";
  ok &= run_cli(track + "\"" + (tmp / "a.csv").string() + "\"") == 0;
  ok &= run_cli(track + "\"" + (tmp / "b.csv").string() + "\"") == 0;
  const std::string a = testutil::read_text(tmp / "a.csv"), b = testutil::read_text(tmp / "b.csv");
  const bool same = ok && !a.empty() && a == b;
  report(9, "determinism", same, same ? "two track runs produced byte-identical CSVs" : "outputs differ or a run failed");
}

}  // namespace

int main() {
  svm_equivalence();
  decremental();
  gradient_fidelity();
  saliency_aggregation();
  filter_chain();
  segmentation();
  end_to_end();
  metrics();
  determinism();
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
