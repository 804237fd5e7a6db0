#include <doctest.h>

#include <cmath>
#include <random>

#include "saltrk/dataset.hpp"
#include "saltrk/metrics.hpp"
#include "saltrk/tracker.hpp"

using namespace saltrk;

namespace {

FeatureNet handcrafted() {
  LoadedNetwork ln = make_handcrafted_network();
  return FeatureNet(ln.spec, ln.weights);
}

SyntheticSequence stationary(int length, std::uint64_t seed = 3) {
  SynthConfig cfg;
  cfg.length = length;
  cfg.start_x = 26;
  cfg.start_y = 20;
  cfg.seed = seed;
  return synth_sequence(cfg);
}

// Comparable view of everything the SVM has learned.
struct SvmState {
  std::vector<double> alphas, w, features;
  std::vector<int> labels;
  double bias;
  bool operator==(const SvmState&) const = default;
};

SvmState snapshot(const SvmModel& m) {
  SvmState s{{}, m.weight_vector(), {}, {}, m.bias()};
  for (std::size_t i = 0; i < m.size(); ++i) {
    s.alphas.push_back(m.alpha(i));
    s.labels.push_back(m.label(i));
    s.features.insert(s.features.end(), m.features(i).begin(), m.features(i).end());
  }
  return s;
}

}  // namespace

TEST_SUITE("tracker") {
  TEST_CASE("config defaults, overrides and validation") {
    TrackerConfig d;
    CHECK(d.n_samples == 120);
    CHECK(d.label_threshold == 0.3);
    CHECK(d.filter_memory == 30);
    TrackerConfig c = parse_config("# comment\nn_samples = 40\nsvm_C=2.5\n\nrng_seed=9 # trailing\n");
    CHECK(c.n_samples == 40);
    CHECK(c.svm_C == 2.5);
    CHECK(c.rng_seed == 9);
    CHECK_THROWS_AS(parse_config("bogus=1"), ConfigError);
    CHECK_THROWS_AS(parse_config("n_samples=abc"), ConfigError);
    CHECK_THROWS_AS(parse_config("n_samples=0"), ConfigError);
    CHECK_THROWS_AS(parse_config("label_threshold=1"), ConfigError);
    CHECK_THROWS_AS(parse_config("filter_memory=0"), ConfigError);
    CHECK_THROWS_AS(parse_config("no equals sign"), ConfigError);
  }

  TEST_CASE("zero sampling std pins every sample to the previous center") {
    std::mt19937_64 rng(1);
    TargetState prev{30, 30, 10, 10};
    auto s = draw_samples(prev, 50, 0.0, 100, 100, rng);
    CHECK(s.size() == 50);
    for (const auto& x : s) CHECK(x == prev);
  }

  TEST_CASE("default config draws exactly 120 samples") {
    std::mt19937_64 rng(2);
    TrackerConfig cfg;
    CHECK(draw_samples({50, 50, 8, 8}, cfg.n_samples, 4.0, 100, 100, rng).size() == 120);
  }

  TEST_CASE("16x16 box: empirical sampling std is within 5% of 8 px") {
    std::mt19937_64 rng(3);
    TargetState prev{500, 500, 16, 16};
    const double sd = 0.5 * std::sqrt(16.0 * 16.0);
    auto s = draw_samples(prev, 10000, sd, 1000, 1000, rng);
    double mx = 0, my = 0;
    for (const auto& x : s) {
      mx += x.cx;
      my += x.cy;
    }
    mx /= s.size();
    my /= s.size();
    double vx = 0, vy = 0;
    for (const auto& x : s) {
      vx += (x.cx - mx) * (x.cx - mx);
      vy += (x.cy - my) * (x.cy - my);
    }
    CHECK(std::sqrt(vx / (s.size() - 1)) == doctest::Approx(8.0).epsilon(0.05));
    CHECK(std::sqrt(vy / (s.size() - 1)) == doctest::Approx(8.0).epsilon(0.05));
  }

  TEST_CASE("samples keep the box size and stay inside the frame") {
    std::mt19937_64 rng(4);
    auto s = draw_samples({3, 3, 10, 6}, 500, 20.0, 40, 30, rng);
    for (const auto& x : s) {
      CHECK(x.w == 10);
      CHECK(x.h == 6);
      CHECK(x.left() >= 0);
      CHECK(x.top() >= 0);
      CHECK(x.left() + x.w <= 40);
      CHECK(x.top() + x.h <= 30);
    }
  }

  TEST_CASE("labels: identical is +1, IoU 0.1 is -1, IoU 0.5 is excluded") {
    TargetState opt{10, 10, 10, 10};  // box (5,5,10,10)
    // IoU 16/184 ~ 0.09 and 70/130 ~ 0.54
    TargetState far{10 + 8, 10 + 2, 10, 10};
    TargetState mid{10 + 3, 10 + 0, 10, 10};
    const double iou_far = overlap(opt.box(), far.box()), iou_mid = overlap(opt.box(), mid.box());
    REQUIRE(iou_far < 0.3);
    REQUIRE(iou_mid > 0.3);
    std::vector<TargetState> samples{opt, far, mid};
    auto l = label_samples(opt, samples, 0.3);
    REQUIRE(l.size() == 3);
    CHECK(l[0].label == SampleLabel::Positive);
    CHECK(l[1].label == SampleLabel::Negative);
    CHECK(l[2].label == SampleLabel::Excluded);
  }

  TEST_CASE("labels: the optimal state is appended when absent, and only one positive exists") {
    TargetState opt{20, 20, 8, 8};
    std::vector<TargetState> none{{40, 40, 8, 8}, {21, 20, 8, 8}};
    auto l = label_samples(opt, none, 0.3);
    REQUIRE(l.size() == 3);
    CHECK(l.back().state == opt);
    CHECK(l.back().label == SampleLabel::Positive);
    std::vector<TargetState> dup{opt, opt, {40, 40, 8, 8}};
    auto d = label_samples(opt, dup, 0.3);
    CHECK(std::count_if(d.begin(), d.end(), [](const LabeledSample& s) { return s.label == SampleLabel::Positive; }) == 1);
  }

  TEST_CASE("frame 1 bootstrap: one positive, sampled negatives, H from the GT crop, delta posterior") {
    SyntheticSequence seq = stationary(1);
    TrackerConfig cfg;
    cfg.rng_seed = 5;
    TrackerSession s(handcrafted(), cfg);
    FrameOutput out = s.initialize(seq.frames[0], seq.ground_truth[0]);
    const TargetState gt = TargetState::from_box(seq.ground_truth[0]);
    CHECK(out.record.state == gt);
    int pos = 0, neg = 0;
    for (std::size_t i = 0; i < s.svm().size(); ++i) (s.svm().label(i) > 0 ? pos : neg)++;
    CHECK(pos == 1);
    CHECK(neg > 0);
    REQUIRE(s.filter().history().size() == 1);
    CHECK(s.filter().values() == crop_map(out.saliency.values, gt));
    CHECK(s.posterior().mass(gt.cx, gt.cy) == 1.0);
    CHECK(s.posterior().mass.sum() == 1.0);
  }

  TEST_CASE("identical frames with a stationary target: the state moves at most 1 px") {
    SyntheticSequence seq = stationary(1);
    TrackerSession s(handcrafted(), TrackerConfig{});
    s.initialize(seq.frames[0], seq.ground_truth[0]);
    TargetState prev = s.state();
    for (int t = 0; t < 8; ++t) {
      FrameOutput out = s.step(seq.frames[0]);
      CHECK(std::abs(out.record.state.cx - prev.cx) <= 1);
      CHECK(std::abs(out.record.state.cy - prev.cy) <= 1);
      prev = out.record.state;
    }
  }

  TEST_CASE("a frame without positives leaves SVM and filter untouched and follows the prior") {
    SyntheticSequence seq = stationary(1);
    TrackerSession s(handcrafted(), TrackerConfig{});
    s.initialize(seq.frames[0], seq.ground_truth[0]);
    s.step(seq.frames[0]);
    const SvmState before = snapshot(s.svm());
    const GenerativeFilter filter = s.filter();
    Image blank(seq.frames[0].width(), seq.frames[0].height(), 3, 0.5);
    FrameOutput out = s.step(blank);
    REQUIRE(out.record.positive_count == 0);
    CHECK_FALSE(out.record.models_updated);
    CHECK(snapshot(s.svm()) == before);
    CHECK(s.filter() == filter);
    // uniform likelihood: the posterior is the prior and the state its argmax
    CHECK(out.record.state.center() == argmax(out.posterior.mass));
    for (double v : out.likelihood.values()) CHECK(v == out.likelihood.values().front());
  }

  TEST_CASE("each updated frame adds exactly one positive training example") {
    SynthConfig cfg;
    cfg.length = 6;
    cfg.path = {{6, 1, 0}};
    SyntheticSequence seq = synth_sequence(cfg);
    TrackerSession s(handcrafted(), TrackerConfig{});
    s.initialize(seq.frames[0], seq.ground_truth[0]);
    int updated = 1;
    for (std::size_t i = 1; i < seq.frames.size(); ++i) updated += s.step(seq.frames[i]).record.models_updated;
    int pos = 0;
    for (std::size_t i = 0; i < s.svm().size(); ++i) pos += s.svm().label(i) > 0;
    CHECK(pos == updated);
  }

  TEST_CASE("fixed seed gives bit-identical results") {
    SynthConfig cfg;
    cfg.length = 12;
    cfg.path = random_bounded_path(64, 64, 12, 10, 10, 12, 3, 4);
    SyntheticSequence seq = synth_sequence(cfg);
    auto run = [&] {
      TrackerConfig tc;
      tc.rng_seed = 77;
      TrackerSession s(handcrafted(), tc);
      std::vector<std::tuple<int, int, int, double>> r;
      run_sequence(s, seq.frames.size(), [&](std::size_t i) -> const Image& { return seq.frames[i]; },
                   seq.ground_truth[0], [&](const FrameOutput& o) {
                     r.emplace_back(o.record.state.cx, o.record.state.cy, o.record.positive_count,
                                    o.record.map_probability);
                   });
      return r;
    };
    CHECK(run() == run());
  }

  TEST_CASE("session contract errors") {
    SyntheticSequence seq = stationary(1);
    TrackerSession s(handcrafted(), TrackerConfig{});
    CHECK_THROWS_AS(s.step(seq.frames[0]), StateError);
    s.initialize(seq.frames[0], seq.ground_truth[0]);
    CHECK_THROWS_AS(s.step(Image(32, 32, 3)), InputError);
  }
}
