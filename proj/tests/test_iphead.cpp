#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "lr3d/iphead.hpp"
#include "lr3d/rng.hpp"

using namespace lr3d;
using namespace lr3d::iphead;

namespace {

const geometry::CameraIntrinsics kCam{1000.0, 1000.0, 960.0, 540.0, 1920.0, 1080.0};

// Small architecture so exhaustive finite differences stay cheap.
IPHeadModel small_model(WeightMode mode, uint64_t seed) {
  PositionalEncodingConfig pe;
  pe.num_freqs = 2;
  pe.input_scale = 100.0;
  TargetNetShape target;
  target.hidden = 4;
  return init_model(/*feature_dim=*/6, pe, target, mode, 1.0, /*hyper_hidden=*/8, seed);
}

TrainSample random_sample(Rng& rng) {
  TrainSample s;
  s.feature.vec = Eigen::VectorXd::Zero(6);
  for (int i = 0; i < 6; ++i) s.feature.vec[i] = rng.uniform(-1.0, 1.0);
  s.box = {rng.uniform(5.0, 300.0), rng.uniform(5.0, 200.0), 960.0, 540.0};
  s.gt_depth = rng.uniform(5.0, 100.0);
  return s;
}

}  // namespace

TEST_CASE("positional encoding analytic values") {
  PositionalEncodingConfig cfg;
  cfg.num_freqs = 1;
  cfg.input_scale = 1.0;
  const auto enc = positional_encode({geometry::kPi, 0.0, 0.0, 0.0}, cfg);
  REQUIRE(enc.size() == 4);
  CHECK(enc[0] == doctest::Approx(0.0).epsilon(1e-12));   // sin(pi)
  CHECK(enc[1] == doctest::Approx(-1.0).epsilon(1e-12));  // cos(pi)
  CHECK(enc[2] == doctest::Approx(0.0));                  // sin(0)
  CHECK(enc[3] == doctest::Approx(1.0));                  // cos(0)
}

TEST_CASE("positional encoding shape and zero input") {
  PositionalEncodingConfig cfg;
  cfg.num_freqs = 8;
  const auto enc = positional_encode({0.0, 0.0, 0.0, 0.0}, cfg);
  REQUIRE(enc.size() == 32);
  for (int k = 0; k < enc.size(); k += 2) {
    CHECK(enc[k] == 0.0);      // all sines
    CHECK(enc[k + 1] == 1.0);  // all cosines
  }
}

TEST_CASE("parameter count matches the 2-layer target net") {
  PositionalEncodingConfig pe;
  pe.num_freqs = 8;
  TargetNetShape shape;
  shape.hidden = 16;
  CHECK(shape.param_count(pe) == 545);  // 32*16 + 16 + 16 + 1
}

TEST_CASE("generate_weights") {
  IPHeadModel model = small_model(WeightMode::kDynamic, 3);
  InstanceFeature f;
  f.vec = Eigen::VectorXd::Constant(6, 0.5);

  SUBCASE("zero output layer emits the bias vector") {
    const auto theta = generate_weights(model, f);
    REQUIRE(theta.size() == model.param_count());
    CHECK(theta == model.hyper_b2);  // zero-initialized output weight matrix
    model.hyper_b2.setConstant(0.25);
    const auto theta2 = generate_weights(model, f);
    for (int i = 0; i < theta2.size(); ++i) CHECK(theta2[i] == doctest::Approx(0.25));
  }
  SUBCASE("dimension mismatch is rejected") {
    InstanceFeature bad;
    bad.vec = Eigen::VectorXd::Zero(3);
    CHECK_THROWS_AS(generate_weights(model, bad), DimMismatch);
  }
  SUBCASE("shared mode misuse is rejected") {
    const IPHeadModel shared = small_model(WeightMode::kShared, 3);
    CHECK_THROWS_AS(generate_weights(shared, f), SharedModeMisuse);
  }
}

TEST_CASE("target_forward and predict_depth") {
  IPHeadModel model = small_model(WeightMode::kDynamic, 5);
  InstanceFeature f;
  f.vec = Eigen::VectorXd::Constant(6, 0.3);

  SUBCASE("zero model predicts d_ref everywhere") {
    CHECK(predict_depth(model, f, {40.0, 20.0, 960.0, 540.0}) == doctest::Approx(1.0));
    CHECK(predict_depth(model, f, {600.0, 300.0, 0.0, 0.0}) == doctest::Approx(1.0));
  }
  SUBCASE("output is always positive") {
    randomize_parameters(model, 99, 1.0);
    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
      const TrainSample s = random_sample(rng);
      CHECK(predict_depth(model, s.feature, s.box) > 0.0);
    }
  }
  SUBCASE("theta size is checked") {
    CHECK_THROWS_AS(target_forward(Eigen::VectorXd::Zero(7), Eigen::VectorXd::Zero(8),
                                   model.target, model.pe, 1.0),
                    DimMismatch);
  }
}

TEST_CASE("depth_loss") {
  SUBCASE("identity") {
    const auto [loss, grad] = depth_loss(20.0, 20.0);
    CHECK(loss == 0.0);
    CHECK(grad == 0.0);
  }
  SUBCASE("one log unit off gives smooth-L1 value 0.5") {
    const double e = std::exp(1.0);
    const auto [loss, grad] = depth_loss(e * 30.0, 30.0);
    CHECK(loss == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("derivative matches central finite differences") {
    Rng rng(2);
    for (int i = 0; i < 100; ++i) {
      const double pred = rng.uniform(1.0, 100.0);
      const double gt = rng.uniform(1.0, 100.0);
      const auto [loss, grad] = depth_loss(pred, gt);
      const double eps = 1e-5 * pred;
      const double num =
          (depth_loss(pred + eps, gt).first - depth_loss(pred - eps, gt).first) / (2.0 * eps);
      CHECK(grad == doctest::Approx(num).epsilon(1e-6));
    }
  }
  CHECK_THROWS_AS(depth_loss(10.0, -1.0), geometry::NonPositiveDepth);
}

TEST_CASE("gradient check: analytic vs central differences") {
  Rng rng(21);
  SUBCASE("dynamic mode, 100 random draws") {
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      IPHeadModel model = small_model(WeightMode::kDynamic, 100 + i);
      randomize_parameters(model, 1000 + i, 0.5);
      worst = std::max(worst, gradient_check(model, random_sample(rng)));
    }
    CHECK(worst < 1e-4);
  }
  SUBCASE("shared mode, hypernet parameters have zero gradient") {
    IPHeadModel model = small_model(WeightMode::kShared, 42);
    randomize_parameters(model, 43, 0.5);
    CHECK(gradient_check(model, random_sample(rng)) < 1e-4);
  }
  SUBCASE("error grows roughly quadratically with epsilon") {
    IPHeadModel model = small_model(WeightMode::kDynamic, 77);
    randomize_parameters(model, 78, 0.8);
    const TrainSample s = random_sample(rng);
    const double e1 = gradient_check(model, s, 1e-3);
    const double e2 = gradient_check(model, s, 2e-3);
    CHECK(e2 > e1);  // central scheme: ~4x, allow slack for roundoff
    CHECK(e2 < 16.0 * e1);
  }
}

TEST_CASE("training determinism and conditioning") {
  // Mixed-size toy set: two object prototypes at overlapping depths.
  std::vector<TrainSample> samples;
  std::vector<geometry::ObjectState> objects;
  Rng rng(31);
  for (int i = 0; i < 40; ++i) {
    geometry::ObjectState obj;
    const bool big = i % 2 == 0;
    obj.size = big ? Eigen::Vector3d(6.0, 2.2, 2.6) : Eigen::Vector3d(3.5, 1.6, 1.4);
    obj.center = {rng.uniform(-5.0, 5.0), 0.0, rng.uniform(12.0, 38.0)};
    obj.yaw = 0.0;
    obj.class_id = big ? 0 : 1;
    const auto box = geometry::project_box(kCam, obj);
    InstanceFeature f =
        make_feature(obj.size, geometry::relative_orientation(obj).o, obj.class_id, 2);
    samples.push_back({f, box, obj.depth()});
    objects.push_back(obj);
  }

  PositionalEncodingConfig pe;
  pe.num_freqs = 6;
  TargetNetShape target;
  target.hidden = 8;
  TrainConfig cfg;
  cfg.epochs = 150;
  cfg.k_aug = 4;
  cfg.seed = 5;
  cfg.val_fraction = 0.0;

  auto run = [&]() {
    IPHeadModel m = init_model(samples[0].feature.dim(), pe, target, WeightMode::kDynamic, 1.0,
                               32, cfg.seed);
    train(m, samples, kCam, objects, cfg);
    return m;
  };

  SUBCASE("identical seeds give bit-identical parameters") {
    const IPHeadModel a = run();
    const IPHeadModel b = run();
    CHECK(a.hyper_w1 == b.hyper_w1);
    CHECK(a.hyper_b1 == b.hyper_b1);
    CHECK(a.hyper_w2 == b.hyper_w2);
    CHECK(a.hyper_b2 == b.hyper_b2);
  }

  SUBCASE("dynamic weights condition on object size") {
    const IPHeadModel m = run();
    InstanceFeature big = make_feature({6.0, 2.2, 2.6}, 0.0, 0, 2);
    InstanceFeature small = make_feature({3.5, 1.6, 1.4}, 0.0, 1, 2);
    const auto theta_big = generate_weights(m, big);
    const auto theta_small = generate_weights(m, small);
    CHECK((theta_big - theta_small).norm() > 1e-6);

    // Same 2D box, larger object: must be placed farther away.
    const geometry::Box2D box{120.0, 60.0, 960.0, 540.0};
    CHECK(predict_depth(m, big, box) > predict_depth(m, small, box));
  }

  SUBCASE("empty training set is rejected") {
    IPHeadModel m = small_model(WeightMode::kDynamic, 1);
    CHECK_THROWS_AS(train(m, {}, kCam, {}, cfg), EmptyTrainingSet);
  }
}

TEST_CASE("model serialization round-trips bit-exactly") {
  IPHeadModel model = small_model(WeightMode::kDynamic, 123);
  randomize_parameters(model, 124, 0.7);
  const auto path = (std::filesystem::temp_directory_path() / "lr3d_model_test.json").string();
  save_model(model, path);
  const IPHeadModel loaded = load_model(path);
  CHECK(loaded.hyper_w1 == model.hyper_w1);
  CHECK(loaded.hyper_b1 == model.hyper_b1);
  CHECK(loaded.hyper_w2 == model.hyper_w2);
  CHECK(loaded.hyper_b2 == model.hyper_b2);
  CHECK(loaded.shared_theta == model.shared_theta);
  CHECK(loaded.pe.num_freqs == model.pe.num_freqs);
  CHECK(loaded.d_ref == model.d_ref);

  Rng rng(9);
  for (int i = 0; i < 20; ++i) {
    const TrainSample s = random_sample(rng);
    CHECK(predict_depth(loaded, s.feature, s.box) == predict_depth(model, s.feature, s.box));
  }
  std::filesystem::remove(path);
}

TEST_CASE("dump_mapping_curve") {
  IPHeadModel model = small_model(WeightMode::kDynamic, 11);
  InstanceFeature f;
  f.vec = Eigen::VectorXd::Constant(6, 0.2);

  SUBCASE("empty sweep gives empty table") {
    CHECK(dump_mapping_curve(model, f, {}).empty());
  }
  SUBCASE("geometric ground-truth column self-checks by re-projection") {
    geometry::ObjectState obj;
    obj.size = {4.5, 1.9, 1.6};
    obj.center = {0.0, 0.0, 20.0};
    std::vector<geometry::Box2D> sweep;
    for (double d : {15.0, 30.0, 60.0, 90.0})
      sweep.push_back(geometry::synthesize_pair(kCam, obj, d).first);
    const auto rows = dump_mapping_curve(model, f, sweep, kCam, obj, 5.0, 200.0);
    REQUIRE(rows.size() == 4);
    for (const auto& r : rows) {
      const double h_back = geometry::synthesize_pair(kCam, obj, r.gt_depth).first.h2d;
      CHECK(h_back == doctest::Approx(r.h2d).epsilon(1e-6));
    }
  }
}
