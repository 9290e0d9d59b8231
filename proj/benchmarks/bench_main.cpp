#include <benchmark/benchmark.h>

#include <limits>
#include <vector>

#include "lr3d/geometry.hpp"
#include "lr3d/iphead.hpp"
#include "lr3d/metrics.hpp"
#include "lr3d/rng.hpp"
#include "lr3d/synthdata.hpp"

using namespace lr3d;

namespace {

const geometry::CameraIntrinsics kCam{1000.0, 1000.0, 960.0, 540.0, 1920.0, 1080.0};

geometry::ObjectState sample_object(Rng& rng) {
  geometry::ObjectState obj;
  const double d = rng.uniform(6.0, 110.0);
  obj.center = {rng.uniform(-0.3, 0.3) * d, rng.uniform(-0.05, 0.05) * d, d};
  obj.size = {rng.uniform(3.5, 6.0), rng.uniform(1.6, 2.2), rng.uniform(1.3, 2.5)};
  obj.yaw = rng.uniform(-3.1, 3.1);
  return obj;
}

void BM_ProjectBox(benchmark::State& state) {
  Rng rng(1);
  std::vector<geometry::ObjectState> objs;
  for (int i = 0; i < 1024; ++i) objs.push_back(sample_object(rng));
  size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(geometry::project_box(kCam, objs[i++ & 1023]));
  }
}
BENCHMARK(BM_ProjectBox);

void BM_SynthesizePair(benchmark::State& state) {
  Rng rng(2);
  std::vector<geometry::ObjectState> objs;
  for (int i = 0; i < 1024; ++i) objs.push_back(sample_object(rng));
  size_t i = 0;
  for (auto _ : state) {
    const auto& o = objs[i++ & 1023];
    benchmark::DoNotOptimize(geometry::synthesize_pair(kCam, o, 1.7 * o.depth()));
  }
}
BENCHMARK(BM_SynthesizePair);

void BM_GenerateWeights(benchmark::State& state) {
  const auto model =
      iphead::init_model(8, {}, {}, iphead::WeightMode::kDynamic, 1.0, 64, 3);
  const auto feature = iphead::make_feature({4.5, 1.9, 1.6}, 0.4, 0, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(iphead::generate_weights(model, feature));
  }
}
BENCHMARK(BM_GenerateWeights);

void BM_PredictDepth(benchmark::State& state) {
  auto model = iphead::init_model(8, {}, {}, iphead::WeightMode::kDynamic, 1.0, 64, 4);
  iphead::randomize_parameters(model, 5, 0.1);
  const auto feature = iphead::make_feature({4.5, 1.9, 1.6}, 0.4, 0, 3);
  const geometry::Box2D box{90.0, 32.0, 700.0, 520.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(iphead::predict_depth(model, feature, box));
  }
}
BENCHMARK(BM_PredictDepth);

void BM_LdsEvaluation(benchmark::State& state) {
  Rng rng(6);
  std::vector<metrics::GroundTruthRecord> gts;
  std::vector<metrics::DetectionRecord> preds;
  for (int i = 0; i < (int)state.range(0); ++i) {
    const auto obj = sample_object(rng);
    gts.push_back({i / 4, i, i % 3, obj.center, obj.size, obj.yaw});
    preds.push_back({i / 4, 10000 + i, i % 3,
                     obj.center + Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()),
                     obj.size, obj.yaw + 0.05 * rng.normal(), rng.uniform01()});
  }
  const metrics::RangeBucket bucket{"all", 0.0, std::numeric_limits<double>::infinity()};
  for (auto _ : state) {
    benchmark::DoNotOptimize(metrics::lds(preds, gts, bucket));
  }
}
BENCHMARK(BM_LdsEvaluation)->Arg(64)->Arg(512);

void BM_SceneGeneration(benchmark::State& state) {
  auto cfg = synthdata::default_config();
  cfg.seed = 7;
  cfg.n_frames = (int)state.range(0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(synthdata::generate(cfg));
  }
}
BENCHMARK(BM_SceneGeneration)->Arg(16)->Arg(128);

}  // namespace

BENCHMARK_MAIN();
