#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vtrackit/autodiff.hpp"
#include "vtrackit/dataset.hpp"
#include "vtrackit/geometry.hpp"

namespace vtrackit::models {

using autodiff::Mat;
using autodiff::Var;

constexpr int kEmbedDim = 16;
constexpr int kEncoderHidden = 16;
constexpr int kDecoderHidden = 32;
constexpr int kNoiseDim = kDecoderHidden - kEncoderHidden;
constexpr int kContextHidden = 10;
constexpr int kObsSteps = 8;
constexpr int kPredSteps = 8;
// positions enter the networks scaled to roughly [-1, 1]
constexpr double kInputScale = 0.02;

struct Affine {
  Var W, b;
};
Var affine(const Affine& a, const Var& x);

// LSTM encoder-decoder generator. The same encoder weights serve every
// vehicle; the decoder's initial hidden state is [encoder final state; z].
struct Generator {
  autodiff::ParamStore* store = nullptr;
  Affine embed_obs;               // 2 -> 16, ReLU
  autodiff::LstmParams encoder;   // 16 cells
  Affine embed_dec;               // 2 -> 32, ReLU
  autodiff::LstmParams decoder;   // 32 cells
  Affine out;                     // 32 -> 2, per-step displacement

  static Generator create(autodiff::ParamStore& store, Rng& rng);
  static Generator from_store(autodiff::ParamStore& store);
};

struct Discriminator {
  autodiff::ParamStore* store = nullptr;
  Affine embed;                  // 2 -> 16, ReLU
  autodiff::LstmParams encoder;  // 16 cells
  Affine head;                   // 16 -> 1 logit

  static Discriminator create(autodiff::ParamStore& store, Rng& rng);
  static Discriminator from_store(autodiff::ParamStore& store);
};

// Context LSTM + correction head: final hidden state projects to a per-step
// correction tensor C, applied as y_hat = y + tanh(C) * y.
struct Correction {
  autodiff::ParamStore* store = nullptr;
  autodiff::LstmParams ctx;  // (26 context + 2 coords) -> 10 cells
  Affine proj;               // 10 -> 2*T

  static Correction create(autodiff::ParamStore& store, Rng& rng);
  static Correction from_store(autodiff::ParamStore& store);
};

// Columns are vehicle tracks pooled across windows.
struct Batch {
  std::vector<Mat> obs;  // kObsSteps mats of 2 x B, meters, window-local
  std::vector<Mat> fut;  // kPredSteps mats of 2 x B
  std::vector<Mat> ctx;  // kObsSteps mats of 26 x B
  std::vector<int> window_of_col;
  std::vector<char> ego_col;
  int cols() const { return obs.empty() ? 0 : static_cast<int>(obs[0].cols()); }
};

Batch make_batch(const std::vector<const dataset::TrajectoryWindow*>& windows,
                 const dataset::FeatureStats& stats);

// Forward passes (graph-recording unless a NoGradGuard is active).
std::vector<Var> generate(const Generator& gen, const std::vector<Mat>& obs,
                          const Mat& z, int pred_steps = kPredSteps);
Var discriminate_logits(const Discriminator& disc, const std::vector<Mat>& obs,
                        const std::vector<Var>& future);
Mat discriminate(const Discriminator& disc, const std::vector<Mat>& obs,
                 const std::vector<Mat>& future);  // sigmoid scores, 1 x B

struct Corrected {
  std::vector<Var> pred;  // corrected steps
  Var correction;         // 2*T x B tensor C
};
Corrected correct(const Correction& cm, const std::vector<Mat>& ctx,
                  const std::vector<Mat>& obs, const std::vector<Var>& pred);

Mat sample_noise(Rng& rng, int cols);

// ---- training ----

struct TrainConfig {
  int epochs = 200;
  int batch = 64;
  double lr = 1e-3;
  int k = 5;
  double lambda_mse = 1.0;
  double clip_norm = 5.0;
  std::uint64_t seed = 0;
  bool loss_literal_eq8 = false;  // use the uncorrected trajectory in the error norm
  bool cm_inverse_l1 = true;      // 1/(|C|_1 + eps) term; false selects +|C|_1
  bool freeze_generator = false;
  int lr_patience = 10;           // halve lr when val minADE stalls this long
  double cm_eps = 1e-6;
};

struct EpochStat {
  int epoch = 0;
  double d_loss = 0.0;
  double g_adv = 0.0;
  double g_mse = 0.0;
  double total = 0.0;
  double val_min_ade = 0.0;
  double lr = 0.0;
};

struct Diverged : std::runtime_error {
  explicit Diverged(int epoch)
      : std::runtime_error("training diverged at epoch " + std::to_string(epoch)),
        epoch(epoch) {}
  int epoch;
};

// Generator and discriminator keep separate stores so the alternating
// updates can step one side while discarding the other side's gradients.
struct TganModel {
  autodiff::ParamStore gen_store;
  autodiff::ParamStore disc_store;
  Generator gen;
  Discriminator disc;

  static TganModel create(std::uint64_t seed);
  static TganModel load(const std::string& path);
  void save(const std::string& path) const;
};

struct InfraganModel {
  autodiff::ParamStore gen_store;
  autodiff::ParamStore disc_store;
  autodiff::ParamStore cm_store;
  Generator gen;
  Discriminator disc;
  Correction cm;

  static InfraganModel create_from(const TganModel& tgan, std::uint64_t seed);
  static InfraganModel load(const std::string& path);
  void save(const std::string& path) const;
};

using ProgressFn = std::function<void(const EpochStat&)>;

TganModel tgan_train(const std::vector<dataset::TrajectoryWindow>& train,
                     const dataset::FeatureStats& stats, const TrainConfig& cfg,
                     std::vector<EpochStat>* curve = nullptr,
                     const ProgressFn& progress = {});

InfraganModel infragan_train(const std::vector<dataset::TrajectoryWindow>& train,
                             const std::vector<dataset::TrajectoryWindow>& val,
                             const dataset::FeatureStats& stats, const TganModel& tgan,
                             const TrainConfig& cfg,
                             std::vector<EpochStat>* curve = nullptr,
                             const ProgressFn& progress = {});

// ---- sampling ----

struct PredictionSet {
  int k = 0;
  // [sample][vehicle][step], meters, window-local
  std::vector<std::vector<std::vector<Vec2>>> trajectories;
  std::vector<std::vector<std::vector<Vec2>>> corrections;  // tanh inputs C, optional
  std::uint64_t seed = 0;
};

PredictionSet predict_k(const Generator& gen, const Correction* cm,
                        const dataset::TrajectoryWindow& window,
                        const dataset::FeatureStats& stats, int k,
                        std::uint64_t seed);

}  // namespace vtrackit::models
