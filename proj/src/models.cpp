#include "vtrackit/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "vtrackit/eval.hpp"

namespace vtrackit::models {

namespace {

using autodiff::constant;
using autodiff::LstmParams;
using autodiff::LstmState;
using autodiff::ParamStore;

Affine make_affine(ParamStore& store, const std::string& prefix, int out_dim,
                   int in_dim, Rng& rng) {
  Affine a;
  a.W = store.create(prefix + ".W", out_dim, in_dim, autodiff::fan_in_bound(in_dim), rng);
  a.b = store.create_zeros(prefix + ".b", out_dim, 1);
  return a;
}

Affine affine_from_store(const ParamStore& store, const std::string& prefix) {
  return {store.get(prefix + ".W"), store.get(prefix + ".b")};
}

Mat scaled(const Mat& m) { return m * kInputScale; }

}  // namespace

Var affine(const Affine& a, const Var& x) {
  return autodiff::add_bias(autodiff::matmul(a.W, x), a.b);
}

Generator Generator::create(ParamStore& store, Rng& rng) {
  Generator g;
  g.store = &store;
  g.embed_obs = make_affine(store, "gen.embed_obs", kEmbedDim, 2, rng);
  g.encoder = LstmParams::create(store, "gen.enc", kEmbedDim, kEncoderHidden, rng);
  g.embed_dec = make_affine(store, "gen.embed_dec", kDecoderHidden, 2, rng);
  g.decoder = LstmParams::create(store, "gen.dec", kDecoderHidden, kDecoderHidden, rng);
  g.out = make_affine(store, "gen.out", 2, kDecoderHidden, rng);
  return g;
}

Generator Generator::from_store(ParamStore& store) {
  Generator g;
  g.store = &store;
  g.embed_obs = affine_from_store(store, "gen.embed_obs");
  g.encoder = LstmParams::from_store(store, "gen.enc", kEmbedDim, kEncoderHidden);
  g.embed_dec = affine_from_store(store, "gen.embed_dec");
  g.decoder = LstmParams::from_store(store, "gen.dec", kDecoderHidden, kDecoderHidden);
  g.out = affine_from_store(store, "gen.out");
  return g;
}

Discriminator Discriminator::create(ParamStore& store, Rng& rng) {
  Discriminator d;
  d.store = &store;
  d.embed = make_affine(store, "disc.embed", kEmbedDim, 2, rng);
  d.encoder = LstmParams::create(store, "disc.enc", kEmbedDim, kEncoderHidden, rng);
  d.head = make_affine(store, "disc.head", 1, kEncoderHidden, rng);
  return d;
}

Discriminator Discriminator::from_store(ParamStore& store) {
  Discriminator d;
  d.store = &store;
  d.embed = affine_from_store(store, "disc.embed");
  d.encoder = LstmParams::from_store(store, "disc.enc", kEmbedDim, kEncoderHidden);
  d.head = affine_from_store(store, "disc.head");
  return d;
}

Correction Correction::create(ParamStore& store, Rng& rng) {
  Correction c;
  c.store = &store;
  c.ctx = LstmParams::create(store, "cm.ctx", dataset::kContextDim + 2, kContextHidden, rng);
  c.proj = make_affine(store, "cm.proj", 2 * kPredSteps, kContextHidden, rng);
  return c;
}

Correction Correction::from_store(ParamStore& store) {
  Correction c;
  c.store = &store;
  c.ctx = LstmParams::from_store(store, "cm.ctx", dataset::kContextDim + 2, kContextHidden);
  c.proj = affine_from_store(store, "cm.proj");
  return c;
}

Batch make_batch(const std::vector<const dataset::TrajectoryWindow*>& windows,
                 const dataset::FeatureStats& stats) {
  Batch b;
  int cols = 0;
  for (const auto* w : windows) cols += static_cast<int>(w->vehicle_ids.size());
  const int obs_steps = windows.empty() ? kObsSteps
                                        : static_cast<int>(windows[0]->obs[0].size());
  const int fut_steps = windows.empty() ? kPredSteps
                                        : static_cast<int>(windows[0]->fut[0].size());
  for (int t = 0; t < obs_steps; ++t) b.obs.push_back(Mat::Zero(2, cols));
  for (int t = 0; t < fut_steps; ++t) b.fut.push_back(Mat::Zero(2, cols));
  for (int t = 0; t < obs_steps; ++t)
    b.ctx.push_back(Mat::Zero(dataset::kContextDim, cols));

  int col = 0;
  for (std::size_t wi = 0; wi < windows.size(); ++wi) {
    const auto& w = *windows[wi];
    for (std::size_t v = 0; v < w.vehicle_ids.size(); ++v, ++col) {
      for (int t = 0; t < obs_steps; ++t) {
        b.obs[static_cast<std::size_t>(t)](0, col) = w.obs[v][static_cast<std::size_t>(t)].x;
        b.obs[static_cast<std::size_t>(t)](1, col) = w.obs[v][static_cast<std::size_t>(t)].y;
        const auto enc = dataset::encode_context_row(w.context[v][static_cast<std::size_t>(t)], stats);
        for (int f = 0; f < dataset::kContextDim; ++f)
          b.ctx[static_cast<std::size_t>(t)](f, col) = enc[static_cast<std::size_t>(f)];
      }
      for (int t = 0; t < fut_steps; ++t) {
        b.fut[static_cast<std::size_t>(t)](0, col) = w.fut[v][static_cast<std::size_t>(t)].x;
        b.fut[static_cast<std::size_t>(t)](1, col) = w.fut[v][static_cast<std::size_t>(t)].y;
      }
      b.window_of_col.push_back(static_cast<int>(wi));
      b.ego_col.push_back(v == 0 ? 1 : 0);
    }
  }
  return b;
}

std::vector<Var> generate(const Generator& gen, const std::vector<Mat>& obs,
                          const Mat& z, int pred_steps) {
  const int batch = static_cast<int>(obs[0].cols());
  LstmState enc_state = autodiff::lstm_zero_state(gen.encoder, batch);
  for (const Mat& x : obs) {
    Var e = autodiff::relu(affine(gen.embed_obs, constant(scaled(x))));
    enc_state = autodiff::lstm_step(gen.encoder, e, enc_state);
  }
  LstmState dec_state{autodiff::concat_rows(enc_state.h, constant(z)),
                      constant(Mat::Zero(kDecoderHidden, batch))};
  Var pos = constant(scaled(obs.back()));
  std::vector<Var> preds;
  preds.reserve(static_cast<std::size_t>(pred_steps));
  for (int t = 0; t < pred_steps; ++t) {
    Var e = autodiff::relu(affine(gen.embed_dec, pos));
    dec_state = autodiff::lstm_step(gen.decoder, e, dec_state);
    Var disp = affine(gen.out, dec_state.h);
    pos = autodiff::add(pos, disp);
    preds.push_back(autodiff::scale(pos, 1.0 / kInputScale));
  }
  return preds;
}

Var discriminate_logits(const Discriminator& disc, const std::vector<Mat>& obs,
                        const std::vector<Var>& future) {
  const int batch = static_cast<int>(obs[0].cols());
  LstmState state = autodiff::lstm_zero_state(disc.encoder, batch);
  for (const Mat& x : obs) {
    Var e = autodiff::relu(affine(disc.embed, constant(scaled(x))));
    state = autodiff::lstm_step(disc.encoder, e, state);
  }
  for (const Var& y : future) {
    Var e = autodiff::relu(affine(disc.embed, autodiff::scale(y, kInputScale)));
    state = autodiff::lstm_step(disc.encoder, e, state);
  }
  return affine(disc.head, state.h);
}

Mat discriminate(const Discriminator& disc, const std::vector<Mat>& obs,
                 const std::vector<Mat>& future) {
  autodiff::NoGradGuard ng;
  std::vector<Var> fut;
  fut.reserve(future.size());
  for (const Mat& m : future) fut.push_back(constant(m));
  const Mat logits = discriminate_logits(disc, obs, fut).value();
  return (1.0 / (1.0 + (-logits.array()).exp())).matrix();
}

Corrected correct(const Correction& cm, const std::vector<Mat>& ctx,
                  const std::vector<Mat>& obs, const std::vector<Var>& pred) {
  const int batch = static_cast<int>(obs[0].cols());
  LstmState state = autodiff::lstm_zero_state(cm.ctx, batch);
  for (std::size_t t = 0; t < ctx.size(); ++t) {
    Mat x(dataset::kContextDim + 2, batch);
    x.topRows(dataset::kContextDim) = ctx[t];
    x.bottomRows(2) = scaled(obs[t]);
    state = autodiff::lstm_step(cm.ctx, constant(x), state);
  }
  Corrected out;
  out.correction = affine(cm.proj, state.h);  // 2*T x B
  out.pred.reserve(pred.size());
  for (std::size_t t = 0; t < pred.size(); ++t) {
    Var c_t = autodiff::slice_rows(out.correction, static_cast<int>(2 * t), 2);
    Var gate = autodiff::tanh_op(c_t);
    out.pred.push_back(autodiff::add(pred[t], autodiff::cmul(gate, pred[t])));
  }
  return out;
}

Mat sample_noise(Rng& rng, int cols) {
  Mat z(kNoiseDim, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < kNoiseDim; ++r) z(r, c) = rng.normal();
  return z;
}

TganModel TganModel::create(std::uint64_t seed) {
  TganModel m;
  Rng rng(Rng::derive(seed, "tgan-init"));
  m.gen = Generator::create(m.gen_store, rng);
  m.disc = Discriminator::create(m.disc_store, rng);
  return m;
}

void TganModel::save(const std::string& path) const {
  autodiff::save_stores({&gen_store, &disc_store}, path, {{"arch", "tgan"}});
}

TganModel TganModel::load(const std::string& path) {
  TganModel m;
  const auto meta = autodiff::load_stores({{"gen.", &m.gen_store}, {"disc.", &m.disc_store}}, path);
  if (meta.count("arch") && meta.at("arch") != "tgan")
    throw std::runtime_error("checkpoint is not a tgan model: " + path);
  m.gen = Generator::from_store(m.gen_store);
  m.disc = Discriminator::from_store(m.disc_store);
  return m;
}

InfraganModel InfraganModel::create_from(const TganModel& tgan, std::uint64_t seed) {
  InfraganModel m;
  Rng rng(Rng::derive(seed, "infragan-init"));
  m.gen = Generator::create(m.gen_store, rng);
  m.disc = Discriminator::create(m.disc_store, rng);
  m.cm = Correction::create(m.cm_store, rng);
  for (const auto& [name, var] : tgan.gen_store.all())
    m.gen_store.get(name).value() = var.value();
  for (const auto& [name, var] : tgan.disc_store.all())
    m.disc_store.get(name).value() = var.value();
  return m;
}

void InfraganModel::save(const std::string& path) const {
  autodiff::save_stores({&gen_store, &disc_store, &cm_store}, path,
                        {{"arch", "infragan"}});
}

InfraganModel InfraganModel::load(const std::string& path) {
  InfraganModel m;
  const auto meta = autodiff::load_stores(
      {{"gen.", &m.gen_store}, {"disc.", &m.disc_store}, {"cm.", &m.cm_store}}, path);
  if (meta.count("arch") && meta.at("arch") != "infragan")
    throw std::runtime_error("checkpoint is not an infragan model: " + path);
  m.gen = Generator::from_store(m.gen_store);
  m.disc = Discriminator::from_store(m.disc_store);
  m.cm = Correction::from_store(m.cm_store);
  return m;
}

namespace {

Var future_mse(const std::vector<Var>& pred, const std::vector<Mat>& fut) {
  Var acc;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    Var term = autodiff::mse(pred[t], constant(fut[t]));
    acc = acc.valid() ? autodiff::add(acc, term) : term;
  }
  return autodiff::scale(acc, 1.0 / static_cast<double>(pred.size()));
}

std::vector<Var> as_vars(const std::vector<Mat>& mats) {
  std::vector<Var> out;
  out.reserve(mats.size());
  for (const Mat& m : mats) out.push_back(constant(m));
  return out;
}

std::vector<std::vector<const dataset::TrajectoryWindow*>> make_batches(
    const std::vector<dataset::TrajectoryWindow>& windows, int batch_size, Rng& rng) {
  std::vector<int> order(windows.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::vector<std::vector<const dataset::TrajectoryWindow*>> batches;
  for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(batch_size)) {
    std::vector<const dataset::TrajectoryWindow*> b;
    for (std::size_t j = i; j < std::min(order.size(), i + static_cast<std::size_t>(batch_size)); ++j)
      b.push_back(&windows[static_cast<std::size_t>(order[j])]);
    batches.push_back(std::move(b));
  }
  return batches;
}

double mean_min_ade(const Generator& gen, const Correction* cm,
                    const std::vector<dataset::TrajectoryWindow>& windows,
                    const dataset::FeatureStats& stats, int k, std::uint64_t seed) {
  if (windows.empty()) return 0.0;
  std::vector<double> values;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto set = predict_k(gen, cm, windows[i], stats, k, Rng::derive(seed, i));
    for (std::size_t v = 0; v < windows[i].vehicle_ids.size(); ++v) {
      double best = std::numeric_limits<double>::infinity();
      for (int s = 0; s < set.k; ++s)
        best = std::min(best, eval::ade(set.trajectories[static_cast<std::size_t>(s)][v],
                                        windows[i].fut[v]));
      values.push_back(best);
    }
  }
  return eval::pairwise_mean(values);
}

}  // namespace

TganModel tgan_train(const std::vector<dataset::TrajectoryWindow>& train,
                     const dataset::FeatureStats& stats, const TrainConfig& cfg,
                     std::vector<EpochStat>* curve, const ProgressFn& progress) {
  if (train.empty()) throw std::invalid_argument("tgan_train: empty training set");
  TganModel model = TganModel::create(cfg.seed);
  autodiff::Adam opt_g({cfg.lr, 0.9, 0.999, 1e-8, cfg.clip_norm});
  autodiff::Adam opt_d({cfg.lr, 0.9, 0.999, 1e-8, cfg.clip_norm});
  Rng rng(Rng::derive(cfg.seed, "tgan-train"));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto batches = make_batches(train, cfg.batch, rng);
    double d_sum = 0.0, adv_sum = 0.0, mse_sum = 0.0;
    for (const auto& batch_windows : batches) {
      const Batch b = make_batch(batch_windows, stats);
      const int cols = b.cols();
      if (cols == 0) continue;

      // discriminator step on real vs a detached fake
      std::vector<Mat> fake_detached;
      {
        autodiff::NoGradGuard ng;
        const Mat z = sample_noise(rng, cols);
        for (const Var& v : generate(model.gen, b.obs, z)) fake_detached.push_back(v.value());
      }
      model.gen_store.zero_grads();
      model.disc_store.zero_grads();
      Var d_real = autodiff::bce_with_logits(
          discriminate_logits(model.disc, b.obs, as_vars(b.fut)),
          constant(Mat::Ones(1, cols)));
      Var d_fake = autodiff::bce_with_logits(
          discriminate_logits(model.disc, b.obs, as_vars(fake_detached)),
          constant(Mat::Zero(1, cols)));
      Var d_loss = autodiff::add(d_real, d_fake);
      if (!std::isfinite(d_loss.scalar())) throw Diverged(epoch);
      autodiff::backward(d_loss);
      opt_d.step(model.disc_store);

      // generator step: non-saturating adversarial term plus the MSE anchor
      model.gen_store.zero_grads();
      model.disc_store.zero_grads();
      const Mat z2 = sample_noise(rng, cols);
      std::vector<Var> fake = generate(model.gen, b.obs, z2);
      Var g_adv = autodiff::bce_with_logits(
          discriminate_logits(model.disc, b.obs, fake), constant(Mat::Ones(1, cols)));
      Var g_mse = future_mse(fake, b.fut);
      Var g_loss = autodiff::add(g_adv, autodiff::scale(g_mse, cfg.lambda_mse));
      if (!std::isfinite(g_loss.scalar())) throw Diverged(epoch);
      autodiff::backward(g_loss);
      opt_g.step(model.gen_store);

      d_sum += d_loss.scalar();
      adv_sum += g_adv.scalar();
      mse_sum += g_mse.scalar();
    }
    EpochStat stat;
    stat.epoch = epoch;
    const double nb = static_cast<double>(std::max<std::size_t>(1, batches.size()));
    stat.d_loss = d_sum / nb;
    stat.g_adv = adv_sum / nb;
    stat.g_mse = mse_sum / nb;
    stat.total = stat.g_adv + cfg.lambda_mse * stat.g_mse;
    stat.lr = opt_g.lr();
    if (curve) curve->push_back(stat);
    if (progress) progress(stat);
  }
  return model;
}

InfraganModel infragan_train(const std::vector<dataset::TrajectoryWindow>& train,
                             const std::vector<dataset::TrajectoryWindow>& val,
                             const dataset::FeatureStats& stats, const TganModel& tgan,
                             const TrainConfig& cfg, std::vector<EpochStat>* curve,
                             const ProgressFn& progress) {
  if (train.empty()) throw std::invalid_argument("infragan_train: empty training set");
  InfraganModel model = InfraganModel::create_from(tgan, cfg.seed);
  autodiff::Adam opt_g({cfg.lr, 0.9, 0.999, 1e-8, cfg.clip_norm});
  autodiff::Adam opt_cm({cfg.lr, 0.9, 0.999, 1e-8, cfg.clip_norm});
  Rng rng(Rng::derive(cfg.seed, "infragan-train"));

  double best_val = std::numeric_limits<double>::infinity();
  int stall = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto batches = make_batches(train, cfg.batch, rng);
    double loss_sum = 0.0;
    for (const auto& batch_windows : batches) {
      const Batch b = make_batch(batch_windows, stats);
      const int cols = b.cols();
      if (cols == 0) continue;

      model.gen_store.zero_grads();
      model.cm_store.zero_grads();
      Var total;
      for (int ki = 0; ki < cfg.k; ++ki) {
        const Mat z = sample_noise(rng, cols);
        std::vector<Var> pred;
        if (cfg.freeze_generator) {
          autodiff::NoGradGuard ng;
          for (const Var& v : generate(model.gen, b.obs, z))
            pred.push_back(constant(v.value()));
        } else {
          pred = generate(model.gen, b.obs, z);
        }
        Corrected cor = correct(model.cm, b.ctx, b.obs, pred);
        const std::vector<Var>& scored = cfg.loss_literal_eq8 ? pred : cor.pred;
        Var sq;
        for (std::size_t t = 0; t < scored.size(); ++t) {
          Var d = autodiff::sub(scored[t], constant(b.fut[t]));
          Var term = autodiff::sq_norm_cols(d);
          sq = sq.valid() ? autodiff::add(sq, term) : term;
        }
        Var l1 = autodiff::l1_norm_cols(cor.correction);
        Var reg = cfg.cm_inverse_l1
                      ? autodiff::reciprocal(autodiff::add_scalar(l1, cfg.cm_eps))
                      : l1;
        Var term = autodiff::mean_all(autodiff::add(sq, reg));
        total = total.valid() ? autodiff::add(total, term) : term;
      }
      if (!std::isfinite(total.scalar())) throw Diverged(epoch);
      autodiff::backward(total);
      if (!cfg.freeze_generator) opt_g.step(model.gen_store);
      opt_cm.step(model.cm_store);
      loss_sum += total.scalar();
    }

    EpochStat stat;
    stat.epoch = epoch;
    const double nb = static_cast<double>(std::max<std::size_t>(1, batches.size()));
    stat.total = loss_sum / nb;
    stat.lr = opt_g.lr();
    stat.val_min_ade = mean_min_ade(model.gen, &model.cm, val, stats, cfg.k,
                                    Rng::derive(cfg.seed, "val"));
    if (curve) curve->push_back(stat);
    if (progress) progress(stat);

    // adaptive schedule: halve when validation stalls
    if (!val.empty()) {
      if (stat.val_min_ade < best_val - 1e-6) {
        best_val = stat.val_min_ade;
        stall = 0;
      } else if (++stall >= cfg.lr_patience) {
        opt_g.set_lr(opt_g.lr() * 0.5);
        opt_cm.set_lr(opt_cm.lr() * 0.5);
        stall = 0;
      }
    }
  }
  return model;
}

PredictionSet predict_k(const Generator& gen, const Correction* cm,
                        const dataset::TrajectoryWindow& window,
                        const dataset::FeatureStats& stats, int k,
                        std::uint64_t seed) {
  autodiff::NoGradGuard ng;
  PredictionSet out;
  out.k = k;
  out.seed = seed;
  const std::vector<const dataset::TrajectoryWindow*> one = {&window};
  const Batch b = make_batch(one, stats);
  const int cols = b.cols();
  Rng rng(Rng::derive(seed, "predict"));

  for (int s = 0; s < k; ++s) {
    const Mat z = sample_noise(rng, cols);
    std::vector<Var> pred = generate(gen, b.obs, z);
    std::vector<std::vector<Vec2>> sample(static_cast<std::size_t>(cols));
    std::vector<std::vector<Vec2>> corr;
    if (cm) {
      Corrected c = correct(*cm, b.ctx, b.obs, pred);
      pred = c.pred;
      corr.resize(static_cast<std::size_t>(cols));
      for (int col = 0; col < cols; ++col) {
        for (int t = 0; t < kPredSteps; ++t) {
          corr[static_cast<std::size_t>(col)].push_back(
              {c.correction.value()(2 * t, col), c.correction.value()(2 * t + 1, col)});
        }
      }
    }
    for (int col = 0; col < cols; ++col) {
      for (std::size_t t = 0; t < pred.size(); ++t) {
        sample[static_cast<std::size_t>(col)].push_back(
            {pred[t].value()(0, col), pred[t].value()(1, col)});
      }
    }
    out.trajectories.push_back(std::move(sample));
    if (cm) out.corrections.push_back(std::move(corr));
  }
  return out;
}

}  // namespace vtrackit::models
