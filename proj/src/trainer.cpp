// SPDX-License-Identifier: Apache-2.0
#include "ovad/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "ovad/error.hpp"
#include "ovad/rng.hpp"

namespace ovad {

void TrainConfig::validate() const {
  if (!(lambda_a >= 0.0) || !(lambda_t >= 0.0)) throw ConfigError("loss weights must be >= 0");
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be >= 0");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (!(r > 0.0 && r <= 1.0)) throw ConfigError("anchor ratio r must lie in (0, 1]");
  if (k < 1) throw ConfigError("k must be >= 1");
  student.validate();
  attention.validate();
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"lambda_a", c.lambda_a},
          {"lambda_t", c.lambda_t},
          {"lr", c.lr},
          {"weight_decay", c.weight_decay},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"r", c.r},
          {"k", c.k},
          {"activation", to_string(c.activation)},
          {"geo_norm", to_string(c.geo_norm)},
          {"distill_target", to_string(c.distill_target)},
          {"that_mode", to_string(c.that_mode)},
          {"student", to_json(c.student)},
          {"attention", to_json(c.attention)}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.lambda_a = j.at("lambda_a").get<double>();
  c.lambda_t = j.at("lambda_t").get<double>();
  c.lr = j.at("lr").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.r = j.at("r").get<double>();
  c.k = j.at("k").get<std::size_t>();
  c.activation = parse_activation(j.at("activation").get<std::string>());
  c.geo_norm = parse_geo_norm(j.at("geo_norm").get<std::string>());
  c.distill_target = parse_distill_target(j.at("distill_target").get<std::string>());
  c.that_mode = parse_that_mode(j.at("that_mode").get<std::string>());
  c.student = encoder_config_from_json(j.at("student"));
  c.attention = attention_config_from_json(j.at("attention"));
  return c;
}

Preset preset(const std::string& name) {
  Preset p;
  p.name = name;
  if (name == "desk") {
    p.n_points = 256;
    p.train.student = {32, {32, 32}, 8, ModelRole::student};
    p.train.attention = {16, 16};
    p.train.epochs = 20;
    p.train.batch_size = 4;
    // tau starts near 2.66 and Adam moves it about lr per step; short desk
    // schedules need the larger rate for it to reach a useful range
    p.train.lr = 1e-2;
  } else if (name == "paper") {
    p.n_points = 2048;
    p.train.student = {512, {128, 256}, 16, ModelRole::student};
    p.train.attention = {64, 64};
    p.train.epochs = 200;
    p.train.batch_size = 16;
  } else {
    throw ConfigError("unknown preset: " + name + " (expected desk or paper)");
  }
  return p;
}

void adam_step(ParamSet& params, AdamState& state, double lr, double weight_decay) {
  for (const auto& [name, e] : params) {
    if (!e.grad.all_finite()) throw NumericError("non-finite gradient for " + name);
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(AdamState::kBeta1, t);
  const double correction2 = 1.0 - std::pow(AdamState::kBeta2, t);
  for (auto& [name, e] : params) {
    auto [m_it, m_new] = state.first.try_emplace(name, e.value.rows(), e.value.cols());
    auto [v_it, v_new] = state.second.try_emplace(name, e.value.rows(), e.value.cols());
    auto theta = e.value.values();
    const auto g = e.grad.values();
    auto m = m_it->second.values();
    auto v = v_it->second.values();
    const double decay = e.decay ? lr * weight_decay : 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      theta[i] -= decay * theta[i];
      m[i] = AdamState::kBeta1 * m[i] + (1.0 - AdamState::kBeta1) * g[i];
      v[i] = AdamState::kBeta2 * v[i] + (1.0 - AdamState::kBeta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      theta[i] -= lr * m_hat / (std::sqrt(v_hat) + AdamState::kEpsilon);
    }
  }
  if (params.contains(kTemperatureParam)) {
    double& tau = params.value(kTemperatureParam)(0, 0);
    tau = std::max(tau, Temperature::kMin);
  }
}

CloudCache prepare_cloud(const PointCloud& cloud, const Checkpoint& teacher,
                         const TrainConfig& config) {
  if (!teacher.attention) throw ConfigError("teacher checkpoint has no projector");
  CloudCache cache;
  const auto anchor_idx = fps(cloud, config.r);
  cache.anchors = knn(cloud, anchor_idx, config.k);
  cache.student_neighborhoods = knn_all(cloud, config.student.neighborhood_k);
  const Matrix p_te = encode(cloud, teacher.params, teacher.encoder,
                             knn_all(cloud, teacher.encoder.neighborhood_k), nullptr);
  cache.teacher_relations = relation_descriptors(cloud, p_te, cache.anchors);
  const Qkv qkv = qkv_project(p_te, teacher.params);
  cache.teacher_attention = self_attention(qkv.query, qkv.key, qkv.value, *teacher.attention);
  return cache;
}

CloudPass total_loss(const PointCloud& cloud, const CloudCache& cache, const TextBank& text,
                     ParamSet& student, const TrainConfig& config, const ClassWeights& weights,
                     bool with_grad, double grad_scale) {
  if (!cloud.labels) throw ConfigError("training cloud has no labels");
  const auto& labels = *cloud.labels;
  const Temperature tau{student.value(kTemperatureParam)(0, 0)};
  const TextHeadConfig head = config.head();

  EncoderTrace enc;
  const Matrix p = encode(cloud, student, config.student, cache.student_neighborhoods, &enc);
  const TextHeadTrace text_trace = text_head_forward(text, p, tau, head);
  const RelationSet rel = relation_descriptors(cloud, p, cache.anchors);
  const Qkv qkv = qkv_project(p, student);
  const AttentionMaps maps = self_attention(qkv.query, qkv.key, qkv.value, config.attention);
  const bool on_weights = config.distill_target == DistillTarget::weights;
  const Matrix& att_student = on_weights ? maps.weights : maps.omega;
  const Matrix& att_teacher =
      on_weights ? cache.teacher_attention.weights : cache.teacher_attention.omega;

  CloudPass pass;
  pass.loss.point_wise = weighted_nll(text_trace.probs, labels, weights);
  pass.loss.geo_transfer = geo_transfer_loss(rel, cache.teacher_relations, config.geo_norm);
  pass.loss.att_transfer = attention_transfer_loss(att_student, att_teacher);
  pass.loss.total = pass.loss.point_wise + config.lambda_a * pass.loss.att_transfer +
                    config.lambda_t * pass.loss.geo_transfer;
  pass.predictions = predict(text_trace.relevance);
  if (!with_grad) return pass;

  TextHeadGrads head_grads =
      point_wise_loss_backward(text_trace, text, p, tau, head, labels, weights);
  Matrix d_p = std::move(head_grads.d_embeddings);
  d_p *= grad_scale;
  student.grad(kTemperatureParam)(0, 0) += grad_scale * head_grads.d_tau;

  if (config.lambda_t != 0.0) {
    Matrix d_rel = geo_transfer_loss_grad(rel, cache.teacher_relations, config.geo_norm);
    d_rel *= grad_scale * config.lambda_t;
    relation_descriptors_backward(cache.anchors, d_rel, d_p);
  }
  if (config.lambda_a != 0.0) {
    Matrix d_att = attention_transfer_loss_grad(att_student, att_teacher);
    d_att *= grad_scale * config.lambda_a;
    const Qkv d_qkv =
        on_weights
            ? self_attention_backward(qkv, maps, Matrix(maps.omega.rows(), maps.omega.cols()),
                                      d_att, config.attention)
            : self_attention_backward(qkv, maps, d_att, Matrix(), config.attention);
    qkv_project_backward(p, d_qkv, student, d_p);
  }
  encode_backward(enc, d_p, student, config.student);
  return pass;
}

LossComponents total_loss(const PointCloud& cloud, const TextBank& text, const Checkpoint& teacher,
                          ParamSet& student, const TrainConfig& config,
                          const ClassWeights& weights) {
  const CloudCache cache = prepare_cloud(cloud, teacher, config);
  return total_loss(cloud, cache, text, student, config, weights, false).loss;
}

ClassWeights class_weights(const Dataset& dataset, std::size_t m) {
  std::vector<double> counts(m, 0.0);
  double total = 0.0;
  for (const auto& cloud : dataset.clouds) {
    if (!cloud.labels) continue;
    for (const LabelIndex l : *cloud.labels) {
      if (l >= m) throw LabelError("label index " + std::to_string(l) + " out of range");
      counts[l] += 1.0;
      total += 1.0;
    }
  }
  ClassWeights w{std::vector<double>(m, 1.0)};
  for (std::size_t c = 0; c < m; ++c) {
    if (counts[c] > 0.0) w.omega[c] = total / (static_cast<double>(m) * counts[c]);
  }
  return w;
}

ParamSet init_student(const TrainConfig& config) {
  ParamSet params = init_encoder_weights(config.student, mix_seed(config.seed, 1));
  params.merge(init_projector_weights(config.student.embed_dim, config.attention,
                                      mix_seed(config.seed, 2)));
  params.add(kTemperatureParam, Matrix(1, 1, Temperature::initial()), false);
  return params;
}

Checkpoint make_student_checkpoint(const ParamSet& params, const TrainConfig& config,
                                   const TextBank& text) {
  Checkpoint ckpt;
  ckpt.encoder = config.student;
  ckpt.attention = config.attention;
  for (const auto& [name, e] : params) ckpt.params.add(name, e.value, e.decay);
  ckpt.meta = {{"train_config", to_json(config)},
               {"head",
                {{"activation", to_string(config.activation)},
                 {"that_mode", to_string(config.that_mode)}}},
               {"labels", text.labels}};
  return ckpt;
}

Checkpoint make_teacher(const TrainConfig& config, std::uint64_t seed) {
  Checkpoint t;
  t.encoder = config.student.teacher_variant();
  t.attention = config.attention;
  t.params = init_encoder_weights(t.encoder, mix_seed(seed, 11));
  t.params.merge(init_projector_weights(t.encoder.embed_dim, config.attention, mix_seed(seed, 12)));
  t.meta = {{"fixture_seed", seed}};
  return t;
}

nlohmann::json to_json(const EpochRecord& r) {
  return {{"epoch", r.epoch},
          {"L_total", r.loss.total},
          {"L_point_wise", r.loss.point_wise},
          {"L_att_transfer", r.loss.att_transfer},
          {"L_geo_transfer", r.loss.geo_transfer},
          {"train_accuracy", r.train_accuracy},
          {"tau", r.tau}};
}

std::string report_jsonl(const TrainReport& report) {
  std::string out;
  for (const auto& r : report.epochs) out += to_json(r).dump() + "\n";
  return out;
}

namespace {

void check_startup(const Dataset& dataset, const TextBank& text, const Checkpoint& teacher,
                   const TrainConfig& config) {
  config.validate();
  text.validate();
  if (dataset.clouds.empty()) throw ConfigError("training dataset is empty");
  if (!teacher.attention) throw ConfigError("teacher checkpoint has no projector");
  const std::size_t dim = config.student.embed_dim;
  if (teacher.encoder.embed_dim != dim) {
    throw DimensionError("teacher embed_dim " + std::to_string(teacher.encoder.embed_dim) +
                         " differs from student embed_dim " + std::to_string(dim));
  }
  if (text.dim() != dim) {
    throw DimensionError("text bank dim " + std::to_string(text.dim()) +
                         " differs from embed_dim " + std::to_string(dim));
  }
  if (teacher.attention->head_dim != config.attention.head_dim) {
    throw DimensionError("teacher head_dim " + std::to_string(teacher.attention->head_dim) +
                         " differs from student head_dim " +
                         std::to_string(config.attention.head_dim));
  }
  if (text.size() != dataset.manifest.labels.size()) {
    throw DimensionError("text bank has " + std::to_string(text.size()) +
                         " labels, dataset has " +
                         std::to_string(dataset.manifest.labels.size()));
  }
  for (const auto& cloud : dataset.clouds) {
    if (!cloud.labels) throw ConfigError("training dataset contains an unlabeled cloud");
    cloud.validate(text.size());
  }
}

}  // namespace

TrainResult train(const Dataset& dataset, const TextBank& text, const Checkpoint& teacher,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  check_startup(dataset, text, teacher, config);
  ParamSet student = init_student(config);
  const ClassWeights weights = class_weights(dataset, text.size());

  std::vector<CloudCache> caches;
  caches.reserve(dataset.size());
  for (const auto& cloud : dataset.clouds) caches.push_back(prepare_cloud(cloud, teacher, config));

  TrainResult result;
  AdamState adam;
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle(mix_seed(config.seed, 1000 + epoch));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.index(i)]);

    EpochRecord record;
    record.epoch = epoch;
    std::size_t correct = 0;
    std::size_t points = 0;
    for (std::size_t start = 0, batch = 0; start < order.size();
         start += config.batch_size, ++batch) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const double scale = 1.0 / static_cast<double>(stop - start);
      student.zero_grad();
      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t idx = order[b];
        const PointCloud& cloud = dataset.clouds[idx];
        const CloudPass pass =
            total_loss(cloud, caches[idx], text, student, config, weights, true, scale);
        if (!std::isfinite(pass.loss.total)) {
          throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch));
        }
        record.loss.total += pass.loss.total;
        record.loss.point_wise += pass.loss.point_wise;
        record.loss.att_transfer += pass.loss.att_transfer;
        record.loss.geo_transfer += pass.loss.geo_transfer;
        for (std::size_t j = 0; j < pass.predictions.size(); ++j) {
          correct += pass.predictions[j] == (*cloud.labels)[j] ? 1 : 0;
        }
        points += pass.predictions.size();
      }
      try {
        adam_step(student, adam, config.lr, config.weight_decay);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batch));
      }
    }
    const double clouds = static_cast<double>(dataset.size());
    record.loss.total /= clouds;
    record.loss.point_wise /= clouds;
    record.loss.att_transfer /= clouds;
    record.loss.geo_transfer /= clouds;
    record.train_accuracy = static_cast<double>(correct) / static_cast<double>(points);
    record.tau = student.value(kTemperatureParam)(0, 0);
    result.report.epochs.push_back(record);
    if (on_epoch) on_epoch(record);
  }

  // the checkpoint stores binary32; return what a reload would see
  result.student = make_student_checkpoint(truncate_to_f32(student), config, text);
  return result;
}

DatasetLoss dataset_loss(const Dataset& dataset, const TextBank& text, const Checkpoint& teacher,
                         const ParamSet& student, const TrainConfig& config) {
  const ClassWeights weights = class_weights(dataset, text.size());
  ParamSet params;
  params.merge(student);
  DatasetLoss out;
  std::size_t correct = 0;
  std::size_t points = 0;
  for (const auto& cloud : dataset.clouds) {
    const CloudCache cache = prepare_cloud(cloud, teacher, config);
    const CloudPass pass = total_loss(cloud, cache, text, params, config, weights, false);
    out.loss.total += pass.loss.total;
    out.loss.point_wise += pass.loss.point_wise;
    out.loss.att_transfer += pass.loss.att_transfer;
    out.loss.geo_transfer += pass.loss.geo_transfer;
    for (std::size_t j = 0; j < pass.predictions.size(); ++j) {
      correct += pass.predictions[j] == (*cloud.labels)[j] ? 1 : 0;
    }
    points += pass.predictions.size();
  }
  const double n = static_cast<double>(dataset.size());
  out.loss.total /= n;
  out.loss.point_wise /= n;
  out.loss.att_transfer /= n;
  out.loss.geo_transfer /= n;
  out.accuracy = points == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(points);
  return out;
}

}  // namespace ovad
