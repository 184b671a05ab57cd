// SPDX-License-Identifier: Apache-2.0
#include "ovad/cli.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ovad/binio.hpp"
#include "ovad/checkpoint.hpp"
#include "ovad/datagen.hpp"
#include "ovad/error.hpp"
#include "ovad/evalmetrics.hpp"
#include "ovad/gradsuite.hpp"
#include "ovad/trainer.hpp"

namespace ovad::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    if (first == std::string::npos) continue;
    parts.push_back(item.substr(first, last - first + 1));
  }
  return parts;
}

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string s;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) s += sep;
    s += items[i];
  }
  return s;
}

// Used for usage-level problems discovered after parsing (bad enum text,
// missing required combinations).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::uint64_t seed = 0;
  std::string preset = "desk";
  std::string out;

  // gen-data
  std::size_t num_clouds = 16;
  std::size_t points = 0;
  bool partial_view = false;
  bool canonical_pose = false;
  std::string families;

  // gen-textbank
  std::string labels;
  std::size_t dim = 0;
  std::string synonyms;

  // train / eval / predict / dump-embeddings
  std::string data;
  std::string textbank;
  std::string teacher;
  std::string ckpt;
  double lambda_a = 0.9;
  double lambda_t = 0.7;
  double lr = 1e-3;
  double weight_decay = 1e-4;
  std::size_t epochs = 0;
  std::size_t batch_size = 0;
  double r = 0.25;
  std::size_t k = 16;
  std::string activation = "sigmoid";
  std::string geo_norm = "mse";
  std::string distill_target = "omega";
  std::string that_mode = "literal";
  std::optional<std::size_t> cloud;

  // gradcheck
  double tol = 1e-4;
  double h = 1e-5;
};

struct Context {
  Options opt;
  std::ostream& out;
  std::ostream& err;
  CLI::App* sub = nullptr;

  bool given(const std::string& flag) const { return sub->count(flag) > 0; }
};

void emit(Context& ctx, const json& j) { ctx.out << j.dump(2) << "\n"; }

TrainConfig resolve_train_config(Context& ctx) {
  const Options& o = ctx.opt;
  TrainConfig cfg = preset(o.preset).train;
  cfg.seed = o.seed;
  if (ctx.given("--lambda-a")) cfg.lambda_a = o.lambda_a;
  if (ctx.given("--lambda-t")) cfg.lambda_t = o.lambda_t;
  if (ctx.given("--lr")) cfg.lr = o.lr;
  if (ctx.given("--weight-decay")) cfg.weight_decay = o.weight_decay;
  if (ctx.given("--epochs")) cfg.epochs = o.epochs;
  if (ctx.given("--batch-size")) cfg.batch_size = o.batch_size;
  if (ctx.given("--r")) cfg.r = o.r;
  if (ctx.given("--k")) cfg.k = o.k;
  cfg.activation = parse_activation(o.activation);
  cfg.geo_norm = parse_geo_norm(o.geo_norm);
  cfg.distill_target = parse_distill_target(o.distill_target);
  cfg.that_mode = parse_that_mode(o.that_mode);
  cfg.validate();
  return cfg;
}

// Orders the bank like the dataset's labels when it holds all of them;
// otherwise rows are matched by position (open-vocabulary banks).
TextBank align_bank(const TextBank& bank, const Dataset& data, const std::string& bank_path) {
  bool all_present = true;
  for (const auto& l : data.manifest.labels) all_present = all_present && bank.index_of(l).has_value();
  if (all_present) return bank.select(data.manifest.labels);
  if (bank.size() != data.manifest.labels.size()) {
    throw LabelError(bank_path + ": text bank has " + std::to_string(bank.size()) +
                     " labels and does not cover the dataset's " +
                     std::to_string(data.manifest.labels.size()) + " labels [" +
                     join(data.manifest.labels, ", ") + "]");
  }
  return bank;
}

void require(Context& ctx, const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string(flag) + " is required for " + ctx.sub->get_name());
}

int cmd_gen_data(Context& ctx) {
  const Options& o = ctx.opt;
  require(ctx, o.out, "--out");
  const Preset p = preset(o.preset);
  DatasetOptions d;
  d.num_clouds = o.num_clouds;
  d.n_points = ctx.given("--points") ? o.points : p.n_points;
  d.partial_view = o.partial_view;
  d.canonical_pose = o.canonical_pose;
  d.seed = o.seed;
  if (!o.families.empty()) {
    d.families.clear();
    for (const auto& f : split(o.families, ',')) d.families.push_back(parse_shape_family(f));
  }
  const Dataset data = generate_dataset(d);
  write_dataset(data, o.out);

  std::vector<std::string> fams;
  for (const auto f : d.families) fams.emplace_back(to_string(f));
  emit(ctx, {{"command", "gen-data"},
             {"out", o.out},
             {"config",
              {{"preset", o.preset},
               {"seed", o.seed},
               {"num_clouds", d.num_clouds},
               {"points", d.n_points},
               {"protocol", to_string(data.manifest.protocol)},
               {"canonical_pose", d.canonical_pose},
               {"families", fams}}},
             {"labels", data.manifest.labels}});
  ctx.err << "wrote " << data.size() << " clouds x " << d.n_points << " points to " << o.out << "\n";
  return 0;
}

int cmd_gen_textbank(Context& ctx) {
  const Options& o = ctx.opt;
  require(ctx, o.out, "--out");
  std::vector<std::string> labels;
  if (!o.labels.empty()) {
    labels = split(o.labels, ',');
  } else if (!o.data.empty()) {
    labels = read_dataset(o.data).manifest.labels;
  } else {
    labels = default_affordance_labels();
  }
  std::vector<std::vector<std::string>> groups;
  for (const auto& g : split(o.synonyms, ';')) {
    auto members = split(g, ',');
    if (!members.empty()) groups.push_back(std::move(members));
  }
  // A synonym that is not already in the label list joins the bank.
  for (const auto& g : groups) {
    for (const auto& s : g) {
      if (std::find(labels.begin(), labels.end(), s) == labels.end()) labels.push_back(s);
    }
  }
  const std::size_t dim = ctx.given("--dim") ? o.dim : preset(o.preset).train.student.embed_dim;
  const TextBank bank = gen_textbank(labels, dim, o.seed, groups);

  fs::path path = o.out;
  if (path.extension() != ".json") path /= "textbank.json";
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  save_textbank(bank, path);

  json jg = json::array();
  for (const auto& g : groups) jg.push_back(g);
  emit(ctx, {{"command", "gen-textbank"},
             {"out", path.string()},
             {"config",
              {{"preset", o.preset}, {"seed", o.seed}, {"dim", dim}, {"synonyms", jg}}},
             {"labels", bank.labels}});
  ctx.err << "wrote " << bank.size() << " label embeddings (dim " << dim << ") to " << path.string()
          << "\n";
  return 0;
}

int cmd_gen_teacher(Context& ctx) {
  const Options& o = ctx.opt;
  require(ctx, o.out, "--out");
  const TrainConfig cfg = preset(o.preset).train;
  const Checkpoint teacher = make_teacher(cfg, o.seed);
  fs::path path = o.out;
  if (path.extension() != ".ckpt") path /= "teacher.ckpt";
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  save_checkpoint(teacher, path);
  emit(ctx, {{"command", "gen-teacher"},
             {"out", path.string()},
             {"config", {{"preset", o.preset}, {"seed", o.seed}}},
             {"encoder", to_json(teacher.encoder)},
             {"attention", to_json(*teacher.attention)},
             {"parameters", teacher.params.parameter_count()}});
  ctx.err << "wrote teacher (" << teacher.params.parameter_count() << " parameters) to "
          << path.string() << "\n";
  return 0;
}

int cmd_train(Context& ctx) {
  const Options& o = ctx.opt;
  require(ctx, o.data, "--data");
  require(ctx, o.textbank, "--textbank");
  require(ctx, o.teacher, "--teacher");
  require(ctx, o.out, "--out");
  const TrainConfig cfg = resolve_train_config(ctx);
  const Dataset data = read_dataset(o.data);
  const TextBank bank = align_bank(load_textbank(o.textbank), data, o.textbank);
  const Checkpoint teacher = load_checkpoint(o.teacher, cfg.student.embed_dim);

  ctx.err << std::setw(6) << "epoch" << std::setw(12) << "L_total" << std::setw(12) << "L_pw"
          << std::setw(12) << "L_att" << std::setw(12) << "L_geo" << std::setw(10) << "acc"
          << std::setw(10) << "tau" << "\n";
  const auto on_epoch = [&](const EpochRecord& e) {
    ctx.err << std::setw(6) << e.epoch << std::setprecision(5) << std::setw(12) << e.loss.total
            << std::setw(12) << e.loss.point_wise << std::setw(12) << e.loss.att_transfer
            << std::setw(12) << e.loss.geo_transfer << std::setw(10) << e.train_accuracy
            << std::setw(10) << e.tau << "\n";
  };
  const TrainResult result = train(data, bank, teacher, cfg, on_epoch);

  const fs::path dir = o.out;
  fs::create_directories(dir);
  save_checkpoint(result.student, dir / "student.ckpt");
  const std::string jsonl = report_jsonl(result.report);
  binio::write_file(dir / "report.jsonl", jsonl);
  const json resolved = {{"preset", o.preset},
                         {"data", o.data},
                         {"textbank", o.textbank},
                         {"teacher", o.teacher},
                         {"train", to_json(cfg)}};
  binio::write_file(dir / "config.json", resolved.dump(2) + "\n");

  json summary = {{"command", "train"},
                  {"out", dir.string()},
                  {"checkpoint", (dir / "student.ckpt").string()},
                  {"config", resolved}};
  if (!result.report.epochs.empty()) summary["final"] = to_json(result.report.epochs.back());
  emit(ctx, summary);
  return 0;
}

int cmd_eval(Context& ctx) {
  const Options& o = ctx.opt;
  require(ctx, o.data, "--data");
  require(ctx, o.textbank, "--textbank");
  require(ctx, o.ckpt, "--ckpt");
  const Dataset data = read_dataset(o.data);
  const TextBank bank = align_bank(load_textbank(o.textbank), data, o.textbank);
  const Checkpoint student = load_checkpoint(o.ckpt);
  const TextHeadConfig head = head_config_from(student);
  const EvalReport report = evaluate(data, bank, student, head);

  json j = to_json(report);
  j["command"] = "eval";
  j["inputs"] = {{"data", o.data}, {"textbank", o.textbank}, {"ckpt", o.ckpt}};
  if (student.meta.contains("train_config")) j["train_config"] = student.meta["train_config"];
  const std::string text = j.dump(2) + "\n";
  if (!o.out.empty()) {
    const fs::path path = o.out;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    binio::write_file(path, text);
  }
  ctx.out << text;

  const auto pct = [](double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << 100.0 * v;
    return s.str();
  };
  ctx.err << std::left << std::setw(14) << "label" << std::right << std::setw(9) << "IoU"
          << std::setw(9) << "Acc" << "\n";
  for (std::size_t c = 0; c < report.labels.size(); ++c) {
    const auto& iou = report.metrics.class_iou[c];
    const auto& acc = report.metrics.class_acc[c];
    ctx.err << std::left << std::setw(14) << report.labels[c] << std::right << std::setw(9)
            << (iou ? pct(*iou) : "-") << std::setw(9) << (acc ? pct(*acc) : "-") << "\n";
  }
  ctx.err << "mIoU " << pct(report.metrics.miou) << "  Acc " << pct(report.metrics.acc)
          << "  mAcc " << pct(report.metrics.macc) << "\n";
  return 0;
}

int cmd_predict(Context& ctx) {
  const Options& o = ctx.opt;
  require(ctx, o.data, "--data");
  require(ctx, o.textbank, "--textbank");
  require(ctx, o.ckpt, "--ckpt");
  const Dataset data = read_dataset(o.data);
  TextBank bank = load_textbank(o.textbank);
  if (!o.labels.empty()) bank = bank.select(split(o.labels, ','));
  const Checkpoint student = load_checkpoint(o.ckpt);
  const TextHeadConfig head = head_config_from(student);

  std::vector<std::size_t> which;
  if (o.cloud) {
    if (*o.cloud >= data.size()) {
      throw UsageError("--cloud " + std::to_string(*o.cloud) + " out of range; " + o.data +
                       " has " + std::to_string(data.size()) + " clouds");
    }
    which.push_back(*o.cloud);
  } else {
    for (std::size_t i = 0; i < data.size(); ++i) which.push_back(i);
  }

  json clouds = json::array();
  for (const std::size_t i : which) {
    const auto pred = predict_cloud(data.clouds[i], bank, student, head);
    std::vector<std::string> names;
    names.reserve(pred.size());
    for (const auto p : pred) names.push_back(bank.labels[p]);
    clouds.push_back({{"cloud", i}, {"labels", names}});
    ctx.err << "cloud " << i << ": " << pred.size() << " points\n";
  }
  emit(ctx, {{"command", "predict"},
             {"inputs", {{"data", o.data}, {"textbank", o.textbank}, {"ckpt", o.ckpt}}},
             {"label_set", bank.labels},
             {"head", {{"activation", to_string(head.activation)},
                       {"that_mode", to_string(head.that_mode)}}},
             {"clouds", clouds}});
  return 0;
}

int cmd_gradcheck(Context& ctx) {
  const Options& o = ctx.opt;
  GradSuiteOptions g;
  g.seed = o.seed;
  g.tol = o.tol;
  g.h = o.h;
  g.activation = parse_activation(o.activation);
  g.that_mode = parse_that_mode(o.that_mode);
  g.geo_norm = parse_geo_norm(o.geo_norm);
  g.distill_target = parse_distill_target(o.distill_target);
  const GradSuiteResult result = run_gradient_suite(g);

  json j = to_json(result, g.tol);
  j["command"] = "gradcheck";
  j["config"] = {{"preset", o.preset},
                 {"seed", o.seed},
                 {"points", g.points},
                 {"embed_dim", g.embed_dim},
                 {"head_dim", g.head_dim},
                 {"labels", g.labels},
                 {"h", g.h},
                 {"tol", g.tol},
                 {"activation", to_string(g.activation)},
                 {"that_mode", to_string(g.that_mode)},
                 {"geo_norm", to_string(g.geo_norm)},
                 {"distill_target", to_string(g.distill_target)}};
  emit(ctx, j);

  for (const auto& [name, rep] : result.checks) {
    ctx.err << std::left << std::setw(16) << name << std::right << std::scientific
            << std::setprecision(3) << rep.max_rel_error << "  (" << rep.worst_param << ")\n";
  }
  ctx.err << "max relative gradient error: " << std::scientific << std::setprecision(3)
          << result.max_rel_error << "  " << (result.passed ? "PASS" : "FAIL") << "\n";
  return result.passed ? 0 : 2;
}

int cmd_dump_embeddings(Context& ctx) {
  const Options& o = ctx.opt;
  require(ctx, o.data, "--data");
  require(ctx, o.ckpt, "--ckpt");
  require(ctx, o.out, "--out");
  const Dataset data = read_dataset(o.data);
  const Checkpoint student = load_checkpoint(o.ckpt);

  // embeddings.bin: N_total x D binary32; labels.bin: N_total uint16;
  // clouds.bin: N_total uint32 cloud index.
  std::string emb_bytes;
  std::string label_bytes;
  std::string cloud_bytes;
  std::size_t total = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const PointCloud& cloud = data.clouds[i];
    const Matrix e = encode(cloud, student.params, student.encoder);
    for (const double v : e.values()) binio::append_f32(emb_bytes, v);
    for (std::size_t p = 0; p < cloud.size(); ++p) {
      binio::append_u16(label_bytes, cloud.labels ? (*cloud.labels)[p] : 0);
      binio::append_u32(cloud_bytes, static_cast<std::uint32_t>(i));
    }
    total += cloud.size();
  }
  const fs::path dir = o.out;
  fs::create_directories(dir);
  binio::write_file(dir / "embeddings.bin", emb_bytes);
  binio::write_file(dir / "labels.bin", label_bytes);
  binio::write_file(dir / "clouds.bin", cloud_bytes);
  const json manifest = {{"points", total},
                         {"dim", student.encoder.embed_dim},
                         {"labels", data.manifest.labels},
                         {"embeddings_file", "embeddings.bin"},
                         {"labels_file", "labels.bin"},
                         {"clouds_file", "clouds.bin"},
                         {"inputs", {{"data", o.data}, {"ckpt", o.ckpt}}}};
  binio::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  emit(ctx, {{"command", "dump-embeddings"}, {"out", dir.string()}, {"manifest", manifest}});
  ctx.err << "wrote " << total << " embeddings of dim " << student.encoder.embed_dim << " to "
          << dir.string() << "\n";
  return 0;
}

std::string both(const std::string& what, const std::string& desk, const std::string& paper) {
  return what + " [desk: " + desk + ", paper: " + paper + "]";
}

void add_common(CLI::App* app, Options& o) {
  app->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  app->add_option("--preset", o.preset, "Default bundle: desk or paper")
      ->check(CLI::IsMember({"desk", "paper"}))
      ->capture_default_str();
}

void add_head_flags(CLI::App* app, Options& o) {
  app->add_option("--activation", o.activation, "Correlation activation: sigmoid, relu, identity")
      ->capture_default_str();
  app->add_option("--that-mode", o.that_mode,
                  "Text attention feature: literal, weighted_mean, direct (relevance only)")
      ->capture_default_str();
  app->add_option("--geo-norm", o.geo_norm, "Relation distance: mse or l2")->capture_default_str();
  app->add_option("--distill-target", o.distill_target, "Attention target: omega or weights")
      ->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const Preset desk = preset("desk");
  const Preset paper = preset("paper");
  const auto num = [](auto v) { return std::to_string(v); };

  CLI::App app{"Open-vocabulary affordance detection with distilled point encoders", "ovad"};
  app.require_subcommand(1, 1);
  app.failure_message(CLI::FailureMessage::help);
  Context ctx{Options{}, out, err};
  Options& o = ctx.opt;

  auto* gen_data = app.add_subcommand("gen-data", "Generate a synthetic labeled point-cloud set");
  add_common(gen_data, o);
  gen_data->add_option("--out", o.out, "Output directory")->required();
  gen_data->add_option("--num-clouds", o.num_clouds, "Number of clouds")->capture_default_str();
  gen_data->add_option("--points", o.points,
                       both("Points per cloud", num(desk.n_points), num(paper.n_points)));
  gen_data->add_flag("--partial-view", o.partial_view, "Half-space crop each cloud, then resample");
  gen_data->add_flag("--canonical-pose", o.canonical_pose, "No random yaw or tilt");
  gen_data->add_option("--families", o.families,
                       "Comma-separated shape families (mug,table,bottle,knife)");

  auto* gen_text = app.add_subcommand("gen-textbank", "Generate label embeddings");
  add_common(gen_text, o);
  gen_text->add_option("--out", o.out, "Output JSON path or directory")->required();
  gen_text->add_option("--labels", o.labels, "Comma-separated labels (default: dataset or built-in)");
  gen_text->add_option("--data", o.data, "Take labels from this dataset");
  gen_text->add_option("--dim", o.dim,
                       both("Embedding dimension", num(desk.train.student.embed_dim),
                            num(paper.train.student.embed_dim)));
  gen_text->add_option("--synonyms", o.synonyms, "Synonym groups, e.g. \"grasp,hold;pour,tip\"");

  auto* gen_teacher = app.add_subcommand("gen-teacher", "Write a frozen teacher checkpoint");
  add_common(gen_teacher, o);
  gen_teacher->add_option("--out", o.out, "Output .ckpt path or directory")->required();

  auto* train_cmd = app.add_subcommand("train", "Train a student encoder and text head");
  add_common(train_cmd, o);
  train_cmd->add_option("--out", o.out, "Output directory")->required();
  train_cmd->add_option("--data", o.data, "Dataset directory")->required();
  train_cmd->add_option("--textbank", o.textbank, "Text bank JSON or directory")->required();
  train_cmd->add_option("--teacher", o.teacher, "Teacher checkpoint")->required();
  train_cmd->add_option("--lambda-a", o.lambda_a, "Attention-transfer weight")->capture_default_str();
  train_cmd->add_option("--lambda-t", o.lambda_t, "Relation-transfer weight")->capture_default_str();
  train_cmd->add_option("--lr", o.lr,
                        both("Adam learning rate", "0.01", "0.001"));
  train_cmd->add_option("--weight-decay", o.weight_decay, "Decoupled weight decay")
      ->capture_default_str();
  train_cmd->add_option("--epochs", o.epochs,
                        both("Epochs", num(desk.train.epochs), num(paper.train.epochs)));
  train_cmd->add_option("--batch-size", o.batch_size,
                        both("Clouds per step", num(desk.train.batch_size),
                             num(paper.train.batch_size)));
  train_cmd->add_option("--r", o.r, "FPS anchor ratio")->capture_default_str();
  train_cmd->add_option("--k", o.k, "Neighbors per anchor")->capture_default_str();
  add_head_flags(train_cmd, o);

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a student on a labeled dataset");
  add_common(eval_cmd, o);
  eval_cmd->add_option("--data", o.data, "Dataset directory")->required();
  eval_cmd->add_option("--textbank", o.textbank, "Text bank JSON or directory")->required();
  eval_cmd->add_option("--ckpt", o.ckpt, "Student checkpoint")->required();
  eval_cmd->add_option("--out", o.out, "Also write the JSON report here");

  auto* predict_cmd = app.add_subcommand("predict", "Per-point labels from a chosen label set");
  add_common(predict_cmd, o);
  predict_cmd->add_option("--data", o.data, "Dataset directory")->required();
  predict_cmd->add_option("--textbank", o.textbank, "Text bank JSON or directory")->required();
  predict_cmd->add_option("--ckpt", o.ckpt, "Student checkpoint")->required();
  predict_cmd->add_option("--labels", o.labels, "Comma-separated subset of the bank");
  predict_cmd->add_option("--cloud", o.cloud, "Only this cloud index");
  predict_cmd->add_option("--out", o.out, "Unused; accepted for uniformity");

  auto* grad_cmd = app.add_subcommand(
      "gradcheck", "Finite-difference check of every loss term (n=32, D=8, d_h=8, m=4)");
  add_common(grad_cmd, o);
  grad_cmd->add_option("--tol", o.tol, "Relative error tolerance")->capture_default_str();
  grad_cmd->add_option("--step", o.h, "Central difference step")->capture_default_str();
  grad_cmd->add_option("--out", o.out, "Unused; accepted for uniformity");
  add_head_flags(grad_cmd, o);

  auto* dump_cmd = app.add_subcommand(
      "dump-embeddings", "Write per-point student embeddings and labels as binary");
  add_common(dump_cmd, o);
  dump_cmd->add_option("--data", o.data, "Dataset directory")->required();
  dump_cmd->add_option("--ckpt", o.ckpt, "Student checkpoint")->required();
  dump_cmd->add_option("--out", o.out, "Output directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  ctx.sub = app.get_subcommands().front();
  const std::string name = ctx.sub->get_name();
  try {
    if (name == "gen-data") return cmd_gen_data(ctx);
    if (name == "gen-textbank") return cmd_gen_textbank(ctx);
    if (name == "gen-teacher") return cmd_gen_teacher(ctx);
    if (name == "train") return cmd_train(ctx);
    if (name == "eval") return cmd_eval(ctx);
    if (name == "predict") return cmd_predict(ctx);
    if (name == "gradcheck") return cmd_gradcheck(ctx);
    if (name == "dump-embeddings") return cmd_dump_embeddings(ctx);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << ctx.sub->help();
    return 1;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n\n" << ctx.sub->help();
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace ovad::cli
